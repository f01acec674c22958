//! Spinodal fluctuations `r^(k)`, the forcing integrals `D_k`, the impact profile
//! and the essential/negligible and regular/residual splittings.
//!
//! All heat flows use the Neumann semigroup of the simulated window, so the
//! superposition identity `p(t) = G(t)p(0) − Σ_k r^(k)(t)` is exact for the
//! continuous-time dynamics on that window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{serde_time, TransitionLog, TransitionRecord};
use crate::kernel::{neumann_laplacian, NeumannKernel};
use crate::lattice::Trajectory;
use crate::potential::PotentialParams;

pub const PROFILE_TOL: f64 = 1e-16;

/// `ρ_d = 2p*/(1+2κ)^|d|` for `0 ≤ d ≤ radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactProfile {
    pub kappa: f64,
    pub p_star: f64,
    pub values: Vec<f64>,
}

/// `ceil(ln(2p*/tol)/ln(1+2κ))`.
pub fn profile_radius(kappa: f64, tol: f64) -> usize {
    let p_star = kappa / (1.0 + kappa);
    ((2.0 * p_star / tol).ln() / (1.0 + 2.0 * kappa).ln()).ceil().max(0.0) as usize
}

pub fn impact_profile(kappa: f64) -> Result<ImpactProfile> {
    impact_profile_with_tol(kappa, PROFILE_TOL)
}

pub fn impact_profile_with_tol(kappa: f64, tol: f64) -> Result<ImpactProfile> {
    let params = PotentialParams::new(kappa)?;
    if !(tol > 0.0) {
        return Err(Error::Domain("profile tolerance must be positive".into()));
    }
    let r = profile_radius(kappa, tol);
    let q = 1.0 / (1.0 + 2.0 * kappa);
    let mut values = Vec::with_capacity(r + 1);
    let mut v = 2.0 * params.p_star;
    for _ in 0..=r {
        values.push(v);
        v *= q;
    }
    Ok(ImpactProfile { kappa, p_star: params.p_star, values })
}

impl ImpactProfile {
    pub fn radius(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, d: i64) -> f64 {
        self.values.get(d.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Mass of the truncated profile, summed from the tails inward.
    pub fn mass(&self) -> f64 {
        let tails: f64 = self.values[1..].iter().rev().sum();
        self.values[0] + 2.0 * tails
    }

    /// Profile centred at position `c` of an `n`-site Neumann window, with the
    /// parts beyond the ends reflected back so that the mass is kept.
    pub fn on_lattice(&self, n: usize, c: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let r = self.radius() as i64;
        for d in -r..=r {
            out[reflect(c as i64 + d, n)] += self.get(d);
        }
        out
    }
}

fn reflect(m: i64, n: usize) -> usize {
    let m = m.rem_euclid(2 * n as i64) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctOptions {
    pub kernel_tol: f64,
    /// Relative accuracy target for the `D_k` quadrature.
    pub quad_rel_tol: f64,
    /// Cap on the number of interval halvings for `D_k`.
    pub quad_max_halvings: usize,
    /// Keep the summed fields `Q`, `R_reg`, `R_res`, `R_neg` for every snapshot.
    pub keep_fields: bool,
}

impl Default for FluctOptions {
    fn default() -> Self {
        Self { kernel_tol: crate::kernel::DEFAULT_TOLERANCE, quad_rel_tol: 0.01, quad_max_halvings: 12, keep_fields: true }
    }
}

fn snapshot_p(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let s = traj
        .at_time(t)
        .ok_or_else(|| Error::Events(format!("no snapshot stored at t={t}")))?;
    Ok(traj.p_of(s))
}

fn flow(n: usize, t: f64, field: &[f64], tol: f64) -> Result<Vec<f64>> {
    if t == 0.0 {
        return Ok(field.to_vec());
    }
    Ok(NeumannKernel::new(n, t, tol)?.apply(field))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Per-transition data shared by all time evaluations.
#[derive(Debug, Clone)]
struct KData {
    rec: TransitionRecord,
    p_hash: Vec<f64>,
    /// `r^(k)(t_k^*)`, absent for unfinished transitions.
    r_star: Option<Vec<f64>>,
    rho: Vec<f64>,
}

impl KData {
    fn new(traj: &Trajectory, rec: &TransitionRecord, profile: &ImpactProfile, tol: f64) -> Result<Self> {
        if !rec.t_hash.is_finite() || rec.t_hash > traj.t_fin {
            return Err(Error::Events(format!("transition {} has no entrance inside the run", rec.k)));
        }
        let n = traj.len_sites();
        let pos = traj.pos(rec.k);
        let p_hash = snapshot_p(traj, rec.t_hash)?;
        let r_star = if rec.completed() && rec.t_star <= traj.t_fin {
            let q = flow(n, rec.t_star - rec.t_hash, &p_hash, tol)?;
            Some(sub(&q, &snapshot_p(traj, rec.t_star)?))
        } else {
            None
        };
        Ok(Self { rec: rec.clone(), p_hash, r_star, rho: profile.on_lattice(n, pos) })
    }

    fn completed_by(&self, t: f64) -> bool {
        self.r_star.is_some() && t >= self.rec.t_star
    }

    /// `r^(k)(t)` given `p(t)`; `None` while identically zero.
    fn r_at(&self, t: f64, p: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
        let n = p.len();
        if t <= self.rec.t_hash {
            return Ok(None);
        }
        match &self.r_star {
            Some(rs) if t >= self.rec.t_star => Ok(Some(flow(n, t - self.rec.t_star, rs, tol)?)),
            _ => Ok(Some(sub(&flow(n, t - self.rec.t_hash, &self.p_hash, tol)?, p))),
        }
    }

    fn ess_at(&self, t: f64, n: usize, tol: f64) -> Result<Option<Vec<f64>>> {
        if !self.completed_by(t) {
            return Ok(None);
        }
        Ok(Some(flow(n, t - self.rec.t_star, &self.rho, tol)?))
    }
}

fn record(log: &TransitionLog, k: i64) -> Result<&TransitionRecord> {
    log.record(k).ok_or_else(|| Error::Events(format!("no transition record for k={k}")))
}

/// `q^(k)(t) = G(t − t_k^#)p(t_k^#)` on every snapshot, zero up to `t_k^#`.
pub fn compute_q(traj: &Trajectory, rec: &TransitionRecord, opts: &FluctOptions) -> Result<Vec<Vec<f64>>> {
    if rec.t_hash > traj.t_fin {
        return Err(Error::Events(format!("t_hash={} beyond the trajectory", rec.t_hash)));
    }
    let n = traj.len_sites();
    let p_hash = snapshot_p(traj, rec.t_hash)?;
    traj.snapshots
        .par_iter()
        .map(|s| if s.t < rec.t_hash { Ok(vec![0.0; n]) } else { flow(n, s.t - rec.t_hash, &p_hash, opts.kernel_tol) })
        .collect()
}

/// `r^(k)` on every snapshot.
pub fn compute_r(traj: &Trajectory, rec: &TransitionRecord, opts: &FluctOptions) -> Result<Vec<Vec<f64>>> {
    let profile = impact_profile(traj.kappa)?;
    let kd = KData::new(traj, rec, &profile, opts.kernel_tol)?;
    let n = traj.len_sites();
    traj.snapshots
        .par_iter()
        .map(|s| Ok(kd.r_at(s.t, &traj.p_of(s), opts.kernel_tol)?.unwrap_or_else(|| vec![0.0; n])))
        .collect()
}

/// Cross-check of `q^(k)(t)` against `G(t)p(0) − Σ_{l<k} G(t − t_l^*) r^(l)(t_l^*)`;
/// returns the sup-norm difference relative to `sup |q^(k)(t)|`.
pub fn q_recursion_residual(traj: &Trajectory, log: &TransitionLog, k: i64, t: f64, opts: &FluctOptions) -> Result<f64> {
    let rec = record(log, k)?;
    if t < rec.t_hash {
        return Err(Error::Domain(format!("t={t} precedes t_hash={}", rec.t_hash)));
    }
    let n = traj.len_sites();
    let tol = opts.kernel_tol;
    let q = flow(n, t - rec.t_hash, &snapshot_p(traj, rec.t_hash)?, tol)?;
    let profile = impact_profile(traj.kappa)?;
    let mut rhs = flow(n, t, &traj.p_of(traj.initial()), tol)?;
    for r in log.records.iter().filter(|r| r.k < k) {
        let kd = KData::new(traj, r, &profile, tol)?;
        let rs = kd.r_star.ok_or_else(|| Error::Events(format!("transition {} unfinished before {k}", r.k)))?;
        for (o, v) in rhs.iter_mut().zip(flow(n, t - r.t_star, &rs, tol)?) {
            *o -= v;
        }
    }
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    Ok(q.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkEstimate {
    pub value: f64,
    /// Richardson-type error estimate `|T_2m − T_m|/3`.
    pub error: f64,
    pub nodes: usize,
    pub resolved: bool,
    /// `|q^(k)_k(t_k^*) − p*|`, a lower bound for `D_k`.
    pub lower_bound: f64,
}

/// `D_k = ∫_{t_k^#}^{t_k^*} |q̇^(k)_k(s)| ds` with `q̇ = G(s − t_k^#)Δp(t_k^#)`,
/// by composite trapezoid rules with interval halving.
pub fn compute_d(traj: &Trajectory, rec: &TransitionRecord, opts: &FluctOptions) -> Result<DkEstimate> {
    if !rec.completed() || rec.t_star > traj.t_fin {
        return Err(Error::Events(format!("transition {} is not completed", rec.k)));
    }
    let n = traj.len_sites();
    let i = traj.pos(rec.k);
    let p_hash = snapshot_p(traj, rec.t_hash)?;
    let lap = neumann_laplacian(&p_hash);
    let len = rec.t_star - rec.t_hash;
    let rate = |s: f64| -> Result<f64> {
        if s == 0.0 {
            return Ok(lap[i].abs());
        }
        Ok(NeumannKernel::new(n, s, opts.kernel_tol)?.apply_at(&lap, 0, i).abs())
    };
    let q_star = flow(n, len, &p_hash, opts.kernel_tol)?[i];
    let lower_bound = (q_star - traj.params().p_star).abs();
    if len == 0.0 {
        return Ok(DkEstimate { value: 0.0, error: 0.0, nodes: 1, resolved: true, lower_bound });
    }
    let mut m = 8usize;
    let sum_ends = 0.5 * (rate(0.0)? + rate(len)?);
    let mut interior = 0.0;
    for j in 1..m {
        interior += rate(len * j as f64 / m as f64)?;
    }
    let mut prev = (sum_ends + interior) * len / m as f64;
    let mut out = DkEstimate { value: prev, error: f64::INFINITY, nodes: m + 1, resolved: false, lower_bound };
    for _ in 0..opts.quad_max_halvings {
        let mut mids = 0.0;
        for j in 0..m {
            mids += rate(len * (2 * j + 1) as f64 / (2 * m) as f64)?;
        }
        interior += mids;
        m *= 2;
        let cur = (sum_ends + interior) * len / m as f64;
        let err = (cur - prev).abs() / 3.0;
        out = DkEstimate { value: cur, error: err, nodes: m + 1, resolved: false, lower_bound };
        if err <= opts.quad_rel_tol * cur.abs() || err < 1e-14 {
            out.resolved = true;
            break;
        }
        prev = cur;
    }
    Ok(out)
}

/// Fills `d_k` of every completed record; one entry per record.
pub fn fill_d(traj: &Trajectory, log: &mut TransitionLog, opts: &FluctOptions) -> Result<Vec<Option<DkEstimate>>> {
    let est: Vec<Option<DkEstimate>> = log
        .records
        .par_iter()
        .map(|r| if r.completed() && r.t_star <= traj.t_fin { compute_d(traj, r, opts).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;
    for (r, e) in log.records.iter_mut().zip(&est) {
        r.d_k = e.map(|e| e.value);
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationDecomposition {
    pub k: i64,
    pub times: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub r_ess: Vec<Vec<f64>>,
    pub r_neg: Vec<Vec<f64>>,
    pub r_reg: Vec<Vec<f64>>,
    pub r_res: Vec<Vec<f64>>,
    pub d_k: Option<f64>,
    /// Length of the residual window in microscopic time.
    pub residual_window: f64,
}

/// Splits `r^(k)` (one field per snapshot) into essential/negligible and
/// regular/residual parts; the residual window is `[t_k^*, t_k^* + d_window)`.
pub fn split(
    traj: &Trajectory,
    r: Vec<Vec<f64>>,
    rec: &TransitionRecord,
    d_window: f64,
    opts: &FluctOptions,
) -> Result<FluctuationDecomposition> {
    if r.len() != traj.snapshots.len() {
        return Err(Error::Config("r must hold one field per snapshot".into()));
    }
    let n = traj.len_sites();
    let profile = impact_profile(traj.kappa)?;
    let rho = profile.on_lattice(n, traj.pos(rec.k));
    let done = rec.completed() && rec.t_star <= traj.t_fin;
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let r_ess: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| if done && t >= rec.t_star { flow(n, t - rec.t_star, &rho, opts.kernel_tol) } else { Ok(vec![0.0; n]) })
        .collect::<Result<_>>()?;
    let r_neg = r.iter().zip(&r_ess).map(|(a, b)| sub(a, b)).collect();
    let zero = vec![0.0; n];
    let mut r_reg = Vec::with_capacity(times.len());
    let mut r_res = Vec::with_capacity(times.len());
    for (t, e) in times.iter().zip(&r_ess) {
        if done && *t >= rec.t_star && *t < rec.t_star + d_window {
            r_res.push(e.clone());
            r_reg.push(zero.clone());
        } else {
            r_res.push(zero.clone());
            r_reg.push(e.clone());
        }
    }
    Ok(FluctuationDecomposition { k: rec.k, times, r, r_ess, r_neg, r_reg, r_res, d_k: rec.d_k, residual_window: d_window })
}

/// Full decomposition of transition `k`.
pub fn decompose(traj: &Trajectory, log: &TransitionLog, k: i64, opts: &FluctOptions) -> Result<FluctuationDecomposition> {
    let rec = record(log, k)?;
    let r = compute_r(traj, rec, opts)?;
    split(traj, r, rec, residual_window(log), opts)
}

/// `d_emp/ε` in microscopic time, infinite without a measured waiting time.
pub fn residual_window(log: &TransitionLog) -> f64 {
    log.d_emp().map(|d| d / log.epsilon).unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: i64,
    pub t_hash: f64,
    #[serde(with = "serde_time")]
    pub t_flat: f64,
    #[serde(with = "serde_time")]
    pub t_star: f64,
    pub d_k: Option<f64>,
    pub d_k_error: Option<f64>,
    pub d_k_resolved: Option<bool>,
    pub d_lower_bound: Option<f64>,
    /// `Σ_j |r^(k)_j(t_k^♭)|`.
    pub l1_at_flat: Option<f64>,
    /// `‖r^(k)(t_k^*) − ρ_{·−k}‖₁`.
    pub l1_profile_error: Option<f64>,
    /// Supremum of `Σ_j |r^(k)_j|` over snapshots in `[t_k^#, t_k^♭]`.
    pub sup_l1_excursion: f64,
    /// Supremum of `|r^(k)_j(t)|` over all snapshots and sites.
    pub sup_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub t: f64,
    pub completed: usize,
    /// `max_j |p_j − (G(t)p(0))_j + Σ_k r^(k)_j|`.
    pub superposition: f64,
    /// `Σ_j Σ_k r_ess`.
    pub ess_mass: f64,
    /// `Σ_j Σ_k |r_neg|`.
    pub neg_l1: f64,
    /// `Σ_j Σ_k |r_res|`.
    pub res_l1: f64,
    /// `Σ_j |∇₊ Σ_k r_reg|²`.
    pub reg_grad_l2: f64,
    pub sup_reg: f64,
    pub sup_res: f64,
    pub sup_neg: f64,
    /// Largest deviation of `r_ess + r_neg` from `r`, in ulps of `max(|r|, |r_ess|)`.
    pub split_ulps: f64,
}

/// Fields summed over `k`, one row per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctFields {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub r_reg: Vec<Vec<f64>>,
    pub r_res: Vec<Vec<f64>>,
    pub r_neg: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctAnalysis {
    pub epsilon: f64,
    pub kappa: f64,
    pub residual_window: f64,
    pub summaries: Vec<KSummary>,
    pub stats: Vec<SnapshotStats>,
    pub fields: Option<FluctFields>,
}

impl FluctAnalysis {
    pub fn max_superposition(&self) -> f64 {
        self.stats.iter().map(|s| s.superposition).fold(0.0, f64::max)
    }

    pub fn sum_d(&self) -> f64 {
        self.summaries.iter().filter_map(|s| s.d_k).sum()
    }
}

struct PerSnapshot {
    stats: SnapshotStats,
    q: Vec<f64>,
    reg: Vec<f64>,
    res: Vec<f64>,
    neg: Vec<f64>,
    /// Per transition: `(Σ_j |r|, sup_j |r|)`.
    per_k: Vec<(f64, f64)>,
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        f64::MIN_POSITIVE
    } else {
        f64::from_bits(a.to_bits() + 1) - a
    }
}

/// Decomposes every transition on every snapshot, fills `d_k` in `log`, and
/// collects the statistics used by the bound checks.
pub fn analyze(traj: &Trajectory, log: &mut TransitionLog, opts: &FluctOptions) -> Result<FluctAnalysis> {
    let tol = opts.kernel_tol;
    let n = traj.len_sites();
    let profile = impact_profile(traj.kappa)?;
    let d_est = fill_d(traj, log, opts)?;
    let kdata: Vec<KData> =
        log.records.iter().filter(|r| r.t_hash <= traj.t_fin).map(|r| KData::new(traj, r, &profile, tol)).collect::<Result<_>>()?;
    let window = residual_window(log);
    let p0 = traj.p_of(traj.initial());
    let rows: Vec<PerSnapshot> = traj
        .snapshots
        .par_iter()
        .map(|s| -> Result<PerSnapshot> {
            let t = s.t;
            let p = traj.p_of(s);
            let q = flow(n, t, &p0, tol)?;
            let mut total = vec![0.0; n];
            let mut reg = vec![0.0; n];
            let mut res = vec![0.0; n];
            let mut neg = vec![0.0; n];
            let mut st = SnapshotStats {
                t,
                completed: 0,
                superposition: 0.0,
                ess_mass: 0.0,
                neg_l1: 0.0,
                res_l1: 0.0,
                reg_grad_l2: 0.0,
                sup_reg: 0.0,
                sup_res: 0.0,
                sup_neg: 0.0,
                split_ulps: 0.0,
            };
            let mut per_k = Vec::with_capacity(kdata.len());
            for kd in &kdata {
                let Some(r) = kd.r_at(t, &p, tol)? else {
                    per_k.push((0.0, 0.0));
                    continue;
                };
                per_k.push((r.iter().map(|v| v.abs()).sum(), r.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
                for (a, b) in total.iter_mut().zip(&r) {
                    *a += b;
                }
                match kd.ess_at(t, n, tol)? {
                    Some(e) => {
                        st.completed += 1;
                        let residual = t < kd.rec.t_star + window;
                        for j in 0..n {
                            let ng = r[j] - e[j];
                            st.split_ulps = st.split_ulps.max(((e[j] + ng) - r[j]).abs() / ulp(r[j].abs().max(e[j].abs())));
                            neg[j] += ng;
                            st.neg_l1 += ng.abs();
                            st.ess_mass += e[j];
                            if residual {
                                res[j] += e[j];
                                st.res_l1 += e[j].abs();
                            } else {
                                reg[j] += e[j];
                            }
                        }
                    }
                    None => {
                        for j in 0..n {
                            neg[j] += r[j];
                            st.neg_l1 += r[j].abs();
                        }
                    }
                }
            }
            for j in 0..n {
                st.superposition = st.superposition.max((p[j] - q[j] + total[j]).abs());
                st.sup_reg = st.sup_reg.max(reg[j].abs());
                st.sup_res = st.sup_res.max(res[j].abs());
                st.sup_neg = st.sup_neg.max(neg[j].abs());
            }
            st.reg_grad_l2 = reg.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
            Ok(PerSnapshot { stats: st, q, reg, res, neg, per_k })
        })
        .collect::<Result<_>>()?;
    let mut summaries = Vec::with_capacity(kdata.len());
    for (idx, kd) in kdata.iter().enumerate() {
        let rec = &kd.rec;
        let est = log.records.iter().position(|r| r.k == rec.k).and_then(|i| d_est[i]);
        let mut sup_l1_excursion: f64 = 0.0;
        let mut sup_abs: f64 = 0.0;
        let mut l1_at_flat = None;
        for (s, row) in traj.snapshots.iter().zip(&rows) {
            let (l1, sup) = row.per_k[idx];
            sup_abs = sup_abs.max(sup);
            if s.t >= rec.t_hash && s.t <= rec.t_flat {
                sup_l1_excursion = sup_l1_excursion.max(l1);
            }
            if s.t == rec.t_flat {
                l1_at_flat = Some(l1);
            }
        }
        let l1_profile_error = kd.r_star.as_ref().map(|rs| rs.iter().zip(&kd.rho).map(|(a, b)| (a - b).abs()).sum());
        summaries.push(KSummary {
            k: rec.k,
            t_hash: rec.t_hash,
            t_flat: rec.t_flat,
            t_star: rec.t_star,
            d_k: est.map(|e| e.value),
            d_k_error: est.map(|e| e.error),
            d_k_resolved: est.map(|e| e.resolved),
            d_lower_bound: est.map(|e| e.lower_bound),
            l1_at_flat,
            l1_profile_error,
            sup_l1_excursion,
            sup_abs,
        });
    }
    let mut stats = Vec::with_capacity(rows.len());
    let mut fields = opts.keep_fields.then(|| FluctFields {
        times: Vec::with_capacity(rows.len()),
        q: Vec::with_capacity(rows.len()),
        r_reg: Vec::with_capacity(rows.len()),
        r_res: Vec::with_capacity(rows.len()),
        r_neg: Vec::with_capacity(rows.len()),
    });
    for row in rows {
        if let Some(f) = fields.as_mut() {
            f.times.push(row.stats.t);
            f.q.push(row.q);
            f.r_reg.push(row.reg);
            f.r_res.push(row.res);
            f.r_neg.push(row.neg);
        }
        stats.push(row.stats);
    }
    Ok(FluctAnalysis { epsilon: traj.epsilon, kappa: traj.kappa, residual_window: window, summaries, stats, fields })
}

/// Largest residual of the superposition identity over the snapshot grid.
pub fn superposition_check(traj: &Trajectory, log: &TransitionLog, opts: &FluctOptions) -> Result<f64> {
    let mut log = log.clone();
    let o = FluctOptions { keep_fields: false, ..*opts };
    Ok(analyze(traj, &mut log, &o)?.max_superposition())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub epsilon: f64,
    pub transitions: usize,
    /// `Σ_k D_k·√ε`.
    pub sum_d_sqrt_eps: f64,
    /// `sup_t Σ_j Σ_k |r_neg|·√ε`.
    pub neg_l1_sqrt_eps: f64,
    /// `sup_t Σ_j |∇₊ R_reg|² / ε`.
    pub reg_grad_over_eps: f64,
    /// Sampled `sup |ΔR_reg| / (ε^{1/2}(|Δt|^{1/4} + |Δj|^{1/2}) + ε^{1/2})`.
    pub holder_quotient: f64,
    /// `sup_t Σ_j Σ_k |r_res|`.
    pub res_l1: f64,
    pub sup_reg: f64,
    pub sup_res: f64,
    pub sup_neg: f64,
    /// `max_t |Σ_j Σ_k r_ess − 2·#{k : t_k^* ≤ t}|`.
    pub mass_count_error: f64,
}

pub fn regularity_report(an: &FluctAnalysis) -> RegularityReport {
    let eps = an.epsilon;
    let se = eps.sqrt();
    let mut rep = RegularityReport {
        epsilon: eps,
        transitions: an.summaries.iter().filter(|s| s.d_k.is_some()).count(),
        sum_d_sqrt_eps: an.sum_d() * se,
        neg_l1_sqrt_eps: 0.0,
        reg_grad_over_eps: 0.0,
        holder_quotient: 0.0,
        res_l1: 0.0,
        sup_reg: 0.0,
        sup_res: 0.0,
        sup_neg: 0.0,
        mass_count_error: 0.0,
    };
    for s in &an.stats {
        rep.neg_l1_sqrt_eps = rep.neg_l1_sqrt_eps.max(s.neg_l1 * se);
        rep.reg_grad_over_eps = rep.reg_grad_over_eps.max(s.reg_grad_l2 / eps);
        rep.res_l1 = rep.res_l1.max(s.res_l1);
        rep.sup_reg = rep.sup_reg.max(s.sup_reg);
        rep.sup_res = rep.sup_res.max(s.sup_res);
        rep.sup_neg = rep.sup_neg.max(s.sup_neg);
        rep.mass_count_error = rep.mass_count_error.max((s.ess_mass - 2.0 * s.completed as f64).abs());
    }
    if let Some(f) = &an.fields {
        rep.holder_quotient = holder_quotient(&f.times, &f.r_reg, eps);
    }
    rep
}

/// Hölder quotient sampled on dyadic offsets in time and space.
pub fn holder_quotient(times: &[f64], field: &[Vec<f64>], eps: f64) -> f64 {
    let se = eps.sqrt();
    let mut best: f64 = 0.0;
    let m = times.len();
    for a in 0..m {
        let n = field[a].len();
        let mut d = 1;
        while d < n {
            for j in 0..n - d {
                let q = (field[a][j + d] - field[a][j]).abs() / (se * ((d as f64).sqrt() + 1.0));
                best = best.max(q);
            }
            d *= 2;
        }
        let mut o = 1;
        while a + o < m {
            let b = a + o;
            let den = se * ((times[b] - times[a]).abs().powf(0.25) + 1.0);
            for j in 0..n {
                best = best.max((field[b][j] - field[a][j]).abs() / den);
            }
            o *= 2;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values_for_unit_kappa() {
        let p = impact_profile(1.0).unwrap();
        assert_eq!(p.get(0), 1.0);
        assert!((p.get(1) - 1.0 / 3.0).abs() < 1e-16);
        assert!((p.get(-2) - 1.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn profile_mass_is_two() {
        for k in [0.1, 1.0, 10.0, 1e3] {
            assert!((impact_profile(k).unwrap().mass() - 2.0).abs() < 1e-12, "kappa={k}");
        }
    }

    #[test]
    fn folded_profile_keeps_mass() {
        let p = impact_profile(0.5).unwrap();
        let f = p.on_lattice(20, 2);
        assert!((f.iter().sum::<f64>() - p.mass()).abs() < 1e-13);
    }

    #[test]
    fn ulp_of_one() {
        assert_eq!(ulp(1.0), f64::EPSILON);
    }
}
