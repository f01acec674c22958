//! Entropy pairs `η' = μ∘Φ'`, the discrete entropy balance and the
//! energy-dissipation law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::TransitionLog;
use crate::lattice::{laplacian_into, Snapshot, Trajectory};
use crate::potential::PotentialParams;

/// Flux density `μ`, nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mu {
    Identity,
    Constant { value: f64 },
    /// Linear interpolation, constant beyond the first and last point.
    PiecewiseLinear { points: Vec<[f64; 2]> },
    /// Ramp from 0 to 1 on `[p̃ − w/2, p̃ + w/2]`.
    SmoothStep { p_tilde: f64, width: f64 },
}

impl Mu {
    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Mu::Identity => p,
            Mu::Constant { value } => *value,
            Mu::PiecewiseLinear { points } => {
                if p <= points[0][0] {
                    return points[0][1];
                }
                let last = points[points.len() - 1];
                if p >= last[0] {
                    return last[1];
                }
                let i = points.partition_point(|q| q[0] <= p) - 1;
                let (a, b) = (points[i], points[i + 1]);
                a[1] + (b[1] - a[1]) * (p - a[0]) / (b[0] - a[0])
            }
            Mu::SmoothStep { p_tilde, width } => ((p - p_tilde) / width + 0.5).clamp(0.0, 1.0),
        }
    }

    /// `sup μ'`.
    pub fn slope_bound(&self) -> f64 {
        match self {
            Mu::Identity => 1.0,
            Mu::Constant { .. } => 0.0,
            Mu::PiecewiseLinear { points } => points
                .windows(2)
                .map(|w| ((w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).abs())
                .fold(0.0, f64::max),
            Mu::SmoothStep { width, .. } => 1.0 / width,
        }
    }

    /// Kinks of `μ` in `p`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Mu::Identity | Mu::Constant { .. } => vec![],
            Mu::PiecewiseLinear { points } => points.iter().map(|q| q[0]).collect(),
            Mu::SmoothStep { p_tilde, width } => vec![p_tilde - 0.5 * width, p_tilde + 0.5 * width],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Mu::PiecewiseLinear { points } => {
                if points.is_empty() || points.iter().any(|q| !q[0].is_finite() || !q[1].is_finite()) {
                    return Err(Error::Config("mu needs finite points".into()));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config("mu points must be strictly increasing in p".into()));
                }
            }
            Mu::SmoothStep { width, .. } if !(*width > 0.0) => {
                return Err(Error::Config("smooth step needs a positive width".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Smoothed step entropy density at `p̃` with ramp width `10⁻³`.
pub fn smoothed_step(p_tilde: f64) -> Mu {
    Mu::SmoothStep { p_tilde, width: 1e-3 }
}

const TABLE_LO: f64 = -4.0;
const TABLE_HI: f64 = 4.0;
const TABLE_STEP: f64 = 0.05;
const SIMPSON_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPair {
    pub mu: Mu,
    pub params: PotentialParams,
    /// `(u, η(u))` with `η(−u**) = 0`, including every kink of `μ∘Φ'`.
    nodes: Vec<(f64, f64)>,
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Builds `η(u) = ∫_{−u**}^u μ(Φ'(v)) dv` after checking `μ` for monotonicity on
/// a grid of 10³ points.
pub fn make_pair(mu: Mu, params: PotentialParams) -> Result<EntropyPair> {
    mu.validate()?;
    let grid: Vec<f64> = (0..1000).map(|i| -3.0 + 6.0 * i as f64 / 999.0).collect();
    for w in grid.windows(2) {
        if mu.eval(w[1]) < mu.eval(w[0]) {
            return Err(Error::Domain(format!("mu decreases between p={} and p={}", w[0], w[1])));
        }
    }
    let mut us: Vec<f64> = Vec::new();
    let steps = ((TABLE_HI - TABLE_LO) / TABLE_STEP).round() as usize;
    us.extend((0..=steps).map(|i| TABLE_LO + i as f64 * TABLE_STEP));
    us.extend([-params.u_star, params.u_star, -params.u_star_star]);
    for b in mu.breakpoints() {
        for u in [b - 1.0, b + 1.0, -b / params.kappa] {
            if params.phi_prime(u) == b || (params.phi_prime(u) - b).abs() < 1e-15 {
                us.push(u);
            }
        }
    }
    us.retain(|u| u.is_finite() && (TABLE_LO..=TABLE_HI).contains(u));
    us.sort_by(f64::total_cmp);
    us.dedup();
    let g = |v: f64| mu.eval(params.phi_prime(v));
    let anchor = us.iter().position(|&u| u == -params.u_star_star).expect("anchor node");
    let mut eta = vec![0.0; us.len()];
    for i in anchor + 1..us.len() {
        eta[i] = eta[i - 1] + simpson(&g, us[i - 1], us[i], SIMPSON_TOL);
    }
    for i in (0..anchor).rev() {
        eta[i] = eta[i + 1] - simpson(&g, us[i], us[i + 1], SIMPSON_TOL);
    }
    Ok(EntropyPair { mu, params, nodes: us.into_iter().zip(eta).collect() })
}

impl EntropyPair {
    pub fn mu(&self, p: f64) -> f64 {
        self.mu.eval(p)
    }

    pub fn eta(&self, u: f64) -> f64 {
        let g = |v: f64| self.mu.eval(self.params.phi_prime(v));
        let i = self.nodes.partition_point(|n| n.0 <= u);
        let (u0, e0) = if i == 0 { self.nodes[0] } else { self.nodes[i - 1] };
        e0 + simpson(&g, u0, u, SIMPSON_TOL)
    }

    /// Checks `η'' ≥ 0` on both phases by second differences at the table nodes.
    pub fn convex_on_phases(&self) -> bool {
        let us = self.params.u_star;
        self.nodes.windows(3).all(|w| {
            let in_phase = |u: f64| u.abs() > us;
            if !(in_phase(w[0].0) && in_phase(w[2].0)) || (w[0].0 < 0.0) != (w[2].0 < 0.0) {
                return true;
            }
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            s2 >= s1 - 1e-10
        })
    }
}

/// Nonnegative test weights `ψ_j = w(εj)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Ones,
    /// `exp(−(ξ−c)²/(2s²))`, cut off beyond `4s`.
    Gaussian { center: f64, width: f64 },
    /// `max(0, 1 − |ξ−c|/h)`.
    Hat { center: f64, half_width: f64 },
}

impl Weight {
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            Weight::Ones => 1.0,
            Weight::Gaussian { center, width } => {
                let z = (xi - center) / width;
                if z.abs() > 4.0 {
                    0.0
                } else {
                    (-0.5 * z * z).exp()
                }
            }
            Weight::Hat { center, half_width } => (1.0 - (xi - center).abs() / half_width).max(0.0),
        }
    }

    pub fn sample(&self, traj: &Trajectory) -> Vec<f64> {
        (0..traj.len_sites()).map(|i| self.eval(traj.epsilon * (traj.first_site + i as i64) as f64)).collect()
    }
}

fn check_psi(psi: &[f64]) -> Result<()> {
    if let Some(i) = psi.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("weight psi has a negative or non-finite entry at position {i}")));
    }
    Ok(())
}

/// `Σ μ(p_j)(∇₊ψ_j)(∇₊p_j)`.
pub fn flux_term(p: &[f64], psi: &[f64], mu: &Mu) -> f64 {
    (0..p.len().saturating_sub(1)).map(|j| mu.eval(p[j]) * (psi[j + 1] - psi[j]) * (p[j + 1] - p[j])).sum()
}

/// `Σ (∇₊μ(p_j))(∇₊p_j)`, nonnegative for every nondecreasing `μ`.
pub fn pairing_term(p: &[f64], mu: &Mu) -> f64 {
    p.windows(2).map(|w| (mu.eval(w[1]) - mu.eval(w[0])) * (w[1] - w[0])).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancePoint {
    pub t: f64,
    /// `dS/dt + Σ μ(p)∇₊ψ∇₊p` with `S = Σ η(u_j)ψ_j` and a central difference quotient.
    pub residual: f64,
    pub tol: f64,
    pub pairing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSeries {
    pub points: Vec<BalancePoint>,
}

impl BalanceSeries {
    pub fn violations(&self) -> usize {
        self.points.iter().filter(|p| p.residual > p.tol || p.pairing < 0.0).count()
    }

    pub fn worst_ratio(&self) -> f64 {
        self.points.iter().map(|p| if p.tol > 0.0 { p.residual / p.tol } else { 0.0 }).fold(f64::MIN, f64::max)
    }
}

const TOL_SAFETY: f64 = 2.0;
const ROUNDING: f64 = 1e-11;

/// Entropy balance on every interior snapshot.
///
/// `tol = 2·(½dt·sup μ'·Σψ(Δp)² + max |F(t_i) − F(t_{i±1})|)` where `F` is the flux
/// term: the first part bounds the Euler remainder per unit time, the second the
/// variation of `F` across the differencing window.
pub fn entropy_balance_residual(traj: &Trajectory, psi: &[f64], pair: &EntropyPair) -> Result<BalanceSeries> {
    check_psi(psi)?;
    if psi.len() != traj.len_sites() {
        return Err(Error::Config(format!("psi has {} entries, window has {}", psi.len(), traj.len_sites())));
    }
    let snaps = &traj.snapshots;
    let slope = pair.mu.slope_bound();
    let rows: Vec<(f64, f64, f64, f64)> = snaps
        .par_iter()
        .map(|s| {
            let p = traj.p_of(s);
            let mut lap = vec![0.0; p.len()];
            laplacian_into(&p, &mut lap);
            let s_val: f64 = s.u.iter().zip(psi).map(|(u, w)| if *w == 0.0 { 0.0 } else { pair.eta(*u) * w }).sum();
            let euler: f64 = lap.iter().zip(psi).map(|(l, w)| w * l * l).sum();
            (s_val, flux_term(&p, psi, &pair.mu), euler, pairing_term(&p, &pair.mu))
        })
        .collect();
    let mut points = Vec::with_capacity(snaps.len());
    for i in 1..snaps.len().saturating_sub(1) {
        let h = snaps[i + 1].t - snaps[i - 1].t;
        if h <= 0.0 {
            continue;
        }
        let ds = (rows[i + 1].0 - rows[i - 1].0) / h;
        let residual = ds + rows[i].1;
        let euler = 0.5 * traj.dt * slope * rows[i - 1].2.max(rows[i].2).max(rows[i + 1].2);
        let var = (rows[i].1 - rows[i - 1].1).abs().max((rows[i + 1].1 - rows[i].1).abs());
        let scale = rows[i + 1].0.abs().max(rows[i - 1].0.abs());
        let tol = TOL_SAFETY * (euler + var) + ROUNDING * scale / h;
        points.push(BalancePoint { t: snaps[i].t, residual, tol, pairing: rows[i].3 });
    }
    Ok(BalanceSeries { points })
}

/// `E = n⁻¹ΣΦ(u_j)` and `D = n·Σ(p_{j+1}−p_j)²` over an `n`-site window.
pub fn energy_and_dissipation(u: &[f64], params: &PotentialParams) -> (f64, f64) {
    let n = u.len() as f64;
    let e = u.iter().map(|&x| params.phi(x)).sum::<f64>() / n;
    let p: Vec<f64> = u.iter().map(|&x| params.phi_prime(x)).collect();
    let d = n * p.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    (e, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// `|dE/dt + ε²D|` with `dE/dt` from one Euler step of length `dt`.
    pub law_residual: f64,
    /// `dt·max(1,κ)/(2n)·Σ(Δp)²`, the Taylor bound of that residual, plus rounding.
    pub law_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub points: Vec<EnergyPoint>,
}

impl EnergySeries {
    pub fn law_violations(&self) -> usize {
        self.points.iter().filter(|p| p.law_residual > p.law_bound).count()
    }

    /// Largest increase of `E` between consecutive snapshots.
    pub fn max_increase(&self) -> f64 {
        self.points.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::MIN, f64::max)
    }
}

fn energy_point(s: &Snapshot, dt: f64, params: &PotentialParams) -> EnergyPoint {
    let n = s.u.len();
    let nf = n as f64;
    let (e, d) = energy_and_dissipation(&s.u, params);
    let p: Vec<f64> = s.u.iter().map(|&x| params.phi_prime(x)).collect();
    let mut lap = vec![0.0; n];
    laplacian_into(&p, &mut lap);
    let stepped: Vec<f64> = s.u.iter().zip(&lap).map(|(u, l)| u + dt * l).collect();
    let (e1, _) = energy_and_dissipation(&stepped, params);
    let de = (e1 - e) / dt;
    let lap2: f64 = lap.iter().map(|l| l * l).sum();
    let bound = dt * params.max_slope() / (2.0 * nf) * lap2 * (1.0 + 1e-9) + 1e-15 * e.abs().max(1.0) / dt;
    EnergyPoint { t: s.t, energy: e, dissipation: d, law_residual: (de + d / (nf * nf)).abs(), law_bound: bound }
}

/// Energy law `dE/dt = −ε²D` with `ε = 1/n` on every snapshot.
pub fn energy_series(traj: &Trajectory) -> EnergySeries {
    let params = traj.params();
    EnergySeries { points: traj.snapshots.par_iter().map(|s| energy_point(s, traj.dt, &params)).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationPeak {
    pub k: i64,
    pub t_star: f64,
    pub peak: f64,
    pub within: bool,
}

/// Largest `D` over snapshots in `[t_k^*, t_k^* + window]` for every completed
/// transition, checked against `[0.1n, 10n]`.
pub fn dissipation_peaks(traj: &Trajectory, log: &TransitionLog, window: f64) -> Vec<DissipationPeak> {
    let params = traj.params();
    let n = traj.len_sites() as f64;
    log.records
        .iter()
        .filter(|r| r.completed() && r.t_star <= traj.t_fin)
        .map(|r| {
            let peak = traj
                .snapshots
                .iter()
                .filter(|s| s.t >= r.t_star && s.t <= r.t_star + window)
                .map(|s| energy_and_dissipation(&s.u, &params).1)
                .fold(0.0, f64::max);
            DissipationPeak { k: r.k, t_star: r.t_star, peak, within: peak >= 0.1 * n && peak <= 10.0 * n }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedBalance {
    /// `Σ_j ∫ ψ_{j+1}(∇₊p_j)² ds` by the trapezoid rule on the snapshot grid.
    pub dissipation: f64,
    /// `ΣψΦ(u(0)) − ΣψΦ(u(t)) − ∫ Σ p∇₊ψ∇₊p ds`.
    pub budget: f64,
    /// `ΣψΦ(u(0)) − ∫ Σ p∇₊ψ∇₊p ds`, the bound with the final energy dropped.
    pub bound: f64,
    /// `bound − dissipation`, nonnegative when the inequality holds.
    pub slack: f64,
    /// `|budget − dissipation|`, the quadrature defect of the exact identity.
    pub defect: f64,
}

/// Time-integrated balance for the pair `(Φ, id)` up to the last snapshot.
pub fn integrated_balance(traj: &Trajectory, psi: &[f64]) -> Result<IntegratedBalance> {
    check_psi(psi)?;
    let params = traj.params();
    let row = |s: &Snapshot| {
        let p = traj.p_of(s);
        let mut diss = 0.0;
        let mut flux = 0.0;
        for j in 0..p.len().saturating_sub(1) {
            let g = p[j + 1] - p[j];
            diss += psi[j + 1] * g * g;
            flux += p[j] * (psi[j + 1] - psi[j]) * g;
        }
        (diss, flux)
    };
    let rows: Vec<(f64, f64)> = traj.snapshots.par_iter().map(row).collect();
    let mut diss = 0.0;
    let mut flux = 0.0;
    for i in 1..rows.len() {
        let h = traj.snapshots[i].t - traj.snapshots[i - 1].t;
        diss += 0.5 * h * (rows[i].0 + rows[i - 1].0);
        flux += 0.5 * h * (rows[i].1 + rows[i - 1].1);
    }
    let weighted = |s: &Snapshot| s.u.iter().zip(psi).map(|(u, w)| w * params.phi(*u)).sum::<f64>();
    let e0 = weighted(traj.initial());
    let e1 = weighted(traj.last());
    let budget = e0 - e1 - flux;
    let bound = e0 - flux;
    Ok(IntegratedBalance { dissipation: diss, budget, bound, slack: bound - diss, defect: (budget - diss).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PotentialParams {
        PotentialParams::new(1.0).unwrap()
    }

    #[test]
    fn identity_gives_phi() {
        let pair = make_pair(Mu::Identity, params()).unwrap();
        let c = pair.eta(1.0);
        for u in [-2.0, -0.7, -0.2, 0.0, 0.4, 1.3, 2.5] {
            assert!((pair.eta(u) - c - params().phi(u)).abs() < 1e-7, "u={u}");
        }
    }

    #[test]
    fn constant_gives_linear() {
        let pair = make_pair(Mu::Constant { value: 1.0 }, params()).unwrap();
        for u in [-2.0, 0.1, 1.7] {
            assert!((pair.eta(u) - (u + params().u_star_star)).abs() < 1e-10);
        }
    }

    #[test]
    fn decreasing_mu_rejected() {
        let mu = Mu::PiecewiseLinear { points: vec![[0.0, 1.0], [1.0, 0.0]] };
        assert!(make_pair(mu, params()).is_err());
    }

    #[test]
    fn smoothed_step_matches_closed_form() {
        // μ̃ = 1 for p > p̃ = 0.3: η̃ grows with unit slope on {Φ' > p̃} = (−u*, −p̃/κ) ∪ (1+p̃, ∞)
        // and on the minus branch where u + 1 > p̃.
        let pt = 0.3;
        let pair = make_pair(smoothed_step(pt), params()).unwrap();
        let minus_branch = -0.5 - (pt - 1.0); // length of (p̃ − 1, −u*)
        let spin = -pt - -0.5;
        let expected_mid = minus_branch + spin;
        assert!((pair.eta(0.45) - expected_mid).abs() < 2e-3);
        assert!((pair.eta(2.0) - (expected_mid + 2.0 - 1.3)).abs() < 2e-3);
        assert!(pair.eta(-1.0).abs() < 1e-12);
        assert!(pair.convex_on_phases());
    }

    #[test]
    fn unit_state_has_no_energy() {
        let (e, d) = energy_and_dissipation(&[1.0; 10], &params());
        assert_eq!((e, d), (0.0, 0.0));
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(check_psi(&[0.0, -1e-3]).is_err());
    }
}
