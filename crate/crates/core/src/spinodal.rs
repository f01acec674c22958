//! The prototypical spinodal problem
//! `ż_0 = −κΔz_0 + (1+κ)f`, `ż_j = Δz_j` for `j ≠ 0`, and its slow-fast splitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::kernel_values;

const OVERFLOW: f64 = 1e150;

/// Time-dependent source `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    Constant { value: f64 },
    /// `a·sin(ωt)`.
    Sine { amplitude: f64, omega: f64 },
}

impl Forcing {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Forcing::Constant { value } => value,
            Forcing::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
        }
    }

    /// `∫_0^t |f|`, by composite Simpson for the oscillating case.
    pub fn abs_integral(&self, t: f64) -> f64 {
        match *self {
            Forcing::Constant { value } => value.abs() * t,
            Forcing::Sine { .. } => {
                let m = 2 * ((t * 50.0).ceil() as usize).max(8);
                let h = t / m as f64;
                let mut s = self.at(0.0).abs() + self.at(t).abs();
                for i in 1..m {
                    s += if i % 2 == 1 { 4.0 } else { 2.0 } * self.at(i as f64 * h).abs();
                }
                s * h / 3.0
            }
        }
    }
}

/// Sequence on the symmetric window `−w..=w`, stored with offset `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySnapshot {
    pub t: f64,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTrajectory {
    pub kappa: f64,
    pub window: usize,
    pub dt: f64,
    pub forcing: Forcing,
    pub snapshots: Vec<ToySnapshot>,
    /// Set when `|z_0|` left the representable range and the run was cut short.
    pub overflow: bool,
}

impl ToyTrajectory {
    pub fn initial(&self) -> &ToySnapshot {
        &self.snapshots[0]
    }
}

/// Explicit Euler with Neumann far ends at `±w`; one snapshot every `stride` steps.
pub fn simulate_toy(
    z0: &[f64],
    kappa: f64,
    forcing: Forcing,
    t_fin: f64,
    dt: f64,
    stride: usize,
) -> Result<ToyTrajectory> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("kappa={kappa} must be positive")));
    }
    if z0.len() % 2 == 0 || z0.len() < 3 {
        return Err(Error::Config("toy window must have odd length at least 3".into()));
    }
    let bound = crate::potential::PotentialParams::new(kappa)?.dt_max(crate::lattice::DEFAULT_ETA);
    if !(dt > 0.0) || dt > bound {
        return Err(Error::Config(format!("dt={dt} outside (0, {bound}]")));
    }
    let w = z0.len() / 2;
    let n = z0.len();
    let steps = (t_fin / dt).round() as usize;
    let stride = stride.max(1);
    let mut z = z0.to_vec();
    let mut lap = vec![0.0; n];
    let mut traj = ToyTrajectory {
        kappa,
        window: w,
        dt,
        forcing,
        snapshots: vec![ToySnapshot { t: 0.0, z: z.clone() }],
        overflow: false,
    };
    for s in 0..steps {
        let t = s as f64 * dt;
        crate::lattice::laplacian_into(&z, &mut lap);
        for i in 0..n {
            z[i] += if i == w { dt * (-kappa * lap[i] + (1.0 + kappa) * forcing.at(t)) } else { dt * lap[i] };
        }
        if !z[w].is_finite() || z[w].abs() > OVERFLOW {
            traj.overflow = true;
            break;
        }
        if (s + 1) % stride == 0 || s + 1 == steps {
            traj.snapshots.push(ToySnapshot { t: (s + 1) as f64 * dt, z: z.clone() });
        }
    }
    Ok(traj)
}

/// Even part `(z_j + z_{−j})/2` for `j = 0..=w`.
pub fn even_part(z: &[f64]) -> Vec<f64> {
    let w = z.len() / 2;
    (0..=w).map(|j| 0.5 * (z[w + j] + z[w - j])).collect()
}

/// `ζ_n = ((1+2κ)/(2κ))·z_even,n − (1/(2κ))·z_even,n−1` for `n = 1..=w`; index 0 holds `ζ_1`.
pub fn slow_variables(z: &[f64], kappa: f64) -> Vec<f64> {
    let e = even_part(z);
    let a = (1.0 + 2.0 * kappa) / (2.0 * kappa);
    let b = 1.0 / (2.0 * kappa);
    (1..e.len()).map(|n| a * e[n] - b * e[n - 1]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowFastSplit {
    pub z_fast: Vec<f64>,
    pub z_slow: Vec<f64>,
    pub zeta: Vec<f64>,
}

pub fn split_slow_fast(z: &[f64], kappa: f64) -> SlowFastSplit {
    let w = z.len() / 2;
    let z0 = z[w];
    let q = 1.0 / (1.0 + 2.0 * kappa);
    let z_fast: Vec<f64> = (0..z.len()).map(|i| z0 * q.powi((i as i64 - w as i64).unsigned_abs() as i32)).collect();
    let z_slow = z.iter().zip(&z_fast).map(|(a, b)| a - b).collect();
    SlowFastSplit { z_fast, z_slow, zeta: slow_variables(z, kappa) }
}

/// Right-hand side of the representation formula at `j = 1..=w` for even `z`.
pub fn representation(z0: f64, zeta: &[f64], kappa: f64) -> Vec<f64> {
    let a = 1.0 + 2.0 * kappa;
    let mut out = Vec::with_capacity(zeta.len());
    // S_j = Σ_{n≤j} a^{n−j−1} ζ_n, built recursively to avoid overflow.
    let mut s = 0.0;
    for (idx, &zn) in zeta.iter().enumerate() {
        let j = idx + 1;
        s = (s + zn) / a;
        out.push(z0 / a.powi(j as i32) + 2.0 * kappa * s);
    }
    out
}

/// Largest relative deviation of the representation formula from the even part of `z`.
pub fn representation_residual(z: &[f64], kappa: f64) -> f64 {
    let e = even_part(z);
    let zeta = slow_variables(z, kappa);
    let rep = representation(e[0], &zeta, kappa);
    let scale = e.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    rep.iter().zip(&e[1..]).map(|(r, v)| (r - v).abs()).fold(0.0, f64::max) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowBoundReport {
    pub t: Vec<f64>,
    pub ratio: Vec<f64>,
    pub running_max: Vec<f64>,
    pub fast_l1: Vec<f64>,
    pub max_abs_z: Vec<f64>,
}

impl SlowBoundReport {
    /// Relative growth of the running maximum over the second half of the run.
    pub fn late_growth(&self) -> f64 {
        let n = self.running_max.len();
        if n < 2 {
            return 0.0;
        }
        let mid = self.running_max[n / 2];
        let last = self.running_max[n - 1];
        if mid == 0.0 {
            0.0
        } else {
            last / mid - 1.0
        }
    }
}

/// `Σ|z_slow(t)| / (Σ|z(0)| + ∫_0^t|f|)` along the run.
pub fn slow_bound_check(traj: &ToyTrajectory) -> SlowBoundReport {
    let l1_0: f64 = traj.initial().z.iter().map(|v| v.abs()).sum();
    let mut rep = SlowBoundReport { t: vec![], ratio: vec![], running_max: vec![], fast_l1: vec![], max_abs_z: vec![] };
    let mut run = 0.0f64;
    for s in &traj.snapshots {
        let sp = split_slow_fast(&s.z, traj.kappa);
        let slow: f64 = sp.z_slow.iter().map(|v| v.abs()).sum();
        let den = l1_0 + traj.forcing.abs_integral(s.t);
        let r = if den == 0.0 { 0.0 } else { slow / den };
        run = run.max(r);
        rep.t.push(s.t);
        rep.ratio.push(r);
        rep.running_max.push(run);
        rep.fast_l1.push(sp.z_fast.iter().map(|v| v.abs()).sum());
        rep.max_abs_z.push(s.z.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowDynamicsResidual {
    /// `max |ż_0 − (4κ²/(1+2κ))(z_0−ζ_1) − (1+κ)f|` with central differences.
    pub z0: f64,
    /// `max |ζ̇_1 − (ζ_2 − ζ_1) + ((1+κ)/(2κ))f|`.
    pub zeta1: f64,
    /// `max_{n>1} |ζ̇_n − Δζ_n|` away from the window edge.
    pub zeta_bulk: f64,
}

/// Residuals of the slow-dynamics identities along an even trajectory stored at
/// stride 1, over snapshots with `t ≤ t_max`.
pub fn slow_dynamics_residual(traj: &ToyTrajectory, t_max: f64) -> Result<SlowDynamicsResidual> {
    let s = &traj.snapshots;
    if s.len() < 3 {
        return Err(Error::Config("need at least three snapshots".into()));
    }
    let k = traj.kappa;
    let w = traj.window;
    let mut out = SlowDynamicsResidual { z0: 0.0, zeta1: 0.0, zeta_bulk: 0.0 };
    for i in 1..s.len() - 1 {
        if s[i].t > t_max {
            break;
        }
        let h = s[i + 1].t - s[i - 1].t;
        let f = traj.forcing.at(s[i].t);
        let zm = slow_variables(&s[i - 1].z, k);
        let zc = slow_variables(&s[i].z, k);
        let zp = slow_variables(&s[i + 1].z, k);
        let dz0 = (s[i + 1].z[w] - s[i - 1].z[w]) / h;
        let rhs = 4.0 * k * k / (1.0 + 2.0 * k) * (s[i].z[w] - zc[0]) + (1.0 + k) * f;
        out.z0 = out.z0.max((dz0 - rhs).abs());
        let dzeta1 = (zp[0] - zm[0]) / h;
        out.zeta1 = out.zeta1.max((dzeta1 - (zc[1] - zc[0] - (1.0 + k) / (2.0 * k) * f)).abs());
        for n in 1..zc.len().saturating_sub(2) {
            let d = (zp[n] - zm[n]) / h;
            out.zeta_bulk = out.zeta_bulk.max((d - (zc[n - 1] + zc[n + 1] - 2.0 * zc[n])).abs());
        }
    }
    Ok(out)
}

/// Duhamel form of the reflected slow variables `ζ̃` (reflection about `j = 1/2`):
/// `ζ̃_j(t) = Σ_n g_{j−n}(t)ζ̃_n(0) − ((1+κ)/(2κ))∫_0^t (g_{j−1}+g_j)(t−s) f(s) ds`.
/// Returns `ζ_1..ζ_m` at time `t` for data `z(0)` on the window.
pub fn duhamel_zeta(z0: &[f64], kappa: f64, forcing: Forcing, t: f64, m: usize) -> Result<Vec<f64>> {
    let zeta0 = slow_variables(z0, kappa);
    let w = zeta0.len();
    // ζ̃ on indices 1−w..=w, stored with offset w−1.
    let mut tilde = vec![0.0; 2 * w];
    for n in 1..=w {
        tilde[w - 1 + n] = zeta0[n - 1];
        tilde[w - n] = zeta0[n - 1];
    }
    let dmax = 2 * w + m + 2;
    let g = kernel_values(t, dmax)?;
    let c = (1.0 + kappa) / (2.0 * kappa);
    let q = 2 * ((t * 20.0).ceil() as usize).max(16);
    let hq = t / q as f64;
    let kern: Vec<_> = (0..=q).map(|i| kernel_values(t - i as f64 * hq, m + 2)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(m);
    for j in 1..=m as i64 {
        let mut v = 0.0;
        for (idx, &zt) in tilde.iter().enumerate() {
            let n = idx as i64 - (w as i64 - 1);
            v += g.get(j - n) * zt;
        }
        let mut integral = 0.0;
        for (i, kv) in kern.iter().enumerate() {
            let wgt = if i == 0 || i == q { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += wgt * (kv.get(j - 1) + kv.get(j)) * forcing.at(i as f64 * hq);
        }
        out.push(v - c * integral * hq / 3.0);
    }
    Ok(out)
}
