//! Parabolic rescaling `τ = ε²t`, `ξ = εj` of lattice data.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fluctuations::FluctAnalysis;
use crate::interface::TransitionLog;
use crate::lattice::Trajectory;
use crate::profile::Profile;

/// Lattice index of `ξ` under `ξ = ε(j + ζ)`, `ζ ∈ (−1/2, 1/2]`.
pub fn xi_index(xi: f64, eps: f64) -> i64 {
    (xi / eps - 0.5).ceil() as i64
}

/// SHA-256 of the macroscopic initial data `(P_ini, Ξ_ini, κ)`.
pub fn data_hash(profile: &Profile, xi_ini: f64, kappa: f64) -> String {
    let canon = serde_json::json!({ "profile": profile, "xi_ini": xi_ini, "kappa": kappa });
    let digest = Sha256::digest(canon.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Interface curves `Ξ*_ε`, `Ξ#_ε` in macroscopic time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCurves {
    pub epsilon: f64,
    pub k_initial: i64,
    pub tau_fin: f64,
    /// `τ_k^#` and `τ_k^*` per transition, `τ_k^* = ∞` when unfinished.
    pub entries: Vec<(i64, f64, f64)>,
}

impl InterfaceCurves {
    pub fn from_log(log: &TransitionLog) -> Self {
        let e2 = log.epsilon * log.epsilon;
        Self {
            epsilon: log.epsilon,
            k_initial: log.k_initial,
            tau_fin: log.t_fin * e2,
            entries: log.records.iter().map(|r| (r.k, r.t_hash * e2, r.t_star * e2)).collect(),
        }
    }

    fn k_at(&self, tau: f64) -> i64 {
        self.k_initial + self.entries.iter().filter(|e| e.2 <= tau).count() as i64
    }

    /// `Ξ*_ε(τ) = εk(τ)`.
    pub fn xi_star(&self, tau: f64) -> f64 {
        self.epsilon * self.k_at(tau) as f64
    }

    /// `ε(k+1)` while particle `k` is active, `εk` otherwise.
    pub fn xi_hash(&self, tau: f64) -> f64 {
        let k = self.k_at(tau);
        let active = self.entries.iter().any(|e| e.0 == k && e.1 <= tau && tau < e.2);
        self.epsilon * (k + active as i64) as f64
    }

    /// `|Γ_ε| = ∫ (Ξ# − Ξ*) dτ` over `[0, τ_fin]`.
    pub fn gamma_area(&self) -> f64 {
        self.entries.iter().map(|e| self.epsilon * (e.2.min(self.tau_fin) - e.1.min(self.tau_fin)).max(0.0)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroFields {
    pub epsilon: f64,
    pub kappa: f64,
    pub data_hash: String,
    pub tau: Vec<f64>,
    pub first_site: i64,
    /// `ξ = εj` for every window site.
    pub xi: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub m: Vec<Vec<i8>>,
    pub q: Option<Vec<Vec<f64>>>,
    pub r_reg: Option<Vec<Vec<f64>>>,
    pub r_res: Option<Vec<Vec<f64>>>,
    pub r_neg: Option<Vec<Vec<f64>>>,
    pub xi_star: Vec<f64>,
    pub xi_hash: Vec<f64>,
    pub curves: InterfaceCurves,
}

/// Builds the macroscopic fields on the snapshot grid; fluctuation fields are
/// copied when `analysis` kept them.
pub fn rescale(
    traj: &Trajectory,
    log: &TransitionLog,
    analysis: Option<&FluctAnalysis>,
    data_hash: &str,
) -> Result<MacroFields> {
    let eps = traj.epsilon;
    let e2 = eps * eps;
    let curves = InterfaceCurves::from_log(log);
    let tau: Vec<f64> = traj.snapshots.iter().map(|s| s.t * e2).collect();
    let xi: Vec<f64> = (0..traj.len_sites()).map(|i| eps * (traj.first_site + i as i64) as f64).collect();
    let xi_star: Vec<f64> = tau.iter().map(|&t| curves.xi_star(t)).collect();
    let xi_hash: Vec<f64> = tau.iter().map(|&t| curves.xi_hash(t)).collect();
    let m = xi_star
        .iter()
        .zip(&xi_hash)
        .map(|(&a, &b)| xi.iter().map(|&x| if x < a { 1 } else if x >= b { -1 } else { 0 }).collect())
        .collect();
    let fields = analysis.and_then(|a| a.fields.as_ref());
    if let Some(f) = fields {
        if f.times.len() != tau.len() {
            return Err(Error::Config(format!(
                "fluctuation fields cover {} snapshots, trajectory has {}",
                f.times.len(),
                tau.len()
            )));
        }
    }
    Ok(MacroFields {
        epsilon: eps,
        kappa: traj.kappa,
        data_hash: data_hash.to_string(),
        first_site: traj.first_site,
        p: traj.snapshots.iter().map(|s| traj.p_of(s)).collect(),
        u: traj.snapshots.iter().map(|s| s.u.clone()).collect(),
        m,
        q: fields.map(|f| f.q.clone()),
        r_reg: fields.map(|f| f.r_reg.clone()),
        r_res: fields.map(|f| f.r_res.clone()),
        r_neg: fields.map(|f| f.r_neg.clone()),
        tau,
        xi,
        xi_star,
        xi_hash,
        curves,
    })
}

impl MacroFields {
    /// Snapshot in force at `tau`, the last one with `τ_s ≤ τ`.
    pub fn sample_at(&self, tau: f64) -> Result<usize> {
        let last = *self.tau.last().ok_or_else(|| Error::Domain("no snapshots".into()))?;
        if !(tau >= 0.0 && tau <= last) {
            return Err(Error::Domain(format!("tau={tau} outside stored range [0, {last}]")));
        }
        Ok(self.tau.partition_point(|t| *t <= tau) - 1)
    }

    fn column(&self, xi: f64) -> Result<usize> {
        let j = xi_index(xi, self.epsilon);
        let i = j - self.first_site;
        if i < 0 || i as usize >= self.xi.len() {
            return Err(Error::Domain(format!("xi={xi} maps to site {j} outside the stored window")));
        }
        Ok(i as usize)
    }

    /// `P_ε(τ, ξ)`, piecewise constant in both variables.
    pub fn p_at(&self, tau: f64, xi: f64) -> Result<f64> {
        Ok(self.p[self.sample_at(tau)?][self.column(xi)?])
    }

    pub fn u_at(&self, tau: f64, xi: f64) -> Result<f64> {
        Ok(self.u[self.sample_at(tau)?][self.column(xi)?])
    }

    pub fn m_at(&self, tau: f64, xi: f64) -> Result<i8> {
        Ok(self.m[self.sample_at(tau)?][self.column(xi)?])
    }

    /// `max |P_ε − (Q_ε − R_reg − R_res − R_neg)|`, `None` without fluctuation fields.
    pub fn formula_residual(&self) -> Option<f64> {
        let (q, a, b, c) = (self.q.as_ref()?, self.r_reg.as_ref()?, self.r_res.as_ref()?, self.r_neg.as_ref()?);
        let mut worst = 0.0f64;
        for s in 0..self.p.len() {
            for i in 0..self.xi.len() {
                worst = worst.max((self.p[s][i] - (q[s][i] - a[s][i] - b[s][i] - c[s][i])).abs());
            }
        }
        Some(worst)
    }

    /// Checks `M_ε ∈ {−1,0,1}` with zeros only on `[Ξ*, Ξ#]`, `Ξ* ≤ Ξ#`, and
    /// monotone curves with jumps of size `ε`.
    pub fn structure_violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let tol = 1e-9 * self.epsilon;
        for s in 0..self.tau.len() {
            if self.xi_star[s] > self.xi_hash[s] + tol {
                bad.push(format!("tau={}: Xi_star above Xi_hash", self.tau[s]));
            }
            for (i, &x) in self.xi.iter().enumerate() {
                if self.m[s][i] == 0 && (x < self.xi_star[s] - tol || x >= self.xi_hash[s] - tol) {
                    bad.push(format!("tau={}: M=0 at xi={x} outside the interface", self.tau[s]));
                }
            }
            if s > 0 {
                let d = self.xi_star[s] - self.xi_star[s - 1];
                if d < -tol || (d > tol && (d / self.epsilon - (d / self.epsilon).round()).abs() > 1e-6) {
                    bad.push(format!("tau={}: Xi_star jump {d}", self.tau[s]));
                }
            }
        }
        bad
    }
}
