//! Front-tracking solver for the hysteretic Stefan problem
//! `∂_τP = ∂_ξ²P` off `Ξ`, `2Ξ' = [∂_ξP]` while `P(Ξ) = p*`, pinned otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Pinned,
    Moving,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_samples() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanGrid {
    /// Number of grid intervals on `[0, 1]`.
    pub cells: usize,
    /// `dτ = cfl·h²`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Number of stored τ samples after the initial one.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl StefanGrid {
    pub fn new(cells: usize) -> Self {
        Self { cells, cfl: default_cfl(), samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StefanSolution {
    pub p_star: f64,
    pub tau: Vec<f64>,
    pub xi: Vec<f64>,
    /// `p[s][i]` is the field at `tau[s]`, node `xi[i]`.
    pub p: Vec<Vec<f64>>,
    pub interface: Vec<f64>,
    pub regime: Vec<Regime>,
    /// Set when the interface reached the last grid cell.
    pub truncated: bool,
}

impl StefanSolution {
    /// Interface position at `tau` by linear interpolation between samples.
    pub fn interface_at(&self, tau: f64) -> f64 {
        interp(&self.tau, &self.interface, tau)
    }

    /// Field at sample `s`, position `xi`, by linear interpolation in ξ.
    pub fn field_at(&self, s: usize, xi: f64) -> f64 {
        interp(&self.xi, &self.p[s], xi)
    }

    pub fn final_field(&self) -> &[f64] {
        self.p.last().expect("non-empty solution")
    }
}

pub(crate) fn interp(x: &[f64], y: &[f64], at: f64) -> f64 {
    if at <= x[0] {
        return y[0];
    }
    if at >= x[x.len() - 1] {
        return y[y.len() - 1];
    }
    let i = x.partition_point(|v| *v <= at) - 1;
    let s = (at - x[i]) / (x[i + 1] - x[i]);
    y[i] + s * (y[i + 1] - y[i])
}

/// Derivative at `x0` of the quadratic through `(x0, f0)`, `(x1, f1)`, `(x2, f2)`.
fn quad_slope(x0: f64, f0: f64, x1: f64, f1: f64, x2: f64, f2: f64) -> f64 {
    let a = x1 - x0;
    let b = x2 - x0;
    // f(x0+s) = f0 + c1 s + c2 s²
    let d1 = (f1 - f0) / a;
    let d2 = (f2 - f0) / b;
    let c2 = (d2 - d1) / (b - a);
    d1 - c2 * a
}

struct Front {
    h: f64,
    p_star: f64,
    p: Vec<f64>,
    xi: f64,
    next: Vec<f64>,
}

impl Front {
    fn m(&self) -> usize {
        self.p.len() - 1
    }

    fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    fn value_at_interface(&self, p: &[f64]) -> f64 {
        let i = ((self.xi / self.h).floor() as usize).min(self.m() - 1);
        let s = (self.xi - self.node(i)) / self.h;
        p[i] + s * (p[i + 1] - p[i])
    }

    fn heat_step(&mut self, r: f64) {
        let m = self.m();
        let p = &self.p;
        for i in 0..=m {
            let l = if i == 0 { p[1] } else { p[i - 1] };
            let rr = if i == m { p[m - 1] } else { p[i + 1] };
            self.next[i] = p[i] + r * (l + rr - 2.0 * p[i]);
        }
    }

    /// Active nodes at distance at least `h` from the interface on each side.
    fn sides(&self) -> (Option<usize>, Option<usize>) {
        let h = self.h;
        let il = ((self.xi - h) / h + 1e-12).floor();
        let ir = ((self.xi + h) / h - 1e-12).ceil();
        let left = (il >= 0.0).then_some(il as usize);
        let right = ((ir as usize) <= self.m()).then_some(ir as usize);
        (left, right)
    }

    fn jump(&self) -> Option<f64> {
        let (l, r) = self.sides();
        let (l, r) = (l?, r?);
        let ps = self.p_star;
        let h = self.h;
        let left = if l >= 1 {
            quad_slope(self.xi, ps, self.node(l), self.p[l], self.node(l - 1), self.p[l - 1])
        } else {
            (ps - self.p[0]) / (self.xi - self.node(0))
        };
        let right = if r < self.m() {
            quad_slope(self.xi, ps, self.node(r), self.p[r], self.node(r + 1), self.p[r + 1])
        } else {
            (self.p[r] - ps) / (self.node(r) - self.xi)
        };
        let _ = h;
        Some(right - left)
    }

    /// Heat step with Dirichlet value `p*` at the interface on both sides.
    fn clamped_step(&mut self, r: f64) {
        let (l, rt) = self.sides();
        let m = self.m();
        let ps = self.p_star;
        let p = &self.p;
        for v in self.next.iter_mut() {
            *v = ps;
        }
        if let Some(l) = l {
            for i in 0..=l {
                let left = if i == 0 { p[1.min(m)] } else { p[i - 1] };
                if i < l {
                    self.next[i] = p[i] + r * (left + p[i + 1] - 2.0 * p[i]);
                } else {
                    let th = (self.xi - self.node(i)) / self.h;
                    let lap = 2.0 * ((ps - p[i]) / (th * (1.0 + th)) + (left - p[i]) / (1.0 + th));
                    self.next[i] = p[i] + r * lap;
                }
            }
        }
        if let Some(rt) = rt {
            for i in rt..=m {
                let right = if i == m { p[m - 1] } else { p[i + 1] };
                if i > rt {
                    self.next[i] = p[i] + r * (p[i - 1] + right - 2.0 * p[i]);
                } else {
                    let th = (self.node(i) - self.xi) / self.h;
                    let lap = 2.0 * ((ps - p[i]) / (th * (1.0 + th)) + (right - p[i]) / (1.0 + th));
                    self.next[i] = p[i] + r * lap;
                }
            }
        }
    }

    /// Nodes within `h` of the interface follow the line to the clamped value.
    fn fill_slaved(&mut self) {
        let (l, rt) = self.sides();
        let ps = self.p_star;
        let lo = l.map(|v| v + 1).unwrap_or(0);
        let hi = rt.unwrap_or(self.m() + 1);
        for i in lo..hi {
            let x = self.node(i);
            self.p[i] = if x <= self.xi {
                match l {
                    Some(l) => {
                        let xl = self.node(l);
                        self.p[l] + (ps - self.p[l]) * (x - xl) / (self.xi - xl)
                    }
                    None => ps,
                }
            } else {
                match rt {
                    Some(r) => {
                        let xr = self.node(r);
                        ps + (self.p[r] - ps) * (x - self.xi) / (xr - self.xi)
                    }
                    None => ps,
                }
            };
        }
    }
}

/// Checks the admissibility of `(P_ini, Ξ_ini)` on the nodes of a grid.
pub fn check_admissible(profile: &Profile, xi_ini: f64, p_star: f64, nodes: usize) -> Result<()> {
    profile.validate()?;
    if !(0.0..=1.0).contains(&xi_ini) {
        return Err(Error::Domain(format!("xi_ini={xi_ini} outside [0, 1]")));
    }
    for i in 0..=nodes {
        let x = i as f64 / nodes as f64;
        let v = profile.eval(x);
        if x < xi_ini && v <= -p_star {
            return Err(Error::Domain(format!("P_ini({x}) = {v} <= -p* left of the interface")));
        }
        if x > xi_ini && (v < -p_star || v > p_star) {
            return Err(Error::Domain(format!("P_ini({x}) = {v} outside J* right of the interface")));
        }
    }
    Ok(())
}

pub fn solve_stefan(
    profile: &Profile,
    xi_ini: f64,
    p_star: f64,
    tau_fin: f64,
    grid: &StefanGrid,
) -> Result<StefanSolution> {
    if grid.cells < 4 {
        return Err(Error::Config("Stefan grid needs at least 4 cells".into()));
    }
    if !(grid.cfl > 0.0 && grid.cfl <= 0.4) {
        return Err(Error::Config(format!("CFL factor {} outside (0, 0.4]", grid.cfl)));
    }
    if !(tau_fin > 0.0) || grid.samples == 0 {
        return Err(Error::Config("tau_fin and samples must be positive".into()));
    }
    check_admissible(profile, xi_ini, p_star, grid.cells)?;
    let m = grid.cells;
    let h = 1.0 / m as f64;
    let xi: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let p0: Vec<f64> = xi.iter().map(|&x| profile.eval(x)).collect();
    let mut f = Front { h, p_star, p: p0, xi: xi_ini, next: vec![0.0; m + 1] };
    let dtau_max = grid.cfl * h * h;
    let sample_dt = tau_fin / grid.samples as f64;
    let steps_per_sample = (sample_dt / dtau_max).ceil() as usize;
    let dtau = sample_dt / steps_per_sample as f64;
    let r = dtau / (h * h);
    let mut sol = StefanSolution {
        p_star,
        tau: vec![0.0],
        xi,
        p: vec![f.p.clone()],
        interface: vec![f.xi],
        regime: vec![Regime::Pinned],
        truncated: false,
    };
    for s in 1..=grid.samples {
        let mut moved = false;
        for _ in 0..steps_per_sample {
            f.heat_step(r);
            if f.value_at_interface(&f.next) <= p_star {
                std::mem::swap(&mut f.p, &mut f.next);
                continue;
            }
            let speed = f.jump().map(|j| 0.5 * j.max(0.0));
            let Some(speed) = speed else {
                sol.truncated = true;
                break;
            };
            f.clamped_step(r);
            std::mem::swap(&mut f.p, &mut f.next);
            if speed > 0.0 {
                moved = true;
                f.xi += dtau * speed;
            }
            f.fill_slaved();
            if f.sides().1.is_none() {
                sol.truncated = true;
                break;
            }
        }
        sol.tau.push(s as f64 * sample_dt);
        sol.p.push(f.p.clone());
        sol.interface.push(f.xi);
        sol.regime.push(if moved { Regime::Moving } else { Regime::Pinned });
        if sol.truncated {
            break;
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_is_stationary() {
        let sol = solve_stefan(&Profile::Constant { value: 0.0 }, 0.4, 0.5, 0.05, &StefanGrid::new(50)).unwrap();
        assert!(sol.interface.iter().all(|&x| x == 0.4));
        assert!(sol.final_field().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_inside_band_is_stationary() {
        let sol = solve_stefan(&Profile::Constant { value: 0.3 }, 0.4, 0.5, 0.05, &StefanGrid::new(50)).unwrap();
        assert!(sol.interface.iter().all(|&x| x == 0.4));
        assert!(sol.final_field().iter().all(|&v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn rejects_cfl_and_inadmissible_data() {
        let mut g = StefanGrid::new(50);
        g.cfl = 0.6;
        assert!(solve_stefan(&Profile::Constant { value: 0.0 }, 0.4, 0.5, 0.05, &g).is_err());
        let hot_right = Profile::Knots { points: vec![[0.0, 0.0], [1.0, 0.9]] };
        assert!(solve_stefan(&hot_right, 0.4, 0.5, 0.05, &StefanGrid::new(50)).is_err());
    }

    #[test]
    fn quadratic_slope_is_exact() {
        let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let s = quad_slope(0.3, f(0.3), 0.1, f(0.1), -0.05, f(-0.05));
        assert!((s - (2.0 - 6.0 * 0.3)).abs() < 1e-12);
    }
}
