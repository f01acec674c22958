//! Browser bindings for the demo page: a lattice run, the impact profile and
//! the Stefan front. Series are returned flat as `[x0, y0, x1, y1, ...]`.

use wasm_bindgen::prelude::*;

use splx::fluctuations;
use splx::lattice::{simulate, InitialDataSpec, LatticeConfig, DEFAULT_ETA};
use splx::macroscopic::{solve_stefan, InterfaceCurves, StefanGrid};
use splx::potential::PotentialParams;
use splx::scenarios::{self, Scenario};

const SAMPLES: usize = 200;

fn scenario(name: &str) -> Result<Scenario, JsError> {
    scenarios::by_name(name).ok_or_else(|| JsError::new(&format!("unknown scenario {name}")))
}

fn err(e: splx::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Interface `Ξ*(τ)` of a lattice run, followed by the final `P` field as
/// `(ξ, p)` pairs; the first entry is the number of interface pairs.
#[wasm_bindgen]
pub fn lattice_run(name: &str, n: usize, kappa: f64) -> Result<Vec<f64>, JsError> {
    let sc = scenario(name)?;
    if !(20..=800).contains(&n) {
        return Err(JsError::new("n must lie in 20..=800"));
    }
    let params = PotentialParams::new(kappa).map_err(err)?;
    let mut cfg = LatticeConfig::new(n, kappa, params.dt_max(DEFAULT_ETA), sc.tau_fin);
    cfg.strict = false;
    cfg.snapshot_stride = usize::MAX;
    let out = simulate(&cfg, &InitialDataSpec::macroscopic(sc.profile, sc.xi_ini), &mut []).map_err(err)?;
    let curves = InterfaceCurves::from_log(&out.log);
    let mut v = vec![SAMPLES as f64 + 1.0];
    for i in 0..=SAMPLES {
        let tau = sc.tau_fin * i as f64 / SAMPLES as f64;
        v.push(tau);
        v.push(curves.xi_star(tau));
    }
    let traj = &out.trajectory;
    let last = traj.last();
    for (i, p) in traj.p_of(last).into_iter().enumerate() {
        let xi = traj.epsilon * (traj.first_site + i as i64) as f64;
        if (0.0..=1.0).contains(&xi) {
            v.push(xi);
            v.push(p);
        }
    }
    Ok(v)
}

/// Impact profile `ρ_j` for `|j| <= radius`.
#[wasm_bindgen]
pub fn impact_profile(kappa: f64, radius: usize) -> Result<Vec<f64>, JsError> {
    let rho = fluctuations::impact_profile(kappa).map_err(err)?;
    let r = radius.min(200) as i64;
    Ok((-r..=r).flat_map(|j| [j as f64, rho.get(j)]).collect())
}

/// Stefan interface `Ξ(τ)` for a preset scenario.
#[wasm_bindgen]
pub fn stefan_front(name: &str, kappa: f64, cells: usize) -> Result<Vec<f64>, JsError> {
    let sc = scenario(name)?;
    let p_star = PotentialParams::new(kappa).map_err(err)?.p_star;
    let sol = solve_stefan(&sc.profile, sc.xi_ini, p_star, sc.tau_fin, &StefanGrid::new(cells.clamp(50, 2000))).map_err(err)?;
    Ok(sol.tau.iter().zip(&sol.interface).flat_map(|(t, x)| [*t, *x]).collect())
}
