use proptest::prelude::*;
use splx::fluctuations::{analyze, decompose, impact_profile, FluctOptions};
use splx::lattice::{simulate, InitialDataSpec, LatticeConfig, SimOutcome};
use splx::scenarios;
use std::sync::OnceLock;

fn base() -> &'static SimOutcome {
    static RUN: OnceLock<SimOutcome> = OnceLock::new();
    RUN.get_or_init(|| {
        let sc = scenarios::pinning();
        let mut cfg = LatticeConfig::new(100, 1.0, 0.05, 0.03);
        cfg.snapshot_stride = 40;
        cfg.strict = false;
        simulate(&cfg, &InitialDataSpec::macroscopic(sc.profile, sc.xi_ini), &mut []).unwrap()
    })
}

proptest! {
    #[test]
    fn profile_mass_is_two(k in (-2.0f64..4.0).prop_map(|e| 10f64.powf(e))) {
        let rho = impact_profile(k).unwrap();
        prop_assert!((rho.mass() - 2.0).abs() < 1e-12);
        let q = 1.0 / (1.0 + 2.0 * k);
        for d in 0..rho.radius().min(8) as i64 {
            let closed = 2.0 * rho.p_star * q.powi(d as i32);
            prop_assert!((rho.get(d) - closed).abs() <= 1e-15 * closed.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn lattice_profile_keeps_mass(k in 0.1f64..10.0, n in 5usize..60, c in 0usize..60) {
        let c = c % n;
        let rho = impact_profile(k).unwrap();
        let v = rho.on_lattice(n, c);
        prop_assert!((v.iter().sum::<f64>() - rho.mass()).abs() < 1e-12);
    }
}

#[test]
fn splits_are_exact() {
    let out = base();
    let opts = FluctOptions::default();
    let mut checked = 0;
    for rec in out.log.records.iter().filter(|r| r.completed()) {
        let d = decompose(&out.trajectory, &out.log, rec.k, &opts).unwrap();
        for s in 0..d.times.len() {
            for j in 0..d.r[s].len() {
                let scale = d.r[s][j].abs().max(d.r_ess[s][j].abs());
                assert!((d.r_ess[s][j] + d.r_neg[s][j] - d.r[s][j]).abs() <= 2.0 * scale * f64::EPSILON);
                assert_eq!(d.r_reg[s][j] + d.r_res[s][j], d.r_ess[s][j]);
                assert!(d.r_reg[s][j] == 0.0 || d.r_res[s][j] == 0.0);
            }
        }
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn superposition_and_counting() {
    let out = base();
    let mut log = out.log.clone();
    let an = analyze(&out.trajectory, &mut log, &FluctOptions { keep_fields: false, ..Default::default() }).unwrap();
    assert!(an.max_superposition() < 0.05);
    for s in &an.stats {
        assert!((s.ess_mass - 2.0 * s.completed as f64).abs() < 1e-9);
        assert!(s.res_l1 <= 2.0 + 1e-6);
        assert!(s.split_ulps <= 2.0, "split off by {} ulps", s.split_ulps);
    }
}
