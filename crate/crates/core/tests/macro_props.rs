use proptest::prelude::*;
use splx::macroscopic::diagnostics::{has_depinning, is_advance_then_pin, segment_regimes};
use splx::macroscopic::{solve_stefan, xi_index, DetectOptions, Regime, StefanGrid};
use splx::profile::Profile;
use splx::scenarios;

proptest! {
    #[test]
    fn xi_index_picks_nearest_site(j in 1i64..2000, off in -0.49f64..0.49, n in 10usize..1000) {
        let eps = 1.0 / n as f64;
        prop_assert_eq!(xi_index((j as f64 + off) * eps, eps), j);
    }

    #[test]
    fn ramp_then_plateau_is_advance_then_pin(stop in 0.02f64..0.08, speed in 0.5f64..5.0) {
        let curve = move |t: f64| 0.3 + speed * t.min(stop);
        let segs = segment_regimes(&curve, 0.1, &DetectOptions::default());
        prop_assert!(is_advance_then_pin(&segs), "{segs:?}");
        prop_assert!(!has_depinning(&segs));
    }

    #[test]
    fn plateau_then_ramp_is_depinning(start in 0.02f64..0.08, speed in 0.5f64..5.0) {
        let curve = move |t: f64| 0.3 + speed * (t - start).max(0.0);
        let segs = segment_regimes(&curve, 0.1, &DetectOptions::default());
        prop_assert!(has_depinning(&segs), "{segs:?}");
        prop_assert_eq!(segs[0].regime, Regime::Pinned);
    }
}

#[test]
fn stefan_front_stays_put_inside_hysteresis_band() {
    let profile = Profile::Knots { points: vec![[0.0, 0.3], [1.0, -0.3]] };
    let sol = solve_stefan(&profile, 0.5, 0.5, 0.05, &StefanGrid::new(200)).unwrap();
    assert!(sol.interface.iter().all(|x| *x == 0.5));
}

#[test]
fn stefan_pinning_front_advances_then_stops() {
    let sc = scenarios::pinning();
    let sol = solve_stefan(&sc.profile, sc.xi_ini, 0.5, sc.tau_fin, &StefanGrid::new(400)).unwrap();
    let last = *sol.interface.last().unwrap();
    assert!(last > sc.xi_ini + 0.02);
    let n = sol.tau.len();
    assert_eq!(sol.interface[n - 1], sol.interface[n - 10]);
}
