use proptest::prelude::*;
use splx::entropy::{make_pair, pairing_term, smoothed_step, Mu};
use splx::potential::PotentialParams;

fn monotone_mu() -> impl Strategy<Value = Mu> {
    prop::collection::vec((0.01f64..0.5, 0.0f64..2.0), 2..6).prop_map(|steps| {
        let mut x = -1.0;
        let mut y = -0.5;
        let points = steps
            .into_iter()
            .map(|(dx, dy)| {
                x += dx;
                y += dy;
                [x, y]
            })
            .collect();
        Mu::PiecewiseLinear { points }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eta_derivative_is_mu_of_phi_prime(mu in monotone_mu(), k in 0.3f64..5.0, u in -2.5f64..2.5) {
        let params = PotentialParams::new(k).unwrap();
        let pair = make_pair(mu.clone(), params).unwrap();
        let h = 1e-5;
        prop_assume!((u.abs() - params.u_star).abs() > 2.0 * h);
        let fd = (pair.eta(u + h) - pair.eta(u - h)) / (2.0 * h);
        let exact = mu.eval(params.phi_prime(u));
        prop_assert!((fd - exact).abs() < 1e-4 * (1.0 + k) * (1.0 + mu.slope_bound()), "{fd} vs {exact}");
    }

    #[test]
    fn eta_is_convex_on_phases(mu in monotone_mu(), k in 0.3f64..5.0) {
        let pair = make_pair(mu, PotentialParams::new(k).unwrap()).unwrap();
        prop_assert!(pair.convex_on_phases());
    }

    #[test]
    fn pairing_is_nonnegative(mu in monotone_mu(), p in prop::collection::vec(-1.0f64..1.0, 2..50)) {
        prop_assert!(pairing_term(&p, &mu) >= 0.0);
        prop_assert!(pairing_term(&p, &smoothed_step(0.2)) >= 0.0);
    }
}
