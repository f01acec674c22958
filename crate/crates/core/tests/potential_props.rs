use proptest::prelude::*;
use splx::potential::{Phase, PotentialParams};

fn kappa() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn phi_prime_is_odd(k in kappa(), u in -5.0f64..5.0) {
        let p = PotentialParams::new(k).unwrap();
        prop_assert_eq!(p.phi_prime(-u), -p.phi_prime(u));
    }

    #[test]
    fn phi_is_even_and_nonnegative(k in kappa(), u in -5.0f64..5.0) {
        let p = PotentialParams::new(k).unwrap();
        prop_assert_eq!(p.phi(-u), p.phi(u));
        prop_assert!(p.phi(u) >= 0.0);
    }

    #[test]
    fn phi_prime_is_derivative_of_phi(k in 0.1f64..10.0, u in -3.0f64..3.0) {
        let p = PotentialParams::new(k).unwrap();
        let h = 1e-6;
        prop_assume!((u.abs() - p.u_star).abs() > 2.0 * h);
        let fd = (p.phi(u + h) - p.phi(u - h)) / (2.0 * h);
        prop_assert!((fd - p.phi_prime(u)).abs() < 1e-6 * (1.0 + k));
    }

    #[test]
    fn spinodal_values_stay_in_band(k in kappa(), s in -1.0f64..=1.0) {
        let p = PotentialParams::new(k).unwrap();
        let u = s * p.u_star;
        prop_assert!(p.phi_prime(u).abs() <= p.p_star);
    }

    #[test]
    fn phases_increase_on_their_branches(k in kappa(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let p = PotentialParams::new(k).unwrap();
        let (x, y) = (p.u_star + a.min(b), p.u_star + a.max(b));
        prop_assert!(p.phi_prime(x) <= p.phi_prime(y));
        prop_assert!(p.phi_prime(-y) <= p.phi_prime(-x));
        prop_assert_eq!(p.classify(y + 1e-9), Phase::Plus);
        prop_assert_eq!(p.classify(-y - 1e-9), Phase::Minus);
    }

    #[test]
    fn u_star_star_reaches_p_star(k in kappa()) {
        let p = PotentialParams::new(k).unwrap();
        prop_assert!((p.phi_prime(p.u_star_star) - p.p_star).abs() <= 4.0 * f64::EPSILON);
        prop_assert!((p.u_star + p.p_star - 1.0).abs() <= 2.0 * f64::EPSILON);
    }
}

#[test]
fn rejects_bad_kappa() {
    for k in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(PotentialParams::new(k).is_err());
    }
}
