use proptest::prelude::*;
use splx::spinodal::{even_part, representation_residual, simulate_toy, split_slow_fast, Forcing};

fn even_seq(max_w: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2..max_w).prop_map(|half| {
        let w = half.len() - 1;
        (0..=2 * w).map(|i| half[(i as i64 - w as i64).unsigned_abs() as usize]).collect()
    })
}

proptest! {
    #[test]
    fn representation_holds(z in even_seq(60), k in 0.05f64..20.0) {
        prop_assert!(representation_residual(&z, k) < 1e-12);
    }

    #[test]
    fn representation_sees_only_the_even_part(z in prop::collection::vec(-1.0f64..1.0, 3..40), k in 0.1f64..5.0) {
        let z = if z.len() % 2 == 0 { z[1..].to_vec() } else { z };
        prop_assert!(representation_residual(&z, k) < 1e-12);
    }

    #[test]
    fn slow_fast_split_is_exact(z in even_seq(40), k in 0.1f64..10.0) {
        let sp = split_slow_fast(&z, k);
        for i in 0..z.len() {
            let scale = z[i].abs().max(sp.z_fast[i].abs());
            prop_assert!((sp.z_fast[i] + sp.z_slow[i] - z[i]).abs() <= scale * f64::EPSILON);
        }
        let w = z.len() / 2;
        prop_assert_eq!(sp.z_slow[w], 0.0);
    }

    #[test]
    fn toy_keeps_even_data_even(z in even_seq(20), k in 0.2f64..4.0, f in -0.5f64..0.5) {
        let dt = 0.1 / (4.0 * k.max(1.0));
        let tr = simulate_toy(&z, k, Forcing::Constant { value: f }, 1.0, dt, 5).unwrap();
        let last = &tr.snapshots.last().unwrap().z;
        let w = last.len() / 2;
        for j in 0..=w {
            prop_assert!((last[w + j] - last[w - j]).abs() < 1e-12);
        }
        prop_assert_eq!(even_part(last).len(), w + 1);
    }
}
