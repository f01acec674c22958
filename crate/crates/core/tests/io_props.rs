use proptest::prelude::*;
use splx::io::{read_csv, read_frame, read_jsonl, write_csv, write_frame, write_jsonl};
use splx::lattice::{Snapshot, Trajectory};

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn frames_roundtrip_bitwise(frames in prop::collection::vec((finite(), prop::collection::vec(any::<f64>(), 0..30)), 0..5)) {
        let mut buf = Vec::new();
        for (t, v) in &frames {
            write_frame(&mut buf, *t, v).unwrap();
        }
        let mut r = &buf[..];
        for (t, v) in &frames {
            let (t2, v2) = read_frame(&mut r).unwrap().unwrap();
            prop_assert_eq!(t2.to_bits(), t.to_bits());
            prop_assert_eq!(v2.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
        prop_assert!(read_frame(&mut r).unwrap().is_none());
    }

    #[test]
    fn jsonl_roundtrip_exact(rows in prop::collection::vec((0.0f64..10.0, prop::collection::vec(-3.0f64..3.0, 6), -5i64..5), 1..6), first in -10i64..10) {
        let traj = Trajectory {
            first_site: first,
            n_domain: 6,
            epsilon: 1.0 / 6.0,
            kappa: 1.3,
            dt: 0.01,
            t_fin: 10.0,
            snapshots: rows.into_iter().map(|(t, u, k)| Snapshot { t, u, k }).collect(),
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &traj, "abc").unwrap();
        let (h, back) = read_jsonl(&buf[..]).unwrap();
        prop_assert_eq!(h.config_hash, "abc");
        prop_assert_eq!(back, traj);
    }

    #[test]
    fn csv_roundtrip_exact(rows in prop::collection::vec(prop::collection::vec(finite(), 3), 0..20)) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["note".into()], &["a", "b", "c"], &rows).unwrap();
        let t = read_csv(&buf[..]).unwrap();
        prop_assert_eq!(t.rows, rows);
    }
}

#[test]
fn truncated_frame_is_an_error() {
    let mut buf = Vec::new();
    write_frame(&mut buf, 1.0, &[1.0, 2.0]).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(read_frame(&mut &buf[..]).is_err());
}
