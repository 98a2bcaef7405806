//! Ordering and shape invariants of the analytic pipeline over random settings.

use proptest::prelude::*;
use qvp::cli::{read_curve_csv, run_analyze, RunConfig};

const SLACK: f64 = 1e-12;

/// α ≥ 6 keeps the first large-queue block stable for V ≤ 4.
fn settings() -> impl Strategy<Value = (f64, f64)> {
    (1.0f64..4.0, 2u32..=5).prop_map(|(v, k)| (v, 3.0 * k as f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tails_are_ordered_and_decreasing((v, alpha) in settings()) {
        let a = RunConfig::table_iii(v, 3, alpha).resolve().unwrap().analyze().unwrap();
        let t = &a.tails;
        let mut prev = [f64::INFINITY; 4];
        for j in 0..=(4.0 * alpha) as usize {
            let q = j as f64;
            let now = [t.slb.eval(q).value, t.fca.eval(q).value, t.lca.eval(q).value, t.sub.eval(q).value];
            for w in now.windows(2) {
                prop_assert!(w[0] <= w[1] + SLACK, "j={} order {:?}", j, now);
            }
            for (p, n) in prev.iter().zip(&now) {
                prop_assert!((0.0..=1.0).contains(n));
                prop_assert!(*n <= p + SLACK, "j={} not decreasing", j);
            }
            prev = now;
        }
        prop_assert!(a.sql.bounds.psi_l <= a.sql.bounds.psi_u + SLACK);
    }

    #[test]
    fn exponents_grow_with_backlog((v, alpha) in settings()) {
        let a = RunConfig::table_iii(v, 3, alpha).resolve().unwrap().analyze().unwrap();
        let th: Vec<f64> = a.segments.iter().map(|s| s.qos.theta).collect();
        prop_assert!(th.iter().all(|t| *t > 0.0));
        prop_assert!(th.windows(2).all(|w| w[1] >= w[0]), "{:?}", th);
    }

    #[test]
    fn analyze_csv_log_columns_match((v, alpha) in settings()) {
        let mut buf = Vec::new();
        run_analyze(&RunConfig::table_iii(v, 3, alpha), &mut buf).unwrap();
        let f = read_curve_csv(buf.as_slice()).unwrap();
        let sub = f.column("sub_ec").unwrap();
        let ln_sub = f.column("ln_sub_ec").unwrap();
        for (s, l) in sub.iter().zip(&ln_sub) {
            let (s, l) = (s.unwrap(), l.unwrap());
            if s > 1e-300 {
                prop_assert!((s.ln() - l).abs() <= 1e-9 * l.abs().max(1.0));
            }
        }
    }
}
