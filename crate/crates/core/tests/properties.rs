use proptest::prelude::*;

use twosided::markov::{
    monotonicity_probe, stationary_materialized, stationary_truncated, RhoProfile, DEFAULT_TOL,
};
use twosided::pricing::{evaluate, lemma1_value, Policy, PriceModel};
use twosided::queue::{match_amount, step, QueueConfig, QueueState};
use twosided::stats::batch_ci;

fn box_profile() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(0.2f64..1.8, 1..12), 0.1f64..0.95)
}

fn base_box(w: f64) -> PriceModel {
    PriceModel::linear(1.0, 3.5, 1.0, 2.0, 2.0, w).unwrap()
}

proptest! {
    #[test]
    fn stationary_is_a_distribution_satisfying_balance((rho, tail) in box_profile()) {
        let p = RhoProfile::with_tail(rho.clone(), tail).unwrap();
        let d = stationary_truncated(&p, DEFAULT_TOL).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(d.pi().iter().all(|&x| x > 0.0));
        for (i, r) in rho.iter().enumerate() {
            let lhs = d.pi()[i] * r;
            prop_assert!((lhs - d.pi()[i + 1]).abs() <= 1e-12 * lhs.max(1e-300));
        }
    }

    #[test]
    fn materialized_tail_agrees_with_closed_form((rho, tail) in box_profile()) {
        let p = RhoProfile::with_tail(rho, tail).unwrap();
        let a = stationary_truncated(&p, DEFAULT_TOL).unwrap();
        let b = stationary_materialized(&p, 1e-13).unwrap();
        prop_assert!((a.pi0() - b.pi0()).abs() < 1e-10);
        prop_assert!((a.mean() - b.mean()).abs() < 1e-8 * a.mean().max(1.0));
    }

    #[test]
    fn raising_a_ratio_lowers_pi0_and_raises_mean(
        (rho, tail) in box_profile(),
        pick in 0usize..12,
    ) {
        let p = RhoProfile::new(rho.clone(), Some(tail), (0.1, 1.9)).unwrap();
        let i = pick % rho.len() + 1;
        let s = monotonicity_probe(&p, i, 1e-3).unwrap();
        prop_assert!(s.dpi0 < 0.0);
        prop_assert!(s.dmean > 0.0);
    }

    #[test]
    fn static_objectives_coincide(p in 1.0f64..1.49, w in 0.01f64..1.0) {
        let m = base_box(w);
        let o = evaluate(&m, &Policy::Static(p)).unwrap();
        prop_assert_eq!(o.c, o.c_rel);
    }

    #[test]
    fn relaxed_objective_matches_linear_identity(
        prices in prop::collection::vec(1.0f64..2.0, 1..10),
        last in 1.0f64..1.49,
        w in 0.01f64..1.0,
    ) {
        let m = base_box(w);
        let mut prices = prices;
        prices.push(last);
        let policy = Policy::tabular(&m, prices).unwrap();
        let direct = evaluate(&m, &policy).unwrap().c_rel;
        let identity = lemma1_value(&m, &policy).unwrap();
        prop_assert!((direct - identity).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn matching_never_exceeds_pairs(n in 0.0f64..500.0, mu in 0.5f64..5.0, frac in 0.01f64..0.99, u in 20.0f64..400.0) {
        let m = match_amount(n, mu, frac * mu, u);
        prop_assert!(m >= 0.0 && m <= n);
    }

    #[test]
    fn step_keeps_queues_in_range(
        s in 0.0f64..400.0,
        q in 0.0f64..400.0,
        a in 0u64..6,
        b in 0u64..6,
    ) {
        let cfg = QueueConfig::with_target_rate(1.0, 0.1, 100.0).unwrap().build().unwrap();
        let out = step(QueueState { s, q_c: q, t: 0 }, a, b, &cfg);
        prop_assert!(out.next.s >= 0.0 && out.next.s <= cfg.s_bar());
        prop_assert!(out.next.q_c >= 0.0);
        prop_assert!(out.matched <= s.min(q));
        prop_assert!((out.next.q_c - (q + b as f64 - out.matched)).abs() < 1e-9);
    }

    #[test]
    fn batch_stats_are_consistent(xs in prop::collection::vec(-10.0f64..10.0, 60..400), k in 2usize..30) {
        let s = batch_ci(&xs, k).unwrap();
        prop_assert!(s.ci_halfwidth >= 0.0);
        let mean = s.batch_means.iter().sum::<f64>() / s.n_batches as f64;
        prop_assert!((s.overall_mean - mean).abs() < 1e-9);
    }
}
