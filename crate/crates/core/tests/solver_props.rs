use std::collections::BTreeSet;

use ndarray::{concatenate, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgkit::matrix::{col_values, duality_gap, row_values};
use sgkit::schedule::{Schedule, ScheduleFormGame};
use sgkit::solvers::stackelberg::{sse_multiple_lp, sse_simple_schedules, sse_simple_sfg};
use sgkit::solvers::zero_sum::{
    double_oracle_matrix, nash_lp, regret_matching, regret_matching_strategy, sparse_nash_milp, RmParams, RmVariant,
    DO_EPSILON,
};
use sgkit::{BimatrixGame, NodeId, TargetSpec};

fn matrix(seed: u64, n: usize, m: usize) -> Array2<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, m), |_| r.gen_range(-1.0..1.0))
}

fn general_targets(r: &mut ChaCha8Rng, k: usize) -> Vec<TargetSpec> {
    (0..k as u32)
        .map(|i| {
            let (du, dc) = (r.gen_range(-10.0..0.0), r.gen_range(0.0..10.0));
            let (ac, au) = (r.gen_range(-10.0..0.0), r.gen_range(0.0..10.0));
            TargetSpec::general(NodeId(i), du, dc, ac, au)
        })
        .collect()
}

/// Leader payoffs at every Nash equilibrium of a 2x2 game found by support
/// enumeration (pure profiles and the fully mixed one).
fn nash_values_2x2(a: &Array2<f64>, b: &Array2<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            if a[[i, j]] >= a[[1 - i, j]] && b[[i, j]] >= b[[i, 1 - j]] {
                out.push(a[[i, j]]);
            }
        }
    }
    // Row mix p makes the column player indifferent; column mix q likewise.
    let dp = b[[0, 0]] - b[[0, 1]] - b[[1, 0]] + b[[1, 1]];
    let dq = a[[0, 0]] - a[[1, 0]] - a[[0, 1]] + a[[1, 1]];
    if dp != 0.0 && dq != 0.0 {
        let p = (b[[1, 1]] - b[[1, 0]]) / dp;
        let q = (a[[1, 1]] - a[[0, 1]]) / dq;
        if (0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q) {
            out.push(q * a[[0, 0]] + (1.0 - q) * a[[0, 1]]);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minimax_values_agree(seed in any::<u64>(), n in 1usize..=12, m in 1usize..=12) {
        let a = matrix(seed, n, m);
        let r = nash_lp(&a).unwrap();
        let guarantee = col_values(&a, r.row.view()).fold(f64::INFINITY, |x, &v| x.min(v));
        let cap = row_values(&a, r.col.view()).fold(f64::NEG_INFINITY, |x, &v| x.max(v));
        prop_assert!((guarantee - cap).abs() <= 1e-7);
        prop_assert!((guarantee - r.value).abs() <= 1e-7);
        prop_assert!(duality_gap(&a, r.row.view(), r.col.view()) >= -1e-12);
    }

    #[test]
    fn sparse_values_climb_to_nash(seed in any::<u64>(), n in 1usize..=7, m in 1usize..=6) {
        let a = matrix(seed, n, m);
        let values: Vec<f64> = (1..=n).map(|k| sparse_nash_milp(&a, k).unwrap().value).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        prop_assert!((values[n - 1] - nash_lp(&a).unwrap().value).abs() <= 1e-7);
    }

    #[test]
    fn dominated_rows_leave_sparse_values_alone(seed in any::<u64>(), n in 2usize..=6, m in 1usize..=5, k in 1usize..=3) {
        let a = matrix(seed, n, m);
        let worse = a.mapv(|v| v - 0.5);
        let padded = concatenate![Axis(0), worse, a];
        let k = k.min(n);
        let base = sparse_nash_milp(&a, k).unwrap();
        let more = sparse_nash_milp(&padded, k).unwrap();
        prop_assert!((base.value - more.value).abs() <= 1e-9);
        prop_assert!(more.row.support_size() <= k);
    }

    #[test]
    fn double_oracle_matches_lp(seed in any::<u64>(), n in 1usize..=15, m in 1usize..=15) {
        let a = matrix(seed, n, m);
        let lp = nash_lp(&a).unwrap().value;
        let r = double_oracle_matrix(&a, DO_EPSILON).unwrap();
        prop_assert!((r.value - lp).abs() <= 1e-7);
        prop_assert!(duality_gap(&a, r.row.view(), r.col.view()) <= 1e-7);
    }

    #[test]
    fn regret_matching_follows_positive_regret(r in prop::collection::vec(-2.0f64..2.0, 1..8)) {
        let s = regret_matching_strategy(&r);
        let total: f64 = r.iter().map(|v| v.max(0.0)).sum();
        for (p, v) in s.iter().zip(&r) {
            let expect = if total > 0.0 { v.max(0.0) / total } else { 1.0 / r.len() as f64 };
            prop_assert!((p - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn sse_respects_follower_incentives(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=6) {
        let a = matrix(seed, n, m);
        let b = matrix(seed ^ 0xabcd, n, m);
        let s = sse_multiple_lp(&BimatrixGame::new(a.clone(), b.clone()).unwrap()).unwrap();
        let fv = col_values(&b, s.leader.view());
        for j in 0..m {
            prop_assert!(fv[s.follower] >= fv[j] - 1e-8);
        }
        let lv = col_values(&a, s.leader.view())[s.follower];
        prop_assert!((lv - s.value).abs() <= 1e-8);
    }

    #[test]
    fn sse_scales_with_payoffs(seed in any::<u64>(), n in 1usize..=5, m in 1usize..=5, c in prop::sample::select(vec![0.25, 2.0, 8.0])) {
        let a = matrix(seed, n, m);
        let b = matrix(seed ^ 0x1234, n, m);
        let s = sse_multiple_lp(&BimatrixGame::new(a.clone(), b.clone()).unwrap()).unwrap();
        let t = sse_multiple_lp(&BimatrixGame::new(a * c, b * c).unwrap()).unwrap();
        prop_assert_eq!(s.follower, t.follower);
        prop_assert!((t.value - c * s.value).abs() <= 1e-9 * c.max(1.0));
        let top = |x: &[f64]| {
            let best = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            x.iter().enumerate().filter(|(_, &v)| v >= best - 1e-9).map(|(i, _)| i).collect::<BTreeSet<_>>()
        };
        prop_assert_eq!(top(s.leader.probs()), top(t.leader.probs()));
    }

    #[test]
    fn sse_dominates_nash_in_2x2(seed in any::<u64>()) {
        let a = matrix(seed, 2, 2);
        let b = matrix(seed ^ 0x77, 2, 2);
        let s = sse_multiple_lp(&BimatrixGame::new(a.clone(), b.clone()).unwrap()).unwrap();
        for v in nash_values_2x2(&a, &b) {
            prop_assert!(s.value >= v - 1e-9);
        }
    }

    #[test]
    fn coverage_stays_in_budget(seed in any::<u64>(), k in 1usize..=8, res in 0.1f64..4.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let targets = general_targets(&mut r, k);
        let s = sse_simple_schedules(&targets, res).unwrap();
        prop_assert!(s.coverage.iter().all(|&c| (-1e-12..=1.0 + 1e-12).contains(&c)));
        prop_assert!(s.coverage.iter().sum::<f64>() <= res + 1e-9);
    }

    #[test]
    fn full_reach_sfg_matches_budget_lp(seed in any::<u64>(), k in 1usize..=6, d in 1usize..=3) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let targets = general_targets(&mut r, k);
        let singles: Vec<Schedule> = targets
            .iter()
            .map(|t| Schedule { targets: BTreeSet::from([t.node_id]), movement_steps: 2, movement_cost: 0.0 })
            .collect();
        let sfg = ScheduleFormGame::from_schedules(targets.clone(), vec![singles; d]).unwrap();
        let flow = sse_simple_sfg(&sfg).unwrap();
        let budget = sse_simple_schedules(&targets, d as f64).unwrap();
        prop_assert!((flow.value - budget.value).abs() <= 1e-7);
    }
}

#[test]
fn zero_sum_sse_equals_nash() {
    for seed in 0..40 {
        let a = matrix(seed, 1 + (seed as usize % 6), 1 + (seed as usize / 6 % 6));
        let sse = sse_multiple_lp(&BimatrixGame::zero_sum(a.clone()).unwrap()).unwrap().value;
        assert!((sse - nash_lp(&a).unwrap().value).abs() <= 1e-7, "seed {seed}");
    }
}

#[test]
fn regret_matching_gap_shrinks_on_large_games() {
    let params = RmParams { iterations: 10_000, runtime_cap: None, sample_interval: 100 };
    for variant in [RmVariant::Rm, RmVariant::RmPlus, RmVariant::PrmPlus] {
        let improved = (0..20u64)
            .filter(|&seed| {
                let a = matrix(1000 + seed, 50, 50);
                let r = regret_matching(&a, variant, &params).unwrap();
                let at = |it: usize| r.gap_trace.iter().find(|g| g.iteration == it).unwrap().gap;
                assert!(r.gap_trace.iter().all(|g| g.gap >= -1e-12));
                at(10_000) < at(100)
            })
            .count();
        assert!(improved >= 18, "{variant:?}: {improved}/20 seeds improved");
    }
}
