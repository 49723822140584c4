//! Cross-checks between the fast planners and the exhaustive-search
//! oracles on seeded small instances.

mod common;

use common::{rng, small_instance};
use groupcast::{
    make_weights, objective_value, oracle_min_skips, oracle_optimal, oracle_optimal_naive,
    plan_offline_nopref, StreamingMode, WeightTable,
};

#[test]
fn oracle_objective_dominates_the_planner() {
    let mut r = rng(21);
    for round in 0..60 {
        let (video, users) = small_instance(&mut r);
        let weights = make_weights(&video, 1);
        let planned = plan_offline_nopref(&video, &users).unwrap();
        let got =
            objective_value(&planned.plan, &video, &users, &weights, StreamingMode::Skip)
                .unwrap();
        let best = oracle_optimal(&video, &users, &weights).unwrap();
        assert!(
            got <= best.objective + 1e-9,
            "round {round}: planner {got} above oracle {}",
            best.objective
        );
    }
}

#[test]
fn planner_skip_counts_match_the_min_skip_oracle() {
    let mut r = rng(22);
    for round in 0..60 {
        let (video, users) = small_instance(&mut r);
        let planned = plan_offline_nopref(&video, &users).unwrap();
        for layer in 0..video.layer_count() {
            // Freeze the planner's own lower layers, then ask the oracle
            // for the fewest layer-`layer` misses possible on top of them.
            let planner_misses = (1..=video.chunk_count)
                .filter(|&i| {
                    planned.plan.delivered(layer, i).is_none()
                        && (layer == 0 || planned.plan.delivered(layer - 1, i).is_some())
                })
                .count();
            let oracle_misses =
                oracle_min_skips(&video, &users, layer, &planned.plan).unwrap();
            assert_eq!(
                planner_misses, oracle_misses,
                "round {round}, layer {layer}"
            );
        }
    }
}

#[test]
fn scaling_every_weight_scales_the_optimum_linearly() {
    let mut r = rng(23);
    for _ in 0..30 {
        let (video, users) = small_instance(&mut r);
        let weights = make_weights(&video, 1);
        let doubled = WeightTable {
            lambda: weights
                .lambda
                .iter()
                .map(|row| row.iter().map(|w| w * 2.0).collect())
                .collect(),
            mu: weights.mu * 2.0,
        };
        let a = oracle_optimal(&video, &users, &weights).unwrap();
        let b = oracle_optimal(&video, &users, &doubled).unwrap();
        assert_eq!(a.plan, b.plan, "optimal plan changed under weight scaling");
        assert!((b.objective - 2.0 * a.objective).abs() < 1e-9);
    }
}

#[test]
fn branch_and_bound_matches_full_enumeration_broadly() {
    let mut r = rng(24);
    let mut checked = 0;
    while checked < 50 {
        let (video, users) = small_instance(&mut r);
        // Plain enumeration is only wired for tiny instances.
        if video.chunk_count > 4 || video.layer_count() > 2 || users.len() > 2 {
            continue;
        }
        checked += 1;
        let weights = make_weights(&video, 1);
        let fast = oracle_optimal(&video, &users, &weights).unwrap();
        let slow = oracle_optimal_naive(&video, &users, &weights).unwrap();
        assert_eq!(fast.objective, slow, "instance {checked}");
    }
}
