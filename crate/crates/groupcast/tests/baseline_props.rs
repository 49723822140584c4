//! Seeded checks for the buffer-based and prediction-based round-robin
//! baselines: feasibility, fairness, determinism, preference handling.

mod common;

use common::{medium_instance, rng};
use groupcast::{
    check_feasibility, run_baseline, BandwidthTrace, BaselineAlgo, BaselineConfig,
    StreamingMode, UserLink, VideoSpec,
};
use rand::Rng;

#[test]
fn baseline_logs_always_replay_feasibly() {
    let mut r = rng(41);
    for round in 0..60 {
        let (video, users) = medium_instance(&mut r);
        let algo = if round % 2 == 0 {
            BaselineAlgo::BufferBased
        } else {
            BaselineAlgo::PredictionBased
        };
        let mut config = BaselineConfig::new(algo);
        config.preference = round % 4 < 2;
        let log = run_baseline(&video, &users, &config).unwrap();
        let violations = check_feasibility(&log, &video, &users, StreamingMode::Skip);
        assert!(violations.is_empty(), "round {round}: {violations:?}");
    }
}

#[test]
fn identical_links_share_the_deal_evenly() {
    // The dealer hands out individual layers, one per user in turn, with a
    // pointer that survives across windows: on identical links with ample
    // bandwidth every user ends up within one assignment of the others.
    let mut r = rng(42);
    for _ in 0..25 {
        let chunks = r.gen_range(8..=20);
        let layers = if r.gen_bool(0.5) { vec![1.0] } else { vec![1.0, 0.5] };
        let video = VideoSpec::new(chunks, 1, 2, layers).unwrap();
        let user_count = r.gen_range(2..=5);
        let users: Vec<UserLink> = (1..=user_count)
            .map(|id| {
                UserLink::unconstrained(
                    id,
                    video.top_layer(),
                    BandwidthTrace::flat(4.0, video.horizon() + 4),
                )
            })
            .collect();
        let config = BaselineConfig::new(BaselineAlgo::PredictionBased);
        let log = run_baseline(&video, &users, &config).unwrap();
        let counts: Vec<usize> = users
            .iter()
            .map(|u| {
                log.assignment
                    .iter()
                    .flatten()
                    .filter(|a| **a == Some(u.id))
                    .count()
            })
            .collect();
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(
            hi - lo <= 1,
            "round-robin drifted: {counts:?} over {user_count} identical links"
        );
    }
}

#[test]
fn baseline_runs_are_deterministic() {
    let mut r = rng(43);
    for round in 0..20 {
        let (video, users) = medium_instance(&mut r);
        let algo = if round % 2 == 0 {
            BaselineAlgo::BufferBased
        } else {
            BaselineAlgo::PredictionBased
        };
        let config = BaselineConfig::new(algo);
        let a = run_baseline(&video, &users, &config).unwrap();
        let b = run_baseline(&video, &users, &config).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.useful, b.useful);
        assert_eq!(a.wasted, b.wasted);
    }
}

#[test]
fn preference_keeps_enhancements_inside_the_first_set() {
    let mut r = rng(44);
    let mut multi_set_rounds = 0;
    while multi_set_rounds < 30 {
        let (video, users) = medium_instance(&mut r);
        if users.iter().all(|u| u.set == 1) {
            continue;
        }
        multi_set_rounds += 1;
        for algo in [BaselineAlgo::BufferBased, BaselineAlgo::PredictionBased] {
            let mut config = BaselineConfig::new(algo);
            config.preference = true;
            let log = run_baseline(&video, &users, &config).unwrap();
            for n in 1..video.layer_count() {
                for (i, slot) in log.assignment[n].iter().enumerate() {
                    if let Some(uid) = slot {
                        let owner = users.iter().find(|u| u.id == *uid).unwrap();
                        assert_eq!(
                            owner.set, 1,
                            "layer {n} of chunk {} went to set {}",
                            i + 1,
                            owner.set
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn delivered_quality_never_exceeds_the_roster_ceiling() {
    let mut r = rng(45);
    for _ in 0..40 {
        let (video, users) = medium_instance(&mut r);
        let ceiling = users.iter().map(|u| u.max_layer).max().unwrap();
        for algo in [BaselineAlgo::BufferBased, BaselineAlgo::PredictionBased] {
            let log = run_baseline(&video, &users, &BaselineConfig::new(algo)).unwrap();
            for outcome in &log.outcomes {
                if let groupcast::ChunkOutcome::Delivered { top } = outcome {
                    assert!(*top <= ceiling);
                }
            }
        }
    }
}
