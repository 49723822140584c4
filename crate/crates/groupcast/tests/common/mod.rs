//! Seeded instance generators shared by the integration suites. Everything
//! is driven by an explicit ChaCha seed so failures replay exactly.
#![allow(dead_code)] // each test target uses its own subset of these helpers

use groupcast::{BandwidthTrace, Contribution, UserLink, VideoSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_trace(rng: &mut ChaCha8Rng, seconds: u32, max_mbps: u32) -> BandwidthTrace {
    BandwidthTrace::new(
        (0..seconds)
            .map(|_| rng.gen_range(0..=max_mbps) as f64)
            .collect(),
    )
}

/// A small oracle-checkable instance: ≤6 chunks, ≤3 layers, ≤3 users, one
/// priority set, whole-megabit bandwidth samples in 0..=3.
pub fn small_instance(rng: &mut ChaCha8Rng) -> (VideoSpec, Vec<UserLink>) {
    let chunks = rng.gen_range(2..=6);
    let chunk_seconds = rng.gen_range(1..=2);
    let startup = rng.gen_range(0..=2);
    let layer_count = rng.gen_range(1..=3);
    let sizes: Vec<f64> = (0..layer_count)
        .map(|n| {
            if n == 0 {
                [1.0, 2.0][rng.gen_range(0..2)]
            } else {
                [0.5, 1.0][rng.gen_range(0..2)]
            }
        })
        .collect();
    let video = VideoSpec::new(chunks, chunk_seconds, startup, sizes).unwrap();
    let user_count = rng.gen_range(1..=3);
    let horizon = video.horizon() + 2;
    let users = (1..=user_count)
        .map(|id| {
            let cap = if rng.gen_bool(0.25) {
                Contribution::Capped(rng.gen_range(2..=12) as f64)
            } else {
                Contribution::Unlimited
            };
            UserLink {
                id,
                set: 1,
                max_layer: video.top_layer(),
                cap,
                trace: random_trace(rng, horizon, 3),
            }
        })
        .collect();
    (video, users)
}

/// Two users for the avoid-skips preference case: user 1 may fetch every
/// layer, user 2 is a base-layer-only backup in the second set.
pub fn avoid_skips_instance(rng: &mut ChaCha8Rng) -> (VideoSpec, Vec<UserLink>) {
    let chunks = rng.gen_range(2..=5);
    let chunk_seconds = 1;
    let startup = rng.gen_range(0..=2);
    let layer_count = rng.gen_range(2..=3);
    let sizes: Vec<f64> = (0..layer_count)
        .map(|n| if n == 0 { 2.0 } else { 1.0 })
        .collect();
    let video = VideoSpec::new(chunks, chunk_seconds, startup, sizes).unwrap();
    let horizon = video.horizon() + 2;
    let users = vec![
        UserLink {
            id: 1,
            set: 1,
            max_layer: video.top_layer(),
            cap: Contribution::Unlimited,
            trace: random_trace(rng, horizon, 3),
        },
        UserLink {
            id: 2,
            set: 2,
            max_layer: 0,
            cap: Contribution::Unlimited,
            trace: random_trace(rng, horizon, 3),
        },
    ];
    (video, users)
}

/// A broader fuzzing instance: up to 30 chunks, 4 layers, 5 users, mixed
/// caps and priority sets. Traces always cover the no-skip worst case.
pub fn medium_instance(rng: &mut ChaCha8Rng) -> (VideoSpec, Vec<UserLink>) {
    let chunks = rng.gen_range(3..=30);
    let chunk_seconds = rng.gen_range(1..=2);
    let startup = rng.gen_range(0..=4);
    let layer_count = rng.gen_range(1..=4);
    let sizes: Vec<f64> = (0..layer_count)
        .map(|n| {
            if n == 0 {
                rng.gen_range(5..=20) as f64 / 10.0
            } else {
                rng.gen_range(2..=10) as f64 / 10.0
            }
        })
        .collect();
    let video = VideoSpec::new(chunks, chunk_seconds, startup, sizes).unwrap();
    let user_count = rng.gen_range(1..=5);
    // Ceilings must be strictly decreasing across sets; build the set
    // layout first, then deal users into it.
    let set_count = rng.gen_range(1..=layer_count.min(user_count));
    let mut ceilings: Vec<usize> = (0..layer_count).collect();
    ceilings.shuffle(rng);
    let mut ceilings: Vec<usize> = ceilings.into_iter().take(set_count).collect();
    ceilings.sort_unstable_by(|a, b| b.cmp(a));
    // Long-tail trace: cover the fully-stalled no-skip horizon.
    let trace_len = video.duration() + video.chunk_count as u32 * video.chunk_seconds + 8;
    let users = (0..user_count)
        .map(|idx| {
            let set = if idx < set_count { idx } else { rng.gen_range(0..set_count) };
            let cap = if rng.gen_bool(0.3) {
                Contribution::Capped(rng.gen_range(5..=60) as f64)
            } else {
                Contribution::Unlimited
            };
            UserLink {
                id: idx as u32 + 1,
                set: set as u32 + 1,
                max_layer: ceilings[set],
                cap,
                trace: random_trace(rng, trace_len, 4),
            }
        })
        .collect();
    (video, users)
}
