//! Seeded behavior checks for the sliding-window online scheduler: replay
//! feasibility, buffer discipline, determinism, and its relation to the
//! full-knowledge offline planner.

mod common;

use common::{medium_instance, rng};
use groupcast::{
    check_feasibility, make_weights, objective_value, plan_offline_nopref, run_online,
    ChunkOutcome, OnlineConfig, OnlineError, OnlineMode, StreamingMode, UserLink, VideoSpec,
};
use rand::Rng;

fn flatten_sets(video: &VideoSpec, users: &mut [UserLink]) {
    for u in users.iter_mut() {
        u.set = 1;
        u.max_layer = video.top_layer();
    }
}

#[test]
fn online_logs_always_replay_feasibly() {
    let mut r = rng(31);
    for round in 0..60 {
        let (video, users) = medium_instance(&mut r);
        let config = OnlineConfig {
            window: r.gen_range(1..=8),
            replan_period: r.gen_range(1..=6),
            deadline_margin: r.gen_range(0..=2),
            history_depth: r.gen_range(1..=6),
            ..OnlineConfig::default()
        };
        let mode = if round % 2 == 0 { OnlineMode::NoPref } else { OnlineMode::Pref };
        let log = run_online(&video, &users, &config, mode).unwrap();
        let violations = check_feasibility(&log, &video, &users, StreamingMode::Skip);
        assert!(violations.is_empty(), "round {round}: {violations:?}");
    }
}

#[test]
fn online_never_downloads_past_the_client_buffer() {
    let mut r = rng(32);
    for round in 0..60 {
        let (video, mut users) = medium_instance(&mut r);
        flatten_sets(&video, &mut users);
        let window = r.gen_range(1..=6);
        let min_buffer = window as u32 * video.chunk_seconds + video.startup_seconds;
        let buffer = min_buffer + r.gen_range(0..=4);
        let config = OnlineConfig {
            window,
            replan_period: r.gen_range(1..=4),
            buffer_limit: Some(buffer),
            ..OnlineConfig::default()
        };
        let log = run_online(&video, &users, &config, OnlineMode::NoPref).unwrap();
        let l = video.chunk_seconds as i64;
        let s = video.startup_seconds as i64;
        for t in log.useful.iter().chain(&log.wasted) {
            // A chunk is only plannable while its end position fits in the
            // buffer ahead of the playhead; transfers at second `t` were
            // planned at `t − 1` or earlier.
            let playhead =
                (t.second as i64 - 1 - s).clamp(0, video.duration() as i64);
            assert!(
                t.chunk as i64 * l <= playhead + buffer as i64,
                "round {round}: chunk {} fetched at second {} with playhead {playhead} \
                 and buffer {buffer}",
                t.chunk,
                t.second
            );
        }
    }
}

#[test]
fn online_runs_are_deterministic() {
    let mut r = rng(33);
    for _ in 0..20 {
        let (video, users) = medium_instance(&mut r);
        let config = OnlineConfig::default();
        let a = run_online(&video, &users, &config, OnlineMode::Pref).unwrap();
        let b = run_online(&video, &users, &config, OnlineMode::Pref).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.useful, b.useful);
        assert_eq!(a.wasted, b.wasted);
    }
}

#[test]
fn noskip_online_stalls_but_never_skips() {
    let mut r = rng(34);
    let mut completed = 0;
    while completed < 40 {
        let (video, mut users) = medium_instance(&mut r);
        flatten_sets(&video, &mut users);
        let log = match run_online(&video, &users, &OnlineConfig::default(), OnlineMode::NoSkip)
        {
            Ok(log) => log,
            Err(OnlineError::TraceExhausted { .. }) => continue,
            Err(other) => panic!("unexpected online error: {other}"),
        };
        completed += 1;
        for (i, outcome) in log.outcomes.iter().enumerate() {
            assert_ne!(*outcome, ChunkOutcome::Skipped, "chunk {}", i + 1);
        }
        assert!(log.stalls.windows(2).all(|w| w[0] <= w[1]));
        for i in 1..=video.chunk_count {
            assert_eq!(log.deadlines[i - 1], video.deadline(i) + log.stalls[i - 1]);
        }
        let violations = check_feasibility(&log, &video, &users, StreamingMode::NoSkip);
        assert!(violations.is_empty(), "{violations:?}");
    }
}

#[test]
fn hindsight_beats_prediction_on_seeded_runs() {
    let mut r = rng(35);
    for round in 0..30 {
        let (video, mut users) = medium_instance(&mut r);
        flatten_sets(&video, &mut users);
        let weights = make_weights(&video, 1);
        let offline = plan_offline_nopref(&video, &users).unwrap();
        let offline_score =
            objective_value(&offline.plan, &video, &users, &weights, StreamingMode::Skip)
                .unwrap();
        let log = run_online(&video, &users, &OnlineConfig::default(), OnlineMode::NoPref)
            .unwrap();
        let online_score =
            objective_value(&log.to_plan(), &video, &users, &weights, StreamingMode::Skip)
                .unwrap();
        assert!(
            offline_score >= online_score - 1e-9,
            "round {round}: online {online_score} beat offline {offline_score}"
        );
    }
}
