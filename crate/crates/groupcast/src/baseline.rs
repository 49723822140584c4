//! Round-robin baselines: buffer-based (BB) and prediction-based (PB)
//! quality adaptation with chunks dealt evenly across links.
//!
//! Both baselines run in the same sliding-window loop as the cooperative
//! scheduler and are executed by the same simulator, so their logs pass the
//! same feasibility checks and their metrics are directly comparable. What
//! differs is only how the next window is planned: a single target quality
//! is chosen for the whole window — from buffer occupancy (BB) or from the
//! predicted aggregate rate (PB) — and the layers up to that target are
//! assigned round-robin over the links, blind to deadlines and to per-link
//! rate differences. That blindness is exactly what the comparison measures.

use crate::model::{validate_roster, Contribution, ExecutionLog, UserLink, VideoSpec};
use crate::online::{
    harmonic_predict, window_contribution, OnlineConfig, OnlineError, Simulator,
};
use std::time::Instant;

/// Buffer thresholds (seconds of buffered content) steering the BB target:
/// at or below `low` the target is the base layer; at or above `high` it is
/// the top layer; linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct BBConfig {
    pub low_seconds: f64,
    pub high_seconds: f64,
}

impl Default for BBConfig {
    fn default() -> Self {
        Self { low_seconds: 4.0, high_seconds: 10.0 }
    }
}

/// Fraction of the predicted aggregate rate PB dares to schedule.
pub const PB_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineAlgo {
    BufferBased,
    PredictionBased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub algo: BaselineAlgo,
    pub bb: BBConfig,
    /// Window size, replan period, margin, history depth and buffer limit
    /// are shared with the cooperative scheduler for a like-for-like run.
    pub online: OnlineConfig,
    /// With preference on, links outside set 1 receive base layers only.
    pub preference: bool,
}

impl BaselineConfig {
    pub fn new(algo: BaselineAlgo) -> Self {
        Self {
            algo,
            bb: BBConfig::default(),
            online: OnlineConfig::default(),
            preference: false,
        }
    }
}

/// BB target layer for a given buffer occupancy, on `top_layer + 1` levels.
pub fn bb_quality(occupancy_seconds: f64, cfg: &BBConfig, top_layer: usize) -> usize {
    if occupancy_seconds <= cfg.low_seconds {
        return 0;
    }
    if occupancy_seconds >= cfg.high_seconds {
        return top_layer;
    }
    let frac =
        (occupancy_seconds - cfg.low_seconds) / (cfg.high_seconds - cfg.low_seconds);
    (frac * top_layer as f64).floor() as usize
}

/// PB target layer: the highest quality whose cumulative rate fits within
/// `PB_SAFETY` of the predicted aggregate rate; the base layer if none does.
pub fn pb_quality(predicted_sum_mbps: f64, cumulative_rates: &[f64]) -> usize {
    let budget = PB_SAFETY * predicted_sum_mbps;
    cumulative_rates
        .iter()
        .rposition(|&r| r <= budget)
        .unwrap_or(0)
}

/// One baseline replan: pick the window's target quality, then deal the
/// missing layers round-robin. `pointer` persists across windows so the
/// deal stays fair over the whole run.
fn replan_baseline(
    sim: &mut Simulator,
    period_index: u32,
    config: &BaselineConfig,
    buffer_limit: u32,
    pointer: &mut usize,
) {
    let cfg = &config.online;
    let window = sim.select_window(cfg.window, cfg.deadline_margin, buffer_limit);
    if window.is_empty() {
        return;
    }
    let video = sim.video;
    let est: Vec<Option<f64>> = sim
        .history
        .iter()
        .map(|h| harmonic_predict(h, cfg.history_depth).or(cfg.initial_estimate_mbps))
        .collect();
    let budgets: Vec<Contribution> = sim
        .users
        .iter()
        .enumerate()
        .map(|(ui, u)| {
            window_contribution(
                u.cap,
                cfg.window,
                video.chunk_seconds,
                video.horizon().max(1),
                period_index,
                cfg.replan_period,
                sim.fetched[ui],
            )
        })
        .collect();
    let target = match config.algo {
        BaselineAlgo::BufferBased => {
            bb_quality(sim.buffer_occupancy_seconds(), &config.bb, video.top_layer())
        }
        BaselineAlgo::PredictionBased => {
            if est.iter().all(Option::is_none) {
                // Nothing to predict from yet: deal one base layer per link
                // to seed the history, like the cooperative bootstrap.
                let ids: Vec<_> = sim.users.iter().map(|u| u.id).collect();
                for (k, &i) in window.iter().take(ids.len()).enumerate() {
                    if !sim.is_delivered(i, 0) {
                        sim.plan.assignment[0][i - 1] = Some(ids[k % ids.len()]);
                    }
                }
                return;
            }
            // Only links that may still contribute this window count
            // toward the predicted aggregate rate.
            let sum: f64 = est
                .iter()
                .zip(&budgets)
                .filter(|(_, b)| match b {
                    Contribution::Unlimited => true,
                    Contribution::Capped(x) => *x > 0.0,
                })
                .filter_map(|(e, _)| *e)
                .sum();
            pb_quality(sum, &video.cumulative_rates())
        }
    };
    sim.clear_window(&window);
    let user_count = sim.users.len();
    let mut spend = vec![0.0f64; user_count];
    for &i in &window {
        for n in 0..=target {
            if sim.is_delivered(i, n) {
                continue;
            }
            let y = video.layer_sizes[n];
            let mut taker = None;
            for off in 0..user_count {
                let ui = (*pointer + off) % user_count;
                let u = sim.users[ui];
                if u.max_layer < n {
                    continue;
                }
                if config.preference && n >= 1 && u.set != 1 {
                    continue;
                }
                if !budgets[ui].allows(spend[ui] + y) {
                    continue;
                }
                taker = Some(ui);
                break;
            }
            let Some(ui) = taker else {
                // No link can carry this layer; higher layers of the chunk
                // would be undecodable, so stop here.
                break;
            };
            sim.plan.assignment[n][i - 1] = Some(sim.users[ui].id);
            spend[ui] += y;
            *pointer = (ui + 1) % user_count;
        }
    }
}

/// Runs a round-robin baseline against the users' true traces and returns
/// the playback log (skip-mode playback: late chunks are dropped).
pub fn run_baseline(
    video: &VideoSpec,
    users: &[UserLink],
    config: &BaselineConfig,
) -> Result<ExecutionLog, OnlineError> {
    validate_roster(video, users)?;
    let buffer_limit = config.online.validate(video)?;
    for u in users {
        if u.trace.len_seconds() < video.horizon() {
            return Err(OnlineError::TraceTooShort {
                user: u.id,
                have: u.trace.len_seconds(),
                need: video.horizon(),
            });
        }
    }
    let mut sim = Simulator::new(video, users, false);
    let mut pointer = 0usize;
    loop {
        if sim.all_finalized() {
            break;
        }
        sim.boundary()?;
        if sim.all_finalized() {
            break;
        }
        if sim.now.is_multiple_of(config.online.replan_period) {
            let period_index = sim.now / config.online.replan_period;
            let t0 = Instant::now();
            replan_baseline(&mut sim, period_index, config, buffer_limit, &mut pointer);
            sim.replan_micros.push(t0.elapsed().as_micros() as u64);
            sim.rebuild_queues();
        }
        sim.drain_second();
    }
    Ok(sim.finish())
}
