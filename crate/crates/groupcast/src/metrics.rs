//! Quality-of-experience metrics computed from an execution log.
//!
//! All of them are per-run scalars so runs can be tabulated and compared
//! directly: skip percentage, average playback rate, layer-switching rate,
//! total stall, the weighted objective, the delivered-quality histogram and
//! each link's share of the delivered bytes.

use crate::model::{ChunkOutcome, ExecutionLog, UserId, UserLink, VideoSpec};
use crate::weights::{objective_value, ObjectiveError, StreamingMode, WeightTable};
use serde::{Deserialize, Serialize};

/// One link's delivered-byte share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserShare {
    pub user: UserId,
    pub megabits: f64,
    /// Percent of all delivered megabits this run.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percent of chunks that missed playback entirely.
    pub skip_pct: f64,
    /// Average playback rate in Mbps over *all* chunks — a skipped chunk
    /// contributes zero, so skipping is not a way to look better.
    pub apbr_mbps: f64,
    /// Layer-switching rate: mean absolute playback-rate jump between
    /// consecutive chunks, counting only actual quality switches (a skip
    /// counts as its own quality level, so skip↔play edges are switches).
    pub lsr_mbps: f64,
    /// Total rebuffering `d(C)` in seconds (zero in skip mode).
    pub stall_seconds: u32,
    /// The weighted scheduling objective of the delivered plan.
    pub objective: f64,
    /// `layer_pct[n]`: percent of chunks whose delivered top layer is `n`.
    /// Together with `skip_pct` this partitions all chunks.
    pub layer_pct: Vec<f64>,
    /// Delivered megabits per link, id-ascending.
    pub per_user: Vec<UserShare>,
}

pub fn compute_metrics(
    log: &ExecutionLog,
    video: &VideoSpec,
    users: &[UserLink],
    weights: &WeightTable,
    mode: StreamingMode,
) -> Result<MetricsReport, ObjectiveError> {
    let c = video.chunk_count as f64;
    let rates = video.cumulative_rates();
    // Playback rate per chunk; None (skipped) plays at zero.
    let x: Vec<f64> = log
        .outcomes
        .iter()
        .map(|o| o.top_layer().map_or(0.0, |t| rates[t]))
        .collect();
    let skips = log
        .outcomes
        .iter()
        .filter(|o| **o == ChunkOutcome::Skipped)
        .count();
    let lsr = log
        .outcomes
        .windows(2)
        .zip(x.windows(2))
        .filter(|(o, _)| o[0].top_layer() != o[1].top_layer())
        .map(|(_, w)| (w[1] - w[0]).abs())
        .sum::<f64>()
        / c;
    let mut counts = vec![0usize; video.layer_count()];
    for o in &log.outcomes {
        if let Some(t) = o.top_layer() {
            counts[t] += 1;
        }
    }
    let mut ids: Vec<UserId> = users.iter().map(|u| u.id).collect();
    ids.sort_unstable();
    let delivered: Vec<f64> = ids.iter().map(|&id| log.delivered_megabits(id)).collect();
    let total: f64 = delivered.iter().sum();
    let per_user = ids
        .iter()
        .zip(&delivered)
        .map(|(&user, &megabits)| UserShare {
            user,
            megabits,
            percent: if total > 0.0 { megabits / total * 100.0 } else { 0.0 },
        })
        .collect();
    let objective = objective_value(&log.to_plan(), video, users, weights, mode)?;
    Ok(MetricsReport {
        skip_pct: skips as f64 / c * 100.0,
        apbr_mbps: x.iter().sum::<f64>() / c,
        lsr_mbps: lsr,
        stall_seconds: log.stall_total(),
        objective,
        layer_pct: counts.iter().map(|&k| k as f64 / c * 100.0).collect(),
        per_user,
    })
}
