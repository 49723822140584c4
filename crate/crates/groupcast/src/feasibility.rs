//! Independent feasibility audit of an executed run.
//!
//! [`check_feasibility`] re-derives every physical and policy constraint from
//! the raw transfer records in an [`ExecutionLog`] — it deliberately shares no
//! bookkeeping with the schedulers or the executor, so a bug there shows up
//! here as a reported [`Violation`] instead of being double-counted away.

use crate::model::{ExecutionLog, Transfer, UserId, UserLink, VideoSpec, EPS_MB};
use crate::weights::StreamingMode;
use std::collections::BTreeMap;

/// One broken constraint found in an execution log.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Layer `layer` of `chunk` was delivered but `layer − 1` was not.
    DecodeChain { chunk: usize, layer: usize },
    /// Useful transfers for one (chunk, layer) came over more than one link.
    MultipleLinks { chunk: usize, layer: usize },
    /// A user carried a layer above their set's ceiling.
    LayerCap { chunk: usize, layer: usize, user: UserId, max_layer: usize },
    /// A link moved more megabits in one second than its trace allows.
    Bandwidth { user: UserId, second: u32, used: f64, available: f64 },
    /// A user's total download (useful + wasted) exceeds their cap.
    Contribution { user: UserId, used: f64, cap: f64 },
    /// A useful transfer landed after the chunk's effective deadline.
    Deadline { chunk: usize, layer: usize, second: u32, deadline: u32 },
    /// A layer's useful megabits are neither 0 nor the full layer size.
    PartialLayer { chunk: usize, layer: usize, got: f64, want: f64 },
    /// Stall values must be all-zero in skip mode and non-decreasing in
    /// no-skip mode; `chunk` is the first offender.
    StallMonotone { chunk: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DecodeChain { chunk, layer } => {
                write!(f, "chunk {chunk}: layer {layer} delivered without layer {}", layer - 1)
            }
            Violation::MultipleLinks { chunk, layer } => {
                write!(f, "chunk {chunk} layer {layer}: delivered over multiple links")
            }
            Violation::LayerCap { chunk, layer, user, max_layer } => write!(
                f,
                "chunk {chunk} layer {layer}: user {user} above their ceiling {max_layer}"
            ),
            Violation::Bandwidth { user, second, used, available } => write!(
                f,
                "user {user} second {second}: moved {used} Mb with only {available} Mb available"
            ),
            Violation::Contribution { user, used, cap } => {
                write!(f, "user {user}: downloaded {used} Mb against a {cap} Mb cap")
            }
            Violation::Deadline { chunk, layer, second, deadline } => write!(
                f,
                "chunk {chunk} layer {layer}: bytes moved in second {second} after deadline {deadline}"
            ),
            Violation::PartialLayer { chunk, layer, got, want } => write!(
                f,
                "chunk {chunk} layer {layer}: {got} of {want} Mb marked useful"
            ),
            Violation::StallMonotone { chunk } => {
                write!(f, "chunk {chunk}: stall sequence is not valid for the mode")
            }
        }
    }
}

/// Audits an execution log against the video, roster, and streaming mode.
/// Returns every violation found (empty means the run is feasible).
///
/// Checks, in order: decode chains and single-link whole-layer delivery;
/// per-layer useful byte totals; per-second link bandwidth and total
/// contribution caps over useful **and** wasted bytes; useful bytes landing
/// by the effective deadline; stall-sequence shape for the mode.
pub fn check_feasibility(
    log: &ExecutionLog,
    video: &VideoSpec,
    users: &[UserLink],
    mode: StreamingMode,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let roster: BTreeMap<UserId, &UserLink> = users.iter().map(|u| (u.id, u)).collect();

    // Decode chains and layer ceilings over the delivered view.
    for i in 1..=log.chunk_count {
        for n in 0..log.layer_count {
            let Some(uid) = log.assignment[n][i - 1] else { continue };
            if n > 0 && log.assignment[n - 1][i - 1].is_none() {
                out.push(Violation::DecodeChain { chunk: i, layer: n });
            }
            if let Some(u) = roster.get(&uid) {
                if n > u.max_layer {
                    out.push(Violation::LayerCap {
                        chunk: i,
                        layer: n,
                        user: uid,
                        max_layer: u.max_layer,
                    });
                }
            }
        }
    }

    // Group useful transfers by (chunk, layer): one link, full layer size,
    // all within the deadline. Undelivered layers must have no useful bytes.
    let mut per_layer: BTreeMap<(usize, usize), Vec<&Transfer>> = BTreeMap::new();
    for t in &log.useful {
        per_layer.entry((t.chunk, t.layer)).or_default().push(t);
    }
    for i in 1..=log.chunk_count {
        for n in 0..log.layer_count {
            let transfers = per_layer.get(&(i, n)).map_or(&[][..], |v| v.as_slice());
            let got: f64 = transfers.iter().map(|t| t.megabits).sum();
            let want = if log.assignment[n][i - 1].is_some() {
                video.layer_sizes[n]
            } else {
                0.0
            };
            if (got - want).abs() > EPS_MB {
                out.push(Violation::PartialLayer { chunk: i, layer: n, got, want });
            }
            if let Some(uid) = log.assignment[n][i - 1] {
                if transfers.iter().any(|t| t.user != uid) {
                    out.push(Violation::MultipleLinks { chunk: i, layer: n });
                }
                let deadline = log.deadlines[i - 1];
                for t in transfers {
                    if t.second > deadline {
                        out.push(Violation::Deadline {
                            chunk: i,
                            layer: n,
                            second: t.second,
                            deadline,
                        });
                    }
                }
            }
        }
    }

    // Physical link limits: per-second bandwidth and total contribution,
    // both over useful and wasted bytes alike.
    let mut per_second: BTreeMap<(UserId, u32), f64> = BTreeMap::new();
    let mut per_user: BTreeMap<UserId, f64> = BTreeMap::new();
    for t in log.useful.iter().chain(log.wasted.iter()) {
        *per_second.entry((t.user, t.second)).or_insert(0.0) += t.megabits;
        *per_user.entry(t.user).or_insert(0.0) += t.megabits;
    }
    for (&(uid, second), &used) in &per_second {
        let available = roster.get(&uid).map_or(0.0, |u| u.trace.mb_in_second(second));
        if used > available + EPS_MB {
            out.push(Violation::Bandwidth { user: uid, second, used, available });
        }
    }
    for (&uid, &used) in &per_user {
        if let Some(crate::model::Contribution::Capped(cap)) = roster.get(&uid).map(|u| u.cap) {
            if used > cap + EPS_MB {
                out.push(Violation::Contribution { user: uid, used, cap });
            }
        }
    }

    // Stall shape: zeros in skip mode, non-decreasing in no-skip mode.
    match mode {
        StreamingMode::Skip => {
            if let Some(pos) = log.stalls.iter().position(|&d| d != 0) {
                out.push(Violation::StallMonotone { chunk: pos + 1 });
            }
        }
        StreamingMode::NoSkip => {
            if let Some(pos) = log.stalls.windows(2).position(|w| w[1] < w[0]) {
                out.push(Violation::StallMonotone { chunk: pos + 2 });
            }
        }
    }

    out
}
