//! Objective weights and objective evaluation.
//!
//! The optimization objective is a weighted sum of delivered megabits,
//! `Σ_k Σ_n λ_n^{(k)} · G_n^{(k)}`, where `G_n^{(k)}` is the total megabits
//! of layer `n` delivered over links of priority set `k`. The weights are
//! chosen so that the sum induces a strict lexicographic order: one extra
//! chunk delivered at layer `a` on set `k` is worth more than every possible
//! delivery at higher layers on any set, plus every delivery at layer `a` or
//! above on lower-priority sets. In no-skip mode a stall penalty `μ·d(C)`
//! large enough to dominate all quality terms is subtracted.

use crate::model::{FetchPlan, UserId, UserLink, VideoSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Whether chunks that miss their deadline are dropped (skip) or playback
/// stalls until they arrive (no-skip).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamingMode {
    Skip,
    NoSkip,
}

/// Per-(layer, set) objective weights plus the no-skip stall penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    /// `lambda[n][k-1]` is `λ_n^{(k)}`.
    pub lambda: Vec<Vec<f64>>,
    /// Stall penalty per second of startup delay added in no-skip mode.
    pub mu: f64,
}

impl WeightTable {
    pub fn weight(&self, layer: usize, set: u32) -> f64 {
        self.lambda[layer][(set - 1) as usize]
    }

    /// Brute-force check of the dominance condition over every
    /// `(a, k, k', k'')` combination:
    /// `λ_a^{(k)}·Y_a > C·(Σ_{n≥a} λ_n^{(k')}·Y_n + Σ_{n>a} λ_n^{(k'')}·Y_n)`
    /// for all `k' > k` and all `k'' ≤ k` (an absent `k'` contributes
    /// nothing; for `k = K` only the `k''` sum constrains).
    pub fn satisfies_dominance(&self, video: &VideoSpec) -> bool {
        let layers = video.layer_count();
        let sets = self.lambda.first().map_or(0, |row| row.len());
        let c = video.chunk_count as f64;
        let weighted = |n: usize, k: usize| self.lambda[n][k] * video.layer_sizes[n];
        for a in 0..layers {
            for k in 0..sets {
                let lhs = weighted(a, k);
                // Iterate every concrete (k', k'') pair, plus the "no lower
                // set" case encoded as a zero k' sum.
                let kp_sums: Vec<f64> = (k + 1..sets)
                    .map(|kp| (a..layers).map(|n| weighted(n, kp)).sum())
                    .chain(std::iter::once(0.0))
                    .collect();
                let kpp_sums: Vec<f64> = (0..=k)
                    .map(|kpp| (a + 1..layers).map(|n| weighted(n, kpp)).sum())
                    .collect();
                for &sp in &kp_sums {
                    for &spp in &kpp_sums {
                        if sp == 0.0 && spp == 0.0 {
                            continue; // vacuous: nothing to dominate
                        }
                        if lhs <= c * (sp + spp) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Builds a weight table satisfying the dominance condition.
///
/// Construction is deterministic: walk (layer, set) pairs from the
/// lexicographically last pair `(N, K)` backwards; the last pair gets
/// weight 1, and every other weight is set to twice its lower bound
/// (`C·(max_{k'>k} Σ_{n≥a} λY + max_{k''≤k} Σ_{n>a} λY) / Y_a`), or 1 when
/// the bound is zero.
///
/// ```
/// use groupcast::{make_weights, VideoSpec};
/// let video = VideoSpec::new(10, 1, 1, vec![2.0, 1.0]).unwrap();
/// let w = make_weights(&video, 1);
/// assert_eq!(w.lambda[1][0], 1.0); // top layer seeds the recursion
/// assert_eq!(w.lambda[0][0], 10.0); // 2 × the bound C·λ_1·Y_1/Y_0 = 5
/// ```
pub fn make_weights(video: &VideoSpec, set_count: u32) -> WeightTable {
    let layers = video.layer_count();
    let sets = set_count.max(1) as usize;
    let c = video.chunk_count as f64;
    let mut lambda = vec![vec![0.0; sets]; layers];
    for a in (0..layers).rev() {
        for k in (0..sets).rev() {
            let weighted = |n: usize, kk: usize| lambda[n][kk] * video.layer_sizes[n];
            let lower_max = (k + 1..sets)
                .map(|kp| (a..layers).map(|n| weighted(n, kp)).sum::<f64>())
                .fold(0.0, f64::max);
            let upper_max = (0..=k)
                .map(|kpp| (a + 1..layers).map(|n| weighted(n, kpp)).sum::<f64>())
                .fold(0.0, f64::max);
            let bound = c * (lower_max + upper_max) / video.layer_sizes[a];
            lambda[a][k] = if bound > 0.0 { 2.0 * bound } else { 1.0 };
        }
    }
    // One second of stall must outweigh delivering everything: the largest
    // weight is λ_0^{(1)} and total delivered megabits are below C·ΣY.
    let total_mb: f64 = video.layer_sizes.iter().sum();
    let mu = lambda[0][0] * c * total_mb * 2.0;
    WeightTable { lambda, mu }
}

#[derive(Debug, thiserror::Error)]
pub enum ObjectiveError {
    #[error("chunk {chunk}: layer {layer} delivered without layer {}", layer - 1)]
    DecodeChain { chunk: usize, layer: usize },
    #[error("chunk {chunk} layer {layer}: assigned user {user} is not in the roster")]
    UnknownUser { chunk: usize, layer: usize, user: UserId },
    #[error("chunk {chunk} layer {layer}: user {user} may not fetch above layer {max_layer}")]
    LayerCap { chunk: usize, layer: usize, user: UserId, max_layer: usize },
}

/// Weighted objective of a plan (or of an execution log's delivered view via
/// [`crate::ExecutionLog::to_plan`]); rejects structurally invalid plans.
///
/// Skip mode: `Σ λ_n^{(k)} · Y_n` over delivered layers. No-skip mode also
/// subtracts `μ · d(C)`.
pub fn objective_value(
    plan: &FetchPlan,
    video: &VideoSpec,
    users: &[UserLink],
    weights: &WeightTable,
    mode: StreamingMode,
) -> Result<f64, ObjectiveError> {
    let roster: BTreeMap<UserId, &UserLink> = users.iter().map(|u| (u.id, u)).collect();
    // Accumulate per-(layer, set) delivered megabits first so the final sum
    // has a fixed term order regardless of assignment layout.
    let mut delivered: BTreeMap<(usize, u32), f64> = BTreeMap::new();
    for i in 1..=plan.chunk_count {
        for n in 0..plan.layer_count {
            let Some(uid) = plan.assignment[n][i - 1] else {
                continue;
            };
            if n > 0 && plan.assignment[n - 1][i - 1].is_none() {
                return Err(ObjectiveError::DecodeChain { chunk: i, layer: n });
            }
            let user = roster
                .get(&uid)
                .ok_or(ObjectiveError::UnknownUser { chunk: i, layer: n, user: uid })?;
            if n > user.max_layer {
                return Err(ObjectiveError::LayerCap {
                    chunk: i,
                    layer: n,
                    user: uid,
                    max_layer: user.max_layer,
                });
            }
            // Whole-layer decisions: delivered megabits per layer are Y_n.
            *delivered.entry((n, user.set)).or_insert(0.0) += video.layer_sizes[n];
        }
    }
    let mut total = 0.0;
    for ((n, set), mb) in delivered {
        total += weights.weight(n, set) * mb;
    }
    if mode == StreamingMode::NoSkip {
        total -= weights.mu * plan.stall_total() as f64;
    }
    Ok(total)
}
