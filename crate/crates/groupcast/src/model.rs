//! Core domain types: video description, user links, bandwidth traces,
//! fetch plans, and execution logs.
//!
//! Conventions used throughout the crate:
//!
//! * data volumes are **megabits** (`f64`), time is whole **seconds**;
//! * chunks are indexed `1..=C`, layers `0..=N` (layer 0 is the base layer);
//! * second `j` means the j-th one-second slot, so a chunk with deadline `d`
//!   may use bandwidth from seconds `1..=d`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Absolute tolerance for floating-point bookkeeping of megabit amounts.
///
/// Trace samples carry at most six decimal digits, so anything below this
/// threshold is accumulated rounding noise, not real bandwidth.
pub const EPS_MB: f64 = 1e-9;

/// Identifier of a contributing user link.
pub type UserId = u32;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("video must have at least one chunk")]
    NoChunks,
    #[error("chunk duration must be at least one second")]
    ZeroChunkDuration,
    #[error("video needs at least the base layer")]
    NoLayers,
    #[error("layer {0} has non-positive size")]
    BadLayerSize(usize),
    #[error("no users supplied")]
    NoUsers,
    #[error("duplicate user id {0}")]
    DuplicateUser(UserId),
    #[error("set ids must cover 1..=K without gaps (missing set {0})")]
    SetGap(u32),
    #[error("users {0} and {1} share set {2} but disagree on max layer")]
    InconsistentSet(UserId, UserId, u32),
    #[error("set {0} must allow strictly more layers than set {1}")]
    SetOrdering(u32, u32),
    #[error("user {0}: max layer {1} exceeds top video layer {2}")]
    LayerOutOfRange(UserId, usize, usize),
    #[error("user {0}: negative contribution cap")]
    NegativeCap(UserId),
}

/// The layered video being streamed: `C` chunks of `L` seconds each, encoded
/// into a base layer plus `N` enhancement layers of fixed per-chunk sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSpec {
    /// Number of chunks `C`.
    pub chunk_count: usize,
    /// Chunk duration `L` in seconds.
    pub chunk_seconds: u32,
    /// Startup delay `s` in seconds: playback begins `s` seconds after the
    /// download clock starts, which is what gives chunk 1 a usable deadline.
    pub startup_seconds: u32,
    /// `layer_sizes[n]` is the size of layer `n` of one chunk in megabits
    /// (`Y_n = L · r_n` for incremental layer rate `r_n`).
    pub layer_sizes: Vec<f64>,
}

impl VideoSpec {
    pub fn new(
        chunk_count: usize,
        chunk_seconds: u32,
        startup_seconds: u32,
        layer_sizes: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if chunk_count == 0 {
            return Err(ModelError::NoChunks);
        }
        if chunk_seconds == 0 {
            return Err(ModelError::ZeroChunkDuration);
        }
        if layer_sizes.is_empty() {
            return Err(ModelError::NoLayers);
        }
        for (n, &y) in layer_sizes.iter().enumerate() {
            if y.is_nan() || y <= 0.0 {
                return Err(ModelError::BadLayerSize(n));
            }
        }
        Ok(Self {
            chunk_count,
            chunk_seconds,
            startup_seconds,
            layer_sizes,
        })
    }

    /// Number of layers including the base layer (`N + 1`).
    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len()
    }

    /// Index of the highest layer `N`.
    pub fn top_layer(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Playback deadline of chunk `i` (1-based) without stalls:
    /// `(i − 1)·L + s`.
    pub fn deadline(&self, chunk: usize) -> u32 {
        debug_assert!(chunk >= 1 && chunk <= self.chunk_count);
        (chunk as u32 - 1) * self.chunk_seconds + self.startup_seconds
    }

    /// Deadline of the last chunk; a trace must cover at least this many
    /// seconds to drive a full offline plan.
    pub fn horizon(&self) -> u32 {
        self.deadline(self.chunk_count)
    }

    /// Total video duration `C·L` in seconds (playback time, not wall time).
    pub fn duration(&self) -> u32 {
        self.chunk_count as u32 * self.chunk_seconds
    }

    /// Cumulative playback rate of each quality level in Mbps:
    /// `cumulative_rates()[n] = Σ_{k≤n} Y_k / L`. Strictly increasing.
    pub fn cumulative_rates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layer_sizes.len());
        let mut acc = 0.0;
        for &y in &self.layer_sizes {
            acc += y;
            out.push(acc / self.chunk_seconds as f64);
        }
        out
    }
}

/// A user's total-download allowance over the whole video.
///
/// Unlimited is a real variant, not a large sentinel, so arithmetic on caps
/// cannot silently overflow into nonsense.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Contribution {
    Unlimited,
    /// At most this many megabits in total.
    Capped(f64),
}

impl Contribution {
    /// Whether at least `mb` megabits may still be drawn.
    pub fn allows(&self, mb: f64) -> bool {
        match self {
            Contribution::Unlimited => true,
            Contribution::Capped(c) => *c + EPS_MB >= mb,
        }
    }

    /// Remaining allowance clamped to `[0, limit]`.
    pub fn min_with(&self, limit: f64) -> f64 {
        match self {
            Contribution::Unlimited => limit,
            Contribution::Capped(c) => c.max(0.0).min(limit),
        }
    }

    pub fn consume(&mut self, mb: f64) {
        if let Contribution::Capped(c) = self {
            *c -= mb;
        }
    }

    pub fn is_unlimited(&self) -> bool {
        matches!(self, Contribution::Unlimited)
    }
}

/// One second-granular bandwidth trace. `samples[j-1]` is the number of
/// megabits that can be moved during second `j`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BandwidthTrace {
    pub samples: Vec<f64>,
}

impl BandwidthTrace {
    pub fn new(samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|s| *s >= 0.0));
        Self { samples }
    }

    /// A constant-rate trace of `seconds` seconds at `mbps`.
    pub fn flat(mbps: f64, seconds: u32) -> Self {
        Self {
            samples: vec![mbps; seconds as usize],
        }
    }

    pub fn len_seconds(&self) -> u32 {
        self.samples.len() as u32
    }

    /// Megabits available in second `j` (1-based); zero past the end of the
    /// trace, so a short trace behaves like a link that went silent.
    pub fn mb_in_second(&self, j: u32) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.samples.get(j as usize - 1).copied().unwrap_or(0.0)
    }
}

/// A contributing user link: priority set membership, layer ceiling,
/// contribution cap, and its (true) bandwidth trace.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    pub id: UserId,
    /// Priority set `k`, 1-based; set 1 is the most preferred.
    pub set: u32,
    /// Highest layer index this user's set may fetch (`N_k`).
    pub max_layer: usize,
    pub cap: Contribution,
    pub trace: BandwidthTrace,
}

impl UserLink {
    /// A set-1 user allowed to fetch every layer, uncapped. Useful for
    /// single-set ("no preference") rosters.
    pub fn unconstrained(id: UserId, top_layer: usize, trace: BandwidthTrace) -> Self {
        Self {
            id,
            set: 1,
            max_layer: top_layer,
            cap: Contribution::Unlimited,
            trace,
        }
    }
}

/// Validates a roster against the video and returns the number of sets `K`.
///
/// Rules: ids unique; set ids cover `1..=K` with no gaps; all members of a
/// set share the same `max_layer`; layer ceilings strictly decrease from one
/// set to the next lower-priority set; no cap is negative.
pub fn validate_roster(video: &VideoSpec, users: &[UserLink]) -> Result<u32, ModelError> {
    if users.is_empty() {
        return Err(ModelError::NoUsers);
    }
    let mut seen: BTreeMap<UserId, ()> = BTreeMap::new();
    for u in users {
        if seen.insert(u.id, ()).is_some() {
            return Err(ModelError::DuplicateUser(u.id));
        }
        if u.max_layer > video.top_layer() {
            return Err(ModelError::LayerOutOfRange(u.id, u.max_layer, video.top_layer()));
        }
        if let Contribution::Capped(c) = u.cap {
            if c < 0.0 {
                return Err(ModelError::NegativeCap(u.id));
            }
        }
    }
    let set_count = users.iter().map(|u| u.set).max().unwrap_or(0);
    let mut set_layer: BTreeMap<u32, (UserId, usize)> = BTreeMap::new();
    for u in users {
        match set_layer.get(&u.set) {
            None => {
                set_layer.insert(u.set, (u.id, u.max_layer));
            }
            Some(&(first, ml)) if ml != u.max_layer => {
                return Err(ModelError::InconsistentSet(first, u.id, u.set));
            }
            _ => {}
        }
    }
    let mut prev: Option<(u32, usize)> = None;
    for k in 1..=set_count {
        let (_, ml) = *set_layer.get(&k).ok_or(ModelError::SetGap(k))?;
        if let Some((pk, pml)) = prev {
            if ml >= pml {
                return Err(ModelError::SetOrdering(pk, k));
            }
        }
        prev = Some((k, ml));
    }
    Ok(set_count)
}

/// Delivery status of one chunk at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChunkOutcome {
    /// Base layer missed: the whole chunk is dropped from playback.
    /// Ordered below every real layer when computing switching metrics.
    Skipped,
    /// Layers `0..=top` were delivered in time.
    Delivered { top: usize },
}

impl ChunkOutcome {
    pub fn top_layer(&self) -> Option<usize> {
        match self {
            ChunkOutcome::Skipped => None,
            ChunkOutcome::Delivered { top } => Some(*top),
        }
    }
}

/// The scheduler's output: which user fetches which layer of which chunk,
/// plus the effective deadlines the decisions were made against.
///
/// `assignment[n][i-1]` holds the user carrying layer `n` of chunk `i`, or
/// `None` when that layer is not delivered. Whole-layer semantics: an
/// assigned layer is delivered entirely by that one user.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchPlan {
    pub chunk_count: usize,
    pub layer_count: usize,
    pub assignment: Vec<Vec<Option<UserId>>>,
    /// Effective per-chunk deadlines (including any stall shift).
    pub deadlines: Vec<u32>,
    /// Cumulative stall `d(i)` per chunk; all zeros in skip mode.
    pub stalls: Vec<u32>,
}

impl FetchPlan {
    /// An empty (all-skipped) plan with the video's nominal deadlines.
    pub fn empty(video: &VideoSpec) -> Self {
        let deadlines = (1..=video.chunk_count).map(|i| video.deadline(i)).collect();
        Self {
            chunk_count: video.chunk_count,
            layer_count: video.layer_count(),
            assignment: vec![vec![None; video.chunk_count]; video.layer_count()],
            deadlines,
            stalls: vec![0; video.chunk_count],
        }
    }

    pub fn delivered(&self, layer: usize, chunk: usize) -> Option<UserId> {
        self.assignment[layer][chunk - 1]
    }

    /// Outcome of chunk `i`: highest contiguously delivered layer, or skipped
    /// when the base layer is missing.
    pub fn outcome(&self, chunk: usize) -> ChunkOutcome {
        let mut top = None;
        for n in 0..self.layer_count {
            if self.assignment[n][chunk - 1].is_some() {
                top = Some(n);
            } else {
                break;
            }
        }
        match top {
            None => ChunkOutcome::Skipped,
            Some(t) => ChunkOutcome::Delivered { top: t },
        }
    }

    pub fn outcomes(&self) -> Vec<ChunkOutcome> {
        (1..=self.chunk_count).map(|i| self.outcome(i)).collect()
    }

    /// Total stall `d(C)` in seconds.
    pub fn stall_total(&self) -> u32 {
        self.stalls.last().copied().unwrap_or(0)
    }

    /// Chunks whose base layer is missing, ascending.
    pub fn skipped_chunks(&self) -> Vec<usize> {
        (1..=self.chunk_count)
            .filter(|&i| self.assignment[0][i - 1].is_none())
            .collect()
    }

    /// Serializes the decision grid as `{"decisions": [{chunk, layer, user}]}`
    /// with `user: null` for undelivered layers — the golden-file format.
    pub fn decisions_json(&self) -> serde_json::Value {
        let mut rows = Vec::new();
        for i in 1..=self.chunk_count {
            for n in 0..self.layer_count {
                rows.push(serde_json::json!({
                    "chunk": i,
                    "layer": n,
                    "user": self.assignment[n][i - 1],
                }));
            }
        }
        serde_json::json!({ "decisions": rows })
    }
}

/// One bandwidth transfer: `megabits` of layer `layer` of chunk `chunk`
/// moved over user `user`'s link during second `second`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub second: u32,
    pub user: UserId,
    pub chunk: usize,
    pub layer: usize,
    pub megabits: f64,
}

/// Second-by-second record of an executed run.
///
/// `useful` transfers sum to exactly one layer size per delivered layer;
/// `wasted` transfers are bytes that never became a playable layer (partial
/// downloads abandoned at a deadline, or layers orphaned when a lower layer
/// missed its deadline). Wasted bytes still occupy link bandwidth and count
/// against contribution caps.
#[derive(Debug, Clone, Default)]
pub struct ExecutionLog {
    pub chunk_count: usize,
    pub layer_count: usize,
    pub useful: Vec<Transfer>,
    pub wasted: Vec<Transfer>,
    /// Delivered view, same shape as [`FetchPlan::assignment`].
    pub assignment: Vec<Vec<Option<UserId>>>,
    pub outcomes: Vec<ChunkOutcome>,
    /// Effective deadlines the run was executed against.
    pub deadlines: Vec<u32>,
    pub stalls: Vec<u32>,
    /// Wall-clock microseconds of each re-planning step (diagnostic only;
    /// never serialized into reports).
    pub replan_micros: Vec<u64>,
}

impl ExecutionLog {
    pub fn new(chunk_count: usize, layer_count: usize, deadlines: Vec<u32>) -> Self {
        Self {
            chunk_count,
            layer_count,
            useful: Vec::new(),
            wasted: Vec::new(),
            assignment: vec![vec![None; chunk_count]; layer_count],
            outcomes: vec![ChunkOutcome::Skipped; chunk_count],
            deadlines,
            stalls: vec![0; chunk_count],
            replan_micros: Vec::new(),
        }
    }

    /// Total megabits drawn from a user's link, including wasted bytes —
    /// the quantity a contribution cap constrains.
    pub fn user_megabits(&self, user: UserId) -> f64 {
        self.useful
            .iter()
            .chain(self.wasted.iter())
            .filter(|t| t.user == user)
            .map(|t| t.megabits)
            .sum()
    }

    /// Megabits of delivered layers carried by a user.
    pub fn delivered_megabits(&self, user: UserId) -> f64 {
        self.useful
            .iter()
            .filter(|t| t.user == user)
            .map(|t| t.megabits)
            .sum()
    }

    pub fn stall_total(&self) -> u32 {
        self.stalls.last().copied().unwrap_or(0)
    }

    /// The delivered-layers view as a plan, e.g. for objective evaluation.
    pub fn to_plan(&self) -> FetchPlan {
        FetchPlan {
            chunk_count: self.chunk_count,
            layer_count: self.layer_count,
            assignment: self.assignment.clone(),
            deadlines: self.deadlines.clone(),
            stalls: self.stalls.clone(),
        }
    }
}
