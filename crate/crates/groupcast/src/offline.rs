//! Offline schedulers: full-horizon planning of which user fetches which
//! layer of which chunk.
//!
//! All three planners share one engine. A video is scheduled layer by layer;
//! each layer gets a *pass* over its candidate chunks (those whose next-lower
//! layer is already delivered):
//!
//! 1. a **forward scan** computes, per candidate, how many copies of this
//!    layer the group could deliver by the candidate's deadline
//!    (`V = Σ_u ⌊min(cap_u, R_u(deadline))/Y⌋` over residual bandwidth
//!    prefix sums `R_u`), and counts how many candidates must be dropped;
//!    the dropped ones are always the earliest candidates, which is what
//!    makes the pass skip-minimal;
//! 2. a **backward assignment** walks the surviving candidates in chunk
//!    order; for each, every eligible user simulates fetching the layer
//!    from the deadline backwards through their residual bandwidth, and the
//!    cost of a user is the megabits that simulation would consume at or
//!    before the previous chunk's deadline — bandwidth that earlier chunks
//!    may still be competing for. The cheapest user (ties: higher-priority
//!    set, then lower id) wins and their consumption is committed.
//!
//! Preference-aware planning wraps the engine: it schedules the layers the
//! lowest-priority set may carry using everyone, then tries to re-place each
//! layer that landed on the lowest set using only the higher sets, moves
//! whatever fits, drops the lowest set, and repeats. The no-skip variant
//! first extends deadlines chunk by chunk until every base layer fits, then
//! plans against the shifted deadline grid.

use crate::model::{
    validate_roster, Contribution, ExecutionLog, FetchPlan, ModelError, Transfer, UserId,
    UserLink, VideoSpec, EPS_MB,
};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Roster(#[from] ModelError),
    #[error(
        "no-skip plan is impossible: traces end at second {trace_end} with \
         chunk {chunk} still undeliverable"
    )]
    NoSkipInfeasible { chunk: usize, trace_end: u32 },
}

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("plan references user {0} who is not in the roster")]
    UnknownUser(UserId),
    #[error("user {user} cannot finish chunk {chunk} layer {layer} by second {deadline}")]
    MissedDeadline { user: UserId, chunk: usize, layer: usize, deadline: u32 },
}

/// What one layer pass saw and decided — kept for diagnostics and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct PassSnapshot {
    pub layer: usize,
    /// Chunks the pass considered, ascending.
    pub candidates: Vec<usize>,
    /// Chunks the pass dropped (always the earliest candidates).
    pub skipped: Vec<usize>,
}

/// A finished plan plus the per-pass decisions that produced it.
#[derive(Debug, Clone)]
pub struct OfflineOutcome {
    pub plan: FetchPlan,
    pub passes: Vec<PassSnapshot>,
}

/// Prefix sums of a sample series: `out[j-1] = Σ_{j'≤j} samples[j'-1]`.
pub fn cumulative_bandwidth(samples: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    samples
        .iter()
        .map(|&s| {
            acc += s;
            acc
        })
        .collect()
}

/// `R(j)` with 1-based `j`; flat past the end of the series (a silent link).
pub(crate) fn r_at(prefix: &[f64], j: u32) -> f64 {
    if j == 0 || prefix.is_empty() {
        return 0.0;
    }
    let idx = (j as usize).min(prefix.len());
    prefix[idx - 1]
}

/// Mutable per-user planning state: residual per-second bandwidth and
/// residual contribution allowance, shrinking as layers are committed.
pub(crate) struct PassUser {
    pub(crate) id: UserId,
    pub(crate) set: u32,
    pub(crate) max_layer: usize,
    pub(crate) band: Vec<f64>,
    pub(crate) cap: Contribution,
}

impl PassUser {
    pub(crate) fn from_link(u: &UserLink) -> Self {
        Self {
            id: u.id,
            set: u.set,
            max_layer: u.max_layer,
            band: u.trace.samples.clone(),
            cap: u.cap,
        }
    }
}

/// Planning state sorted by (set, id) so a priority-set prefix is a slice
/// prefix and argmin ties resolve by scan order.
pub(crate) fn pass_users(users: &[UserLink]) -> Vec<PassUser> {
    let mut out: Vec<PassUser> = users.iter().map(PassUser::from_link).collect();
    out.sort_by_key(|u| (u.set, u.id));
    out
}

/// `V_{n,i}`: how many whole copies of a `layer_size`-megabit layer the given
/// users could deliver by `deadline`, each bounded by their remaining
/// contribution. Only users whose ceiling admits `layer` count.
pub(crate) fn capacity_count(
    users: &[PassUser],
    prefixes: &[Vec<f64>],
    layer: usize,
    deadline: u32,
    layer_size: f64,
) -> usize {
    users
        .iter()
        .zip(prefixes)
        .filter(|(u, _)| u.max_layer >= layer)
        .map(|(u, p)| {
            let avail = u.cap.min_with(r_at(p, deadline));
            ((avail + EPS_MB) / layer_size) as usize
        })
        .sum()
}

/// Forward scan over the candidates of one pass: returns how many must be
/// dropped. The counter rises whenever capacity at a candidate's deadline
/// cannot cover every candidate so far that is still scheduled.
fn forward_skip_scan(
    users: &[PassUser],
    prefixes: &[Vec<f64>],
    layer: usize,
    layer_size: f64,
    candidates: &[usize],
    deadlines: &[u32],
) -> usize {
    let mut skip = 0usize;
    for (q0, &i) in candidates.iter().enumerate() {
        let v = capacity_count(users, prefixes, layer, deadlines[i - 1], layer_size);
        if v < q0 + 1 - skip {
            skip += 1;
        }
    }
    skip
}

/// Backward fetch simulation for one user and one layer: fill `layer_size`
/// megabits from `deadline` backwards through the user's residual bandwidth.
/// Returns the cost (megabits consumed at seconds ≤ `boundary`) and the
/// per-second consumption, or `None` when bandwidth or contribution cannot
/// cover the layer. Nothing is committed here.
fn backward_fetch(
    user: &PassUser,
    prefix: &[f64],
    deadline: u32,
    layer_size: f64,
    boundary: u32,
) -> Option<(f64, Vec<(u32, f64)>)> {
    let avail = user.cap.min_with(r_at(prefix, deadline));
    if avail + EPS_MB < layer_size {
        return None;
    }
    let mut rem = layer_size;
    let mut cost = 0.0;
    let mut consumed = Vec::new();
    let mut j = deadline.min(user.band.len() as u32);
    while rem > EPS_MB && j >= 1 {
        let take = user.band[j as usize - 1].min(rem);
        if take > 0.0 {
            consumed.push((j, take));
            rem -= take;
            if j <= boundary {
                cost += take;
            }
        }
        j -= 1;
    }
    if rem > EPS_MB {
        return None;
    }
    Some((cost, consumed))
}

/// A user's winning bid for one chunk: index into the roster, spill cost,
/// and the per-second megabits the backward fill would consume.
type Bid = (usize, f64, Vec<(u32, f64)>);

/// One pass: forward scan, then backward assignment of the surviving
/// candidates in chunk order. Commits bandwidth and contribution on the
/// winning user only and records winners into `plan` (losers' simulations
/// touch nothing). Candidates the scan dropped keep whatever assignment
/// they already had, which is what lets preference re-runs leave unmovable
/// layers in place.
fn layer_pass(
    users: &mut [PassUser],
    plan: &mut FetchPlan,
    layer: usize,
    layer_size: f64,
    candidates: &[usize],
    deadlines: &[u32],
) -> PassSnapshot {
    let mut prefixes: Vec<Vec<f64>> =
        users.iter().map(|u| cumulative_bandwidth(&u.band)).collect();
    let drop_count =
        forward_skip_scan(users, &prefixes, layer, layer_size, candidates, deadlines);
    let skipped = candidates[..drop_count].to_vec();
    let mut first_fetch = true;
    for &i in &candidates[drop_count..] {
        // Cost boundary: the previous chunk's deadline — bandwidth before it
        // is the contested resource. The pass's first fetched chunk has no
        // earlier competitor, so its boundary is second 0.
        let boundary = if first_fetch { 0 } else { deadlines[i - 2] };
        let mut winner: Option<Bid> = None;
        for (idx, u) in users.iter().enumerate() {
            if u.max_layer < layer {
                continue;
            }
            if let Some((cost, consumed)) =
                backward_fetch(u, &prefixes[idx], deadlines[i - 1], layer_size, boundary)
            {
                // Strictly-cheaper replacement keeps ties on the earliest
                // (set, id) since users are sorted that way.
                let better = match &winner {
                    None => true,
                    Some((_, best, _)) => cost + EPS_MB < *best,
                };
                if better {
                    winner = Some((idx, cost, consumed));
                }
            }
        }
        let Some((idx, _, consumed)) = winner else {
            // The forward scan promised capacity, so this is unreachable in
            // practice; degrade to a skip rather than a bogus assignment.
            continue;
        };
        let mut total = 0.0;
        for &(j, take) in &consumed {
            users[idx].band[j as usize - 1] = (users[idx].band[j as usize - 1] - take).max(0.0);
            total += take;
        }
        users[idx].cap.consume(total);
        prefixes[idx] = cumulative_bandwidth(&users[idx].band);
        plan.assignment[layer][i - 1] = Some(users[idx].id);
        first_fetch = false;
    }
    PassSnapshot { layer, candidates: candidates.to_vec(), skipped }
}

/// Candidates of `layer` within `universe`: not yet delivered, and (above
/// the base layer) sitting on a delivered next-lower layer.
fn layer_candidates(plan: &FetchPlan, universe: &[usize], layer: usize) -> Vec<usize> {
    universe
        .iter()
        .copied()
        .filter(|&i| {
            plan.delivered(layer, i).is_none()
                && (layer == 0 || plan.delivered(layer - 1, i).is_some())
        })
        .collect()
}

/// Runs passes for `layers` over whatever part of `universe` is still open,
/// deriving each layer's candidates from the plan as it grows.
pub(crate) fn plan_layers(
    users: &mut [PassUser],
    plan: &mut FetchPlan,
    video: &VideoSpec,
    deadlines: &[u32],
    universe: &[usize],
    layers: std::ops::RangeInclusive<usize>,
    passes: &mut Vec<PassSnapshot>,
) {
    for layer in layers {
        let candidates = layer_candidates(plan, universe, layer);
        let snap = layer_pass(
            users,
            plan,
            layer,
            video.layer_sizes[layer],
            &candidates,
            deadlines,
        );
        passes.push(snap);
    }
}

/// Offline planner without set preference: every user is a candidate for
/// every layer their own ceiling admits, and only contribution caps and
/// bandwidth constrain the assignment.
pub fn plan_offline_nopref(
    video: &VideoSpec,
    users: &[UserLink],
) -> Result<OfflineOutcome, PlanError> {
    validate_roster(video, users)?;
    let mut state = pass_users(users);
    let mut plan = FetchPlan::empty(video);
    let deadlines = plan.deadlines.clone();
    let universe: Vec<usize> = (1..=video.chunk_count).collect();
    let mut passes = Vec::new();
    plan_layers(
        &mut state,
        &mut plan,
        video,
        &deadlines,
        &universe,
        0..=video.top_layer(),
        &mut passes,
    );
    Ok(OfflineOutcome { plan, passes })
}

/// Offline planner honoring priority sets: lower-priority links are used
/// only for layers no higher-priority link could carry.
///
/// Iteratively: let `m` be the lowest remaining set's layer ceiling.
/// Schedule layers up to `m` using every remaining set, then for each of
/// those layers re-run the pass restricted to the chunks that landed on the
/// lowest set, offering them to the higher sets only — whatever fits moves
/// off the lowest set, the earliest unmovable ones stay. Then the lowest
/// set is dropped and the next band of layers is scheduled the same way;
/// the last round plans the top band on set 1 alone.
pub fn plan_offline_pref(
    video: &VideoSpec,
    users: &[UserLink],
) -> Result<OfflineOutcome, PlanError> {
    let set_count = validate_roster(video, users)?;
    let mut state = pass_users(users);
    let mut plan = FetchPlan::empty(video);
    let deadlines = plan.deadlines.clone();
    let universe: Vec<usize> = (1..=video.chunk_count).collect();
    let mut passes = Vec::new();
    pref_plan_layers(
        &mut state,
        set_count,
        &mut plan,
        video,
        &deadlines,
        &universe,
        &|_, _| false,
        &mut passes,
    );
    Ok(OfflineOutcome { plan, passes })
}

/// The preference orchestration over an arbitrary chunk universe and
/// deadline grid — shared by the offline planner (full video) and the
/// online scheduler (one window at a time). `frozen(chunk, layer)` marks
/// layers that are facts rather than plans (already downloaded in a live
/// run); those are never offered for re-placement.
#[allow(clippy::too_many_arguments)]
pub(crate) fn pref_plan_layers(
    state: &mut [PassUser],
    set_count: u32,
    plan: &mut FetchPlan,
    video: &VideoSpec,
    deadlines: &[u32],
    universe: &[usize],
    frozen: &dyn Fn(usize, usize) -> bool,
    passes: &mut Vec<PassSnapshot>,
) {
    let mut next_layer = 0usize;
    for lowest in (2..=set_count).rev() {
        let remaining = state.iter().take_while(|u| u.set <= lowest).count();
        if remaining == 0 {
            continue; // no planable user this low (possible in window subproblems)
        }
        let lowest_ceiling = state[remaining - 1].max_layer;
        if next_layer > lowest_ceiling {
            continue; // ceiling already covered by an earlier round
        }
        let band = next_layer..=lowest_ceiling;
        plan_layers(
            &mut state[..remaining],
            plan,
            video,
            deadlines,
            universe,
            band.clone(),
            passes,
        );
        // Try to lift every layer that landed on the lowest set onto the
        // higher sets; re-use the pass machinery so the earliest unmovable
        // candidates are exactly the ones left behind.
        let higher = state.iter().take_while(|u| u.set < lowest).count();
        let lowest_ids: Vec<UserId> =
            state[higher..remaining].iter().map(|u| u.id).collect();
        for layer in band {
            let stuck: Vec<usize> = universe
                .iter()
                .copied()
                .filter(|&i| {
                    !frozen(i, layer)
                        && plan.delivered(layer, i).is_some_and(|u| lowest_ids.contains(&u))
                })
                .collect();
            if stuck.is_empty() {
                continue;
            }
            let snap = layer_pass(
                &mut state[..higher],
                plan,
                layer,
                video.layer_sizes[layer],
                &stuck,
                deadlines,
            );
            passes.push(snap);
        }
        next_layer = lowest_ceiling + 1;
    }
    let top_band_users = state.iter().take_while(|u| u.set == 1).count();
    let ceiling = state[0].max_layer;
    if next_layer <= ceiling {
        plan_layers(
            &mut state[..top_band_users],
            plan,
            video,
            deadlines,
            universe,
            next_layer..=ceiling,
            passes,
        );
    }
}

/// Offline planner for no-skip playback: instead of dropping late chunks,
/// the whole deadline grid is shifted by the total stall `d(C)` — all
/// re-buffering is taken once, up front — and then planning proceeds as in
/// skip mode against the shifted grid. Base layers never skip; enhancement
/// layers may still be left out.
///
/// Errors when the traces end before every base layer can fit even with
/// unbounded stalling.
pub fn plan_offline_noskip(
    video: &VideoSpec,
    users: &[UserLink],
) -> Result<OfflineOutcome, PlanError> {
    validate_roster(video, users)?;
    let mut state = pass_users(users);
    let prefixes: Vec<Vec<f64>> =
        state.iter().map(|u| cumulative_bandwidth(&u.band)).collect();
    let trace_end = state.iter().map(|u| u.band.len() as u32).max().unwrap_or(0);
    let y0 = video.layer_sizes[0];
    // Grow the stall until each prefix of chunks fits by its shifted
    // deadline; d only ever grows, so the final value is d(C).
    let mut stall = 0u32;
    for i in 1..=video.chunk_count {
        loop {
            let deadline = video.deadline(i) + stall;
            if capacity_count(&state, &prefixes, 0, deadline, y0) >= i {
                break;
            }
            if deadline >= trace_end {
                return Err(PlanError::NoSkipInfeasible { chunk: i, trace_end });
            }
            stall += 1;
        }
    }
    let mut plan = FetchPlan::empty(video);
    for i in 1..=video.chunk_count {
        plan.deadlines[i - 1] = video.deadline(i) + stall;
        plan.stalls[i - 1] = stall;
    }
    let deadlines = plan.deadlines.clone();
    let universe: Vec<usize> = (1..=video.chunk_count).collect();
    let mut passes = Vec::new();
    plan_layers(
        &mut state,
        &mut plan,
        video,
        &deadlines,
        &universe,
        0..=video.top_layer(),
        &mut passes,
    );
    debug_assert!(
        passes[0].skipped.is_empty(),
        "stall scan guarantees base-layer capacity"
    );
    Ok(OfflineOutcome { plan, passes })
}

/// Per-link download queue: each user's assigned layers sorted by
/// (chunk, layer). Downloading in this order meets every deadline the plan
/// promised, because per-user deadlines are nondecreasing along the queue.
pub fn materialize_download_order(plan: &FetchPlan) -> BTreeMap<UserId, Vec<(usize, usize)>> {
    let mut order: BTreeMap<UserId, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 1..=plan.chunk_count {
        for n in 0..plan.layer_count {
            if let Some(u) = plan.assignment[n][i - 1] {
                order.entry(u).or_default().push((i, n));
            }
        }
    }
    order
}

/// Replays a plan against the users' true traces, fluidly draining each
/// link into its download queue in materialized order, and returns the
/// second-by-second log. Fails if any layer cannot finish by its deadline —
/// which a plan from this module never triggers.
pub fn execute_plan(
    plan: &FetchPlan,
    video: &VideoSpec,
    users: &[UserLink],
) -> Result<ExecutionLog, ExecError> {
    let roster: BTreeMap<UserId, &UserLink> = users.iter().map(|u| (u.id, u)).collect();
    let mut queues: BTreeMap<UserId, VecDeque<(usize, usize, f64)>> = BTreeMap::new();
    for (uid, items) in materialize_download_order(plan) {
        if !roster.contains_key(&uid) {
            return Err(ExecError::UnknownUser(uid));
        }
        queues.insert(
            uid,
            items.into_iter().map(|(i, n)| (i, n, video.layer_sizes[n])).collect(),
        );
    }
    let mut log = ExecutionLog::new(plan.chunk_count, plan.layer_count, plan.deadlines.clone());
    log.assignment = plan.assignment.clone();
    log.outcomes = plan.outcomes();
    log.stalls = plan.stalls.clone();
    let last_deadline = plan.deadlines.iter().copied().max().unwrap_or(0);
    for second in 1..=last_deadline {
        for (&uid, queue) in queues.iter_mut() {
            let mut budget = roster[&uid].trace.mb_in_second(second);
            while budget > EPS_MB {
                let Some(&mut (chunk, layer, ref mut rem)) = queue.front_mut() else {
                    break;
                };
                if plan.deadlines[chunk - 1] < second {
                    return Err(ExecError::MissedDeadline {
                        user: uid,
                        chunk,
                        layer,
                        deadline: plan.deadlines[chunk - 1],
                    });
                }
                // Snap the final sliver so the layer's transfers sum to
                // exactly its size.
                let take = if budget + EPS_MB >= *rem { *rem } else { budget };
                *rem -= take;
                budget -= take;
                log.useful.push(Transfer { second, user: uid, chunk, layer, megabits: take });
                if *rem > 0.0 {
                    break;
                }
                queue.pop_front();
            }
        }
    }
    for (uid, queue) in &queues {
        if let Some(&(chunk, layer, _)) = queue.front() {
            return Err(ExecError::MissedDeadline {
                user: *uid,
                chunk,
                layer,
                deadline: plan.deadlines[chunk - 1],
            });
        }
    }
    Ok(log)
}
