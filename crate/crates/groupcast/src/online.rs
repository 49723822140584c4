//! Sliding-window online scheduler: plan against predicted bandwidth,
//! download against the real traces, repeat.
//!
//! Every `α` seconds the scheduler predicts each link's rate (harmonic mean
//! of the throughput of that link's recent layer downloads), carves the next
//! `W` chunks beyond a `δ`-second safety margin into a subproblem with
//! *relative* deadlines and per-window contribution budgets, and runs the
//! matching offline planner on it. Between replans the true traces drain the
//! per-link queues fluidly: surplus bandwidth pulls later downloads forward
//! (assignments never change mid-period), shortfall pushes them out, and a
//! layer that misses its deadline is abandoned (skip mode) or stalls the
//! playback clock until it lands (no-skip mode, base layers only — higher
//! layers are still droppable).
//!
//! The simulator that executes plans against true traces lives here too and
//! is shared with the round-robin baselines, so every compared algorithm is
//! scored by exactly the same playback rules.
//!
//! A layer's download time, for prediction purposes, runs from the moment
//! its first bytes move to the moment it completes — queueing delay behind
//! earlier layers on the same link is not counted, matching sequential
//! per-link downloads.

use crate::model::{
    validate_roster, BandwidthTrace, ChunkOutcome, Contribution, ExecutionLog, FetchPlan,
    ModelError, Transfer, UserId, UserLink, VideoSpec, EPS_MB,
};
use crate::offline::{
    capacity_count, cumulative_bandwidth, pass_users, plan_layers, pref_plan_layers, PassSnapshot,
};
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum OnlineError {
    #[error(transparent)]
    Roster(#[from] ModelError),
    #[error("window must be at least one chunk")]
    ZeroWindow,
    #[error("replan period must be at least one second")]
    ZeroPeriod,
    #[error("history depth must be at least one record")]
    ZeroHistory,
    #[error("buffer limit {limit}s is below the window span W·L+s = {min}s")]
    BufferTooSmall { limit: u32, min: u32 },
    #[error("user {user}: trace covers {have}s but the playback horizon is {need}s")]
    TraceTooShort { user: UserId, have: u32, need: u32 },
    #[error("no-skip playback is stalled past the end of every trace (second {second})")]
    TraceExhausted { second: u32 },
}

/// Which planner the window subproblems run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineMode {
    NoPref,
    Pref,
    NoSkip,
}

/// Knobs of the sliding-window loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineConfig {
    /// Window size `W` in chunks.
    pub window: usize,
    /// Replan period `α` in seconds.
    pub replan_period: u32,
    /// Safety margin `δ`: chunks due within `δ` seconds keep their current
    /// plan rather than being re-decided at the last moment.
    pub deadline_margin: u32,
    /// Prediction history depth `β` in layer downloads.
    pub history_depth: usize,
    /// Client buffer in seconds of content; `None` means `W·L + s`, the
    /// smallest buffer the window fits in.
    pub buffer_limit: Option<u32>,
    /// Seed estimate used before any download history exists. With `None`
    /// the first chunks' base layers are dealt round-robin instead.
    pub initial_estimate_mbps: Option<f64>,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            window: 5,
            replan_period: 4,
            deadline_margin: 2,
            history_depth: 5,
            buffer_limit: None,
            initial_estimate_mbps: None,
        }
    }
}

impl OnlineConfig {
    pub(crate) fn validate(&self, video: &VideoSpec) -> Result<u32, OnlineError> {
        if self.window == 0 {
            return Err(OnlineError::ZeroWindow);
        }
        if self.replan_period == 0 {
            return Err(OnlineError::ZeroPeriod);
        }
        if self.history_depth == 0 {
            return Err(OnlineError::ZeroHistory);
        }
        let min = self.window as u32 * video.chunk_seconds + video.startup_seconds;
        match self.buffer_limit {
            Some(limit) if limit < min => Err(OnlineError::BufferTooSmall { limit, min }),
            Some(limit) => Ok(limit),
            None => Ok(min),
        }
    }
}

/// Harmonic-mean throughput over the most recent `min(depth, len)` records,
/// or `None` with no history — the caller's cue to bootstrap.
pub fn harmonic_predict(throughputs: &[f64], depth: usize) -> Option<f64> {
    if throughputs.is_empty() {
        return None;
    }
    let recent = &throughputs[throughputs.len().saturating_sub(depth)..];
    let inv: f64 = recent.iter().map(|t| 1.0 / t).sum();
    Some(recent.len() as f64 / inv)
}

/// Contribution budget for the window starting at `period_index·α`: the cap
/// is released proportionally to `min(W·L + c·α, T)/T` — the fraction of
/// the video the current window's deadline horizon reaches — minus what
/// the user already fetched. The release hits exactly `η` at the last
/// window, so a cap can never be exhausted early by the release schedule
/// alone. Never negative; unlimited stays unlimited.
pub fn window_contribution(
    cap: Contribution,
    window: usize,
    chunk_seconds: u32,
    total_seconds: u32,
    period_index: u32,
    replan_period: u32,
    fetched_mb: f64,
) -> Contribution {
    match cap {
        Contribution::Unlimited => Contribution::Unlimited,
        Contribution::Capped(eta) => {
            let released = window as f64 * chunk_seconds as f64
                + period_index as f64 * replan_period as f64;
            let frac = released.min(total_seconds as f64) / total_seconds as f64;
            Contribution::Capped((frac * eta - fetched_mb).max(0.0))
        }
    }
}

/// One queued layer download on one link.
pub(crate) struct Job {
    pub(crate) chunk: usize,
    pub(crate) layer: usize,
    pub(crate) remaining: f64,
    /// Fractional second at which the first bytes moved.
    started: Option<f64>,
}

/// Live playback-and-download state shared by the online scheduler and the
/// round-robin baselines: per-link FIFO queues drained fluidly against the
/// true traces, per-chunk finalization at deadlines (skip) or playhead
/// crossings (no-skip), and the bookkeeping that replanning needs
/// (fetched totals, download history, the evolving plan).
pub(crate) struct Simulator<'a> {
    pub(crate) video: &'a VideoSpec,
    /// Sorted by id; all per-user vectors below index into this order.
    pub(crate) users: Vec<&'a UserLink>,
    noskip: bool,
    pub(crate) now: u32,
    d_now: u32,
    /// Next chunk to start playing (no-skip bookkeeping).
    play_next: usize,
    /// Skip-mode cursor: next chunk whose deadline expiry to check.
    expire_next: usize,
    /// Total megabits fetched per user, wasted bytes included.
    pub(crate) fetched: Vec<f64>,
    /// Per-user throughput records of completed layer downloads, Mbps.
    pub(crate) history: Vec<Vec<f64>>,
    queues: Vec<VecDeque<Job>>,
    delivered: BTreeMap<(usize, usize), UserId>,
    finalized: Vec<Option<ChunkOutcome>>,
    stalls: Vec<u32>,
    transfers: Vec<Transfer>,
    pub(crate) replan_micros: Vec<u64>,
    pub(crate) plan: FetchPlan,
    /// Highest layer any roster member may carry.
    ceiling: usize,
    trace_end: u32,
}

impl<'a> Simulator<'a> {
    pub(crate) fn new(video: &'a VideoSpec, users: &'a [UserLink], noskip: bool) -> Self {
        let mut sorted: Vec<&UserLink> = users.iter().collect();
        sorted.sort_by_key(|u| u.id);
        let n = sorted.len();
        let ceiling = sorted.iter().map(|u| u.max_layer).max().unwrap_or(0);
        let trace_end = sorted.iter().map(|u| u.trace.len_seconds()).max().unwrap_or(0);
        Simulator {
            video,
            users: sorted,
            noskip,
            now: 0,
            d_now: 0,
            play_next: 1,
            expire_next: 1,
            fetched: vec![0.0; n],
            history: vec![Vec::new(); n],
            queues: (0..n).map(|_| VecDeque::new()).collect(),
            delivered: BTreeMap::new(),
            finalized: vec![None; video.chunk_count],
            stalls: vec![0; video.chunk_count],
            transfers: Vec::new(),
            replan_micros: Vec::new(),
            plan: FetchPlan::empty(video),
            ceiling,
            trace_end,
        }
    }

    /// Current effective deadline of a chunk: nominal plus the stall the
    /// chunk has (or would currently) run into.
    pub(crate) fn deadline_of(&self, chunk: usize) -> u32 {
        let nominal = self.video.deadline(chunk);
        if !self.noskip {
            return nominal;
        }
        if self.finalized[chunk - 1].is_some() {
            nominal + self.stalls[chunk - 1]
        } else {
            nominal + self.d_now
        }
    }

    /// Seconds of content played so far.
    fn playback_pos(&self) -> i64 {
        (self.now as i64 - self.video.startup_seconds as i64 - self.d_now as i64)
            .clamp(0, self.video.duration() as i64)
    }

    pub(crate) fn all_finalized(&self) -> bool {
        self.finalized.iter().all(Option::is_some)
    }

    fn delivered_top(&self, chunk: usize) -> Option<usize> {
        let mut top = None;
        for n in 0..self.video.layer_count() {
            if self.delivered.contains_key(&(chunk, n)) {
                top = Some(n);
            } else {
                break;
            }
        }
        top
    }

    pub(crate) fn is_delivered(&self, chunk: usize, layer: usize) -> bool {
        self.delivered.contains_key(&(chunk, layer))
    }

    fn finalize_chunk(&mut self, chunk: usize) {
        let outcome = match self.delivered_top(chunk) {
            None => ChunkOutcome::Skipped,
            Some(top) => ChunkOutcome::Delivered { top },
        };
        self.finalized[chunk - 1] = Some(outcome);
        self.stalls[chunk - 1] = self.d_now;
        for q in &mut self.queues {
            q.retain(|j| j.chunk != chunk);
        }
    }

    /// Per-second bookkeeping at wall time `now`, before the next second is
    /// drained: skip mode finalizes chunks whose deadline just passed;
    /// no-skip mode advances or stalls the playhead at chunk starts.
    pub(crate) fn boundary(&mut self) -> Result<(), OnlineError> {
        if !self.noskip {
            while self.expire_next <= self.video.chunk_count
                && self.video.deadline(self.expire_next) <= self.now
            {
                self.finalize_chunk(self.expire_next);
                self.expire_next += 1;
            }
            return Ok(());
        }
        if self.play_next > self.video.chunk_count {
            return Ok(());
        }
        let start = (self.play_next as u32 - 1) * self.video.chunk_seconds
            + self.video.startup_seconds
            + self.d_now;
        if start != self.now {
            return Ok(());
        }
        if self.delivered.contains_key(&(self.play_next, 0)) {
            self.finalize_chunk(self.play_next);
            self.play_next += 1;
        } else {
            // Base layers are never dropped: freeze playback for a second.
            if self.now >= self.trace_end {
                return Err(OnlineError::TraceExhausted { second: self.now });
            }
            self.d_now += 1;
        }
        Ok(())
    }

    /// The chunks a replan at the current moment is allowed to decide:
    /// at most `w` not-yet-settled chunks past the `δ` margin, whose end
    /// still fits within `buffer_limit` seconds of the playhead. No-skip
    /// mode ignores the margin — a chunk stalling the playhead sits exactly
    /// at `now + 1` forever and is precisely the one that must be planned.
    pub(crate) fn select_window(&self, w: usize, delta: u32, buffer_limit: u32) -> Vec<usize> {
        let pp = self.playback_pos();
        let l = self.video.chunk_seconds as i64;
        let margin = if self.noskip { 0 } else { delta };
        (1..=self.video.chunk_count)
            .filter(|&i| self.finalized[i - 1].is_none())
            .filter(|&i| self.delivered_top(i) != Some(self.ceiling))
            .filter(|&i| self.deadline_of(i) > self.now + margin)
            .filter(|&i| i as i64 * l <= pp + buffer_limit as i64)
            .take(w)
            .collect()
    }

    /// Seconds of fully delivered, not-yet-playing chunks — the occupancy
    /// the buffer-based baseline steers by.
    pub(crate) fn buffer_occupancy_seconds(&self) -> f64 {
        (1..=self.video.chunk_count)
            .filter(|&i| self.delivered.contains_key(&(i, 0)))
            .filter(|&i| self.deadline_of(i) > self.now)
            .count() as f64
            * self.video.chunk_seconds as f64
    }

    /// Drops the re-plannable assignments of the given chunks: everything
    /// not already downloaded or mid-download. A layer whose first bytes
    /// have moved keeps its link — replans update the policy on the fly
    /// without interrupting downloads already in progress, so partial
    /// progress is never thrown away only to refetch the same bytes
    /// elsewhere. Call before writing a fresh window plan.
    pub(crate) fn clear_window(&mut self, window: &[usize]) {
        let mut in_flight: HashSet<(usize, usize)> = HashSet::new();
        for q in &self.queues {
            for job in q {
                if job.started.is_some() {
                    in_flight.insert((job.chunk, job.layer));
                }
            }
        }
        for &i in window {
            for n in 0..self.video.layer_count() {
                if !self.delivered.contains_key(&(i, n)) && !in_flight.contains(&(i, n)) {
                    self.plan.assignment[n][i - 1] = None;
                }
            }
        }
    }

    /// Rebuilds every link's FIFO from the current plan, keeping the partial
    /// progress of any download whose (chunk, layer, user) triple survived
    /// the replan. Reassigned layers start over; the old bytes stay counted
    /// against their original link.
    pub(crate) fn rebuild_queues(&mut self) {
        let mut old: HashMap<(usize, usize, UserId), Job> = HashMap::new();
        for (ui, q) in self.queues.iter_mut().enumerate() {
            let uid = self.users[ui].id;
            for job in q.drain(..) {
                old.insert((job.chunk, job.layer, uid), job);
            }
        }
        for (ui, user) in self.users.iter().enumerate() {
            let mut jobs = VecDeque::new();
            for i in 1..=self.video.chunk_count {
                if self.finalized[i - 1].is_some() {
                    continue;
                }
                for n in 0..self.video.layer_count() {
                    if self.plan.assignment[n][i - 1] != Some(user.id)
                        || self.delivered.contains_key(&(i, n))
                    {
                        continue;
                    }
                    jobs.push_back(old.remove(&(i, n, user.id)).unwrap_or(Job {
                        chunk: i,
                        layer: n,
                        remaining: self.video.layer_sizes[n],
                        started: None,
                    }));
                }
            }
            self.queues[ui] = jobs;
        }
    }

    /// Fluidly drains one second of every true trace into its queue, in
    /// (chunk, layer) order, and advances the wall clock. Completions are
    /// timed fractionally within the second for the throughput history.
    pub(crate) fn drain_second(&mut self) {
        let j = self.now + 1;
        for ui in 0..self.users.len() {
            let user = self.users[ui];
            let full = user.trace.mb_in_second(j);
            if full <= 0.0 {
                continue;
            }
            let mut budget = full;
            loop {
                if budget <= EPS_MB {
                    break;
                }
                let Some(job) = self.queues[ui].front_mut() else {
                    break;
                };
                if self.finalized[job.chunk - 1].is_some() {
                    self.queues[ui].pop_front();
                    continue;
                }
                let allowed = match user.cap {
                    Contribution::Unlimited => f64::INFINITY,
                    Contribution::Capped(c) => (c - self.fetched[ui]).max(0.0),
                };
                if allowed <= EPS_MB {
                    break;
                }
                let usable = budget.min(allowed);
                // Snap the final sliver so transfers sum to the layer size.
                let take = if usable + EPS_MB >= job.remaining { job.remaining } else { usable };
                if job.started.is_none() {
                    job.started = Some((j - 1) as f64 + (full - budget) / full);
                }
                job.remaining -= take;
                budget -= take;
                self.fetched[ui] += take;
                self.transfers.push(Transfer {
                    second: j,
                    user: user.id,
                    chunk: job.chunk,
                    layer: job.layer,
                    megabits: take,
                });
                if job.remaining > 0.0 {
                    break;
                }
                let finish = (j - 1) as f64 + (full - budget) / full;
                let elapsed = (finish - job.started.unwrap()).max(1e-9);
                self.history[ui].push(self.video.layer_sizes[job.layer] / elapsed);
                self.delivered.insert((job.chunk, job.layer), user.id);
                self.queues[ui].pop_front();
            }
        }
        self.now = j;
    }

    /// Splits the staged transfers into useful and wasted bytes and emits
    /// the final log. Callable once every chunk is finalized.
    pub(crate) fn finish(self) -> ExecutionLog {
        let deadlines = (1..=self.video.chunk_count)
            .map(|i| self.video.deadline(i) + self.stalls[i - 1])
            .collect();
        let mut log =
            ExecutionLog::new(self.video.chunk_count, self.video.layer_count(), deadlines);
        log.stalls = self.stalls;
        log.outcomes = self
            .finalized
            .iter()
            .map(|o| o.expect("every chunk is finalized before finish"))
            .collect();
        for t in self.transfers {
            let useful = log.outcomes[t.chunk - 1].top_layer().is_some_and(|top| t.layer <= top)
                && self.delivered.get(&(t.chunk, t.layer)) == Some(&t.user);
            if useful {
                log.useful.push(t);
            } else {
                log.wasted.push(t);
            }
        }
        for (&(chunk, layer), &uid) in &self.delivered {
            if log.outcomes[chunk - 1].top_layer().is_some_and(|top| layer <= top) {
                log.assignment[layer][chunk - 1] = Some(uid);
            }
        }
        log.replan_micros = self.replan_micros;
        log
    }
}

/// Predicted rate per user: harmonic history first, then the configured
/// seed estimate; `None` means the user cannot be planned yet.
fn estimates(sim: &Simulator, config: &OnlineConfig) -> Vec<Option<f64>> {
    sim.history
        .iter()
        .map(|h| harmonic_predict(h, config.history_depth).or(config.initial_estimate_mbps))
        .collect()
}

/// Deals base layers of the first window chunks round-robin over the users
/// (id ascending, chunk ascending) — the only sensible plan before any
/// throughput history exists.
fn bootstrap_plan(sim: &mut Simulator, window: &[usize]) {
    let ids: Vec<UserId> = sim.users.iter().map(|u| u.id).collect();
    for (k, &i) in window.iter().take(ids.len()).enumerate() {
        if !sim.is_delivered(i, 0) {
            sim.plan.assignment[0][i - 1] = Some(ids[k % ids.len()]);
        }
    }
}

/// One GroupCast replan: predict, budget, and run the mode's offline
/// planner on the window subproblem with deadlines made relative to `now`.
fn replan_groupcast(
    sim: &mut Simulator,
    period_index: u32,
    config: &OnlineConfig,
    mode: OnlineMode,
    buffer_limit: u32,
) {
    let window =
        sim.select_window(config.window, config.deadline_margin, buffer_limit);
    if window.is_empty() {
        return;
    }
    let est = estimates(sim, config);
    if est.iter().all(Option::is_none) {
        bootstrap_plan(sim, &window);
        return;
    }
    let video = sim.video;
    let total_seconds = video.horizon() + if mode == OnlineMode::NoSkip { sim.d_now } else { 0 };
    let rel: Vec<u32> = (1..=video.chunk_count)
        .map(|i| sim.deadline_of(i).saturating_sub(sim.now))
        .collect();
    let max_rel = window.iter().map(|&i| rel[i - 1]).max().unwrap_or(0);
    let mut links: Vec<UserLink> = Vec::new();
    for (ui, user) in sim.users.iter().enumerate() {
        let Some(rate) = est[ui] else { continue };
        let budget = window_contribution(
            user.cap,
            config.window,
            video.chunk_seconds,
            total_seconds.max(1),
            period_index,
            config.replan_period,
            sim.fetched[ui],
        );
        // No-skip planning may push deadlines past the window's horizon, so
        // leave headroom for the stall scan; skip mode never looks past the
        // last relative deadline.
        let len = if mode == OnlineMode::NoSkip {
            let demand: f64 =
                video.layer_sizes.iter().sum::<f64>() * window.len() as f64;
            let headroom = (demand / rate).ceil().min(100_000.0) as u32 + 1;
            max_rel + headroom
        } else {
            max_rel
        };
        links.push(UserLink {
            id: user.id,
            set: user.set,
            max_layer: user.max_layer,
            cap: budget,
            trace: BandwidthTrace::flat(rate, len),
        });
    }
    if links.is_empty() {
        return;
    }
    sim.clear_window(&window);
    let mut state = pass_users(&links);
    let mut passes: Vec<PassSnapshot> = Vec::new();
    match mode {
        OnlineMode::NoPref => {
            plan_layers(
                &mut state,
                &mut sim.plan,
                video,
                &rel,
                &window,
                0..=video.top_layer(),
                &mut passes,
            );
        }
        OnlineMode::Pref => {
            let set_count = links.iter().map(|u| u.set).max().unwrap_or(1);
            let done: Vec<(usize, usize)> = sim.delivered.keys().copied().collect();
            pref_plan_layers(
                &mut state,
                set_count,
                &mut sim.plan,
                video,
                &rel,
                &window,
                &|i, n| done.binary_search(&(i, n)).is_ok(),
                &mut passes,
            );
        }
        OnlineMode::NoSkip => {
            // Bring the window's stall to the window start: shift all its
            // deadlines together until every base layer has capacity.
            let prefixes: Vec<Vec<f64>> =
                state.iter().map(|u| cumulative_bandwidth(&u.band)).collect();
            let y0 = video.layer_sizes[0];
            let scan_end = state.iter().map(|u| u.band.len() as u32).max().unwrap_or(0);
            let mut stall = 0u32;
            'scan: for (q, &i) in window.iter().enumerate() {
                loop {
                    let dl = rel[i - 1] + stall;
                    if capacity_count(&state, &prefixes, 0, dl, y0) > q {
                        break;
                    }
                    if dl >= scan_end {
                        break 'scan; // this window cannot carry them all
                    }
                    stall += 1;
                }
            }
            let shifted: Vec<u32> = rel.iter().map(|d| d + stall).collect();
            plan_layers(
                &mut state,
                &mut sim.plan,
                video,
                &shifted,
                &window,
                0..=video.top_layer(),
                &mut passes,
            );
        }
    }
}

/// Runs the sliding-window scheduler against the users' true traces and
/// returns the playback log. Deterministic: same inputs, same log.
pub fn run_online(
    video: &VideoSpec,
    users: &[UserLink],
    config: &OnlineConfig,
    mode: OnlineMode,
) -> Result<ExecutionLog, OnlineError> {
    validate_roster(video, users)?;
    let buffer_limit = config.validate(video)?;
    for u in users {
        if u.trace.len_seconds() < video.horizon() {
            return Err(OnlineError::TraceTooShort {
                user: u.id,
                have: u.trace.len_seconds(),
                need: video.horizon(),
            });
        }
    }
    let mut sim = Simulator::new(video, users, mode == OnlineMode::NoSkip);
    loop {
        if sim.all_finalized() {
            break;
        }
        sim.boundary()?;
        if sim.all_finalized() {
            break;
        }
        if sim.now.is_multiple_of(config.replan_period) {
            let period_index = sim.now / config.replan_period;
            let t0 = Instant::now();
            replan_groupcast(&mut sim, period_index, config, mode, buffer_limit);
            sim.replan_micros.push(t0.elapsed().as_micros() as u64);
            sim.rebuild_queues();
        }
        sim.drain_second();
    }
    Ok(sim.finish())
}
