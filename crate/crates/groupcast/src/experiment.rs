//! Experiment harness: load a scenario config, resolve traces (per-user
//! files or a suite directory), run any algorithm, and emit CSV/JSON
//! reports with per-run metrics and an aggregate.
//!
//! Everything here is deterministic for a given seed: suite profiles are
//! shuffled with an explicit SplitMix64 seed, runs are ordered by trace id,
//! and numbers are formatted with fixed precision — running the same
//! experiment twice produces byte-identical reports.

use crate::baseline::{run_baseline, BBConfig, BaselineAlgo, BaselineConfig};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::model::{
    validate_roster, Contribution, ExecutionLog, ModelError, UserId, UserLink, VideoSpec,
};
use crate::offline::{
    execute_plan, plan_offline_nopref, plan_offline_noskip, plan_offline_pref, ExecError,
    PlanError,
};
use crate::online::{run_online, OnlineConfig, OnlineError, OnlineMode};
use crate::oracle::{oracle_optimal, OracleError};
use crate::trace::{assign_profiles, partition_profiles, read_trace_file, TraceError, TraceUnit};
use crate::weights::{make_weights, ObjectiveError, StreamingMode};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Length of one suite profile in seconds: long trace files are cut into
/// slices this long and each slice drives one user in one run.
pub const PROFILE_SECONDS: u32 = 360;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Online(#[from] OnlineError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("user {0} has no trace file; add one to the config or pass a trace directory")]
    MissingTrace(UserId),
    #[error("no usable trace profiles under {0}")]
    NoTraces(PathBuf),
    #[error("sweep value {0} is not valid for {1}")]
    BadSweepValue(f64, &'static str),
    #[error("a sweep needs at least one value")]
    EmptySweep,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

/// One user in a scenario config. `cap_mb: null` (or absent) means an
/// uncapped link; `trace` may be omitted when a suite directory supplies
/// the traces instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserConfig {
    pub id: UserId,
    #[serde(default = "default_set")]
    pub set: u32,
    pub max_layer: usize,
    #[serde(default)]
    pub cap_mb: Option<f64>,
    #[serde(default)]
    pub trace: Option<PathBuf>,
}

fn default_set() -> u32 {
    1
}

/// A scenario: the video layout plus the contributing users.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub chunks: usize,
    pub chunk_seconds: u32,
    pub startup_seconds: u32,
    pub layer_sizes_mb: Vec<f64>,
    pub users: Vec<UserConfig>,
}

impl ExperimentConfig {
    /// Loads a config file. Relative per-user trace paths are resolved
    /// against the config's own directory, so a scenario can ship next to
    /// its traces and load from anywhere.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let Some(dir) = path.parent() {
            for user in &mut cfg.users {
                if let Some(trace) = &mut user.trace {
                    if trace.is_relative() {
                        *trace = dir.join(&trace);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn video(&self) -> Result<VideoSpec, ModelError> {
        VideoSpec::new(
            self.chunks,
            self.chunk_seconds,
            self.startup_seconds,
            self.layer_sizes_mb.clone(),
        )
    }
}

/// Everything about a run that is not the scenario itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub online: OnlineConfig,
    pub bb: BBConfig,
    /// Routes the online scheduler to its preference mode and raises the
    /// baselines' preference flag. Ignored by the offline planners, which
    /// have dedicated algorithm names instead.
    pub preference: bool,
    pub unit: TraceUnit,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            online: OnlineConfig::default(),
            bb: BBConfig::default(),
            preference: false,
            unit: TraceUnit::Mbps,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    OfflineNoPref,
    OfflinePref,
    OfflineNoSkip,
    Online,
    Bb,
    Pb,
    Oracle,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::OfflineNoPref => "offline-nopref",
            Algo::OfflinePref => "offline-pref",
            Algo::OfflineNoSkip => "offline-noskip",
            Algo::Online => "online",
            Algo::Bb => "bb",
            Algo::Pb => "pb",
            Algo::Oracle => "oracle",
        }
    }

    pub fn streaming_mode(self) -> StreamingMode {
        match self {
            Algo::OfflineNoSkip => StreamingMode::NoSkip,
            _ => StreamingMode::Skip,
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "offline-nopref" => Ok(Algo::OfflineNoPref),
            "offline-pref" => Ok(Algo::OfflinePref),
            "offline-noskip" => Ok(Algo::OfflineNoSkip),
            "online" => Ok(Algo::Online),
            "bb" => Ok(Algo::Bb),
            "pb" => Ok(Algo::Pb),
            "oracle" => Ok(Algo::Oracle),
            other => Err(format!(
                "unknown algorithm '{other}' (expected offline-nopref, offline-pref, \
                 offline-noskip, online, bb, pb or oracle)"
            )),
        }
    }
}

/// One resolved run: the roster with concrete traces attached.
#[derive(Debug, Clone)]
pub struct RosterInstance {
    pub trace_id: String,
    pub users: Vec<UserLink>,
}

fn user_link(cfg: &UserConfig, trace: crate::model::BandwidthTrace) -> UserLink {
    UserLink {
        id: cfg.id,
        set: cfg.set,
        max_layer: cfg.max_layer,
        cap: match cfg.cap_mb {
            None => Contribution::Unlimited,
            Some(c) => Contribution::Capped(c),
        },
        trace,
    }
}

/// Resolves traces into concrete run instances.
///
/// Without a suite directory the config's per-user trace files make exactly
/// one run. With one, every file in the directory (sorted by name) is cut
/// into [`PROFILE_SECONDS`] profiles, the profiles are dealt to the users
/// with the seed, and each full round of the deal becomes one run.
pub fn build_instances(
    config: &ExperimentConfig,
    traces_dir: Option<&Path>,
    settings: &RunSettings,
) -> Result<Vec<RosterInstance>, ExperimentError> {
    let Some(dir) = traces_dir else {
        let mut users = Vec::with_capacity(config.users.len());
        for u in &config.users {
            let path = u.trace.as_ref().ok_or(ExperimentError::MissingTrace(u.id))?;
            users.push(user_link(u, read_trace_file(path, settings.unit)?));
        }
        return Ok(vec![RosterInstance { trace_id: "config".into(), users }]);
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(dir))?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut profiles = Vec::new();
    for f in &files {
        let t = read_trace_file(f, settings.unit)?;
        profiles.extend(partition_profiles(&t, PROFILE_SECONDS));
    }
    if profiles.is_empty() {
        return Err(ExperimentError::NoTraces(dir.to_path_buf()));
    }
    let buckets = assign_profiles(&profiles, config.users.len(), settings.seed)?;
    let rounds = buckets.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let users = config
            .users
            .iter()
            .zip(&buckets)
            .map(|(u, b)| user_link(u, b[r].clone()))
            .collect();
        out.push(RosterInstance { trace_id: format!("suite-{r:03}"), users });
    }
    Ok(out)
}

/// Runs one algorithm on one instance and returns its execution log.
pub fn run_one(
    video: &VideoSpec,
    users: &[UserLink],
    algo: Algo,
    settings: &RunSettings,
) -> Result<ExecutionLog, ExperimentError> {
    match algo {
        Algo::OfflineNoPref => {
            let out = plan_offline_nopref(video, users)?;
            Ok(execute_plan(&out.plan, video, users)?)
        }
        Algo::OfflinePref => {
            let out = plan_offline_pref(video, users)?;
            Ok(execute_plan(&out.plan, video, users)?)
        }
        Algo::OfflineNoSkip => {
            let out = plan_offline_noskip(video, users)?;
            Ok(execute_plan(&out.plan, video, users)?)
        }
        Algo::Online => {
            let mode = if settings.preference { OnlineMode::Pref } else { OnlineMode::NoPref };
            Ok(run_online(video, users, &settings.online, mode)?)
        }
        Algo::Bb | Algo::Pb => {
            let cfg = BaselineConfig {
                algo: if algo == Algo::Bb {
                    BaselineAlgo::BufferBased
                } else {
                    BaselineAlgo::PredictionBased
                },
                bb: settings.bb.clone(),
                online: settings.online.clone(),
                preference: settings.preference,
            };
            Ok(run_baseline(video, users, &cfg)?)
        }
        Algo::Oracle => {
            let k = validate_roster(video, users)?;
            let weights = make_weights(video, k);
            let best = oracle_optimal(video, users, &weights)?;
            Ok(execute_plan(&best.plan, video, users)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub trace_id: String,
    pub algo: String,
    pub metrics: MetricsReport,
}

/// Means plus CDF quantiles (1% steps, 101 points) over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean_skip_pct: f64,
    pub mean_apbr_mbps: f64,
    pub mean_lsr_mbps: f64,
    pub mean_stall_seconds: f64,
    pub mean_objective: f64,
    pub skip_pct_quantiles: Vec<f64>,
    pub apbr_quantiles: Vec<f64>,
    pub lsr_quantiles: Vec<f64>,
}

/// Nearest-rank quantiles at 1% steps over `values`; empty in, empty out.
pub fn quantiles_1pct(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("metric values are finite"));
    (0..=100u32)
        .map(|k| {
            let idx = ((v.len() - 1) as f64 * k as f64 / 100.0).round() as usize;
            v[idx]
        })
        .collect()
}

pub fn aggregate_runs(runs: &[ExperimentRun]) -> Aggregate {
    let n = runs.len();
    let mean = |f: &dyn Fn(&MetricsReport) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n as f64
        }
    };
    let collect = |f: &dyn Fn(&MetricsReport) -> f64| -> Vec<f64> {
        runs.iter().map(|r| f(&r.metrics)).collect()
    };
    Aggregate {
        runs: n,
        mean_skip_pct: mean(&|m| m.skip_pct),
        mean_apbr_mbps: mean(&|m| m.apbr_mbps),
        mean_lsr_mbps: mean(&|m| m.lsr_mbps),
        mean_stall_seconds: mean(&|m| m.stall_seconds as f64),
        mean_objective: mean(&|m| m.objective),
        skip_pct_quantiles: quantiles_1pct(&collect(&|m| m.skip_pct)),
        apbr_quantiles: quantiles_1pct(&collect(&|m| m.apbr_mbps)),
        lsr_quantiles: quantiles_1pct(&collect(&|m| m.lsr_mbps)),
    }
}

/// Runs an algorithm over every resolved instance and aggregates.
pub fn run_experiment(
    config: &ExperimentConfig,
    traces_dir: Option<&Path>,
    algo: Algo,
    settings: &RunSettings,
) -> Result<(Vec<ExperimentRun>, Aggregate), ExperimentError> {
    let video = config.video()?;
    let instances = build_instances(config, traces_dir, settings)?;
    let mut runs = Vec::with_capacity(instances.len());
    for inst in &instances {
        let k = validate_roster(&video, &inst.users)?;
        let weights = make_weights(&video, k);
        let log = run_one(&video, &inst.users, algo, settings)?;
        let metrics =
            compute_metrics(&log, &video, &inst.users, &weights, algo.streaming_mode())?;
        runs.push(ExperimentRun {
            trace_id: inst.trace_id.clone(),
            algo: algo.name().to_string(),
            metrics,
        });
    }
    let aggregate = aggregate_runs(&runs);
    Ok((runs, aggregate))
}

/// The per-run CSV: one row per run, fixed six-decimal floats, '.' decimal
/// separator and '\n' line ends regardless of locale.
pub fn csv_report(runs: &[ExperimentRun]) -> String {
    let mut out = String::from("trace_id,algo,skip_pct,apbr,lsr,stall_s,objective");
    if let Some(first) = runs.first() {
        for share in &first.metrics.per_user {
            let _ = write!(out, ",u{}_pct", share.user);
        }
    }
    out.push('\n');
    for r in runs {
        let m = &r.metrics;
        let _ = write!(
            out,
            "{},{},{:.6},{:.6},{:.6},{},{:.6}",
            r.trace_id, r.algo, m.skip_pct, m.apbr_mbps, m.lsr_mbps, m.stall_seconds, m.objective
        );
        for share in &m.per_user {
            let _ = write!(out, ",{:.6}", share.percent);
        }
        out.push('\n');
    }
    out
}

/// The JSON mirror: every run (with its nested per-layer histogram and
/// per-user shares) plus the aggregate.
pub fn json_report(runs: &[ExperimentRun], aggregate: &Aggregate) -> serde_json::Value {
    serde_json::json!({ "runs": runs, "aggregate": aggregate })
}

/// Writes `report.csv` and `report.json` under `out_dir`, creating it if
/// needed; returns the two paths.
pub fn write_reports(
    runs: &[ExperimentRun],
    aggregate: &Aggregate,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join("report.csv");
    let json_path = out_dir.join("report.json");
    std::fs::write(&csv_path, csv_report(runs)).map_err(io_err(&csv_path))?;
    let text = serde_json::to_string_pretty(&json_report(runs, aggregate))?;
    std::fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
    Ok((csv_path, json_path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Window,
    Alpha,
    Users,
    ChunkSeconds,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Window => "window",
            SweepParam::Alpha => "alpha",
            SweepParam::Users => "users",
            SweepParam::ChunkSeconds => "chunk_seconds",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "window" => Ok(SweepParam::Window),
            "alpha" => Ok(SweepParam::Alpha),
            "users" => Ok(SweepParam::Users),
            "chunk_seconds" => Ok(SweepParam::ChunkSeconds),
            other => Err(format!(
                "unknown sweep parameter '{other}' (expected window, alpha, users or \
                 chunk_seconds)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub aggregate: Aggregate,
}

fn positive_int(v: f64, what: &'static str) -> Result<u64, ExperimentError> {
    if v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(ExperimentError::BadSweepValue(v, what))
    }
}

/// Applies one sweep value to a copy of the scenario and settings.
///
/// Sweeping the chunk duration keeps the *content* fixed: the total video
/// duration and the per-second layer rates are preserved, so the chunk
/// count and layer sizes rescale with the new duration.
fn apply_sweep(
    param: SweepParam,
    value: f64,
    config: &ExperimentConfig,
    settings: &RunSettings,
) -> Result<(ExperimentConfig, RunSettings), ExperimentError> {
    let mut config = config.clone();
    let mut settings = settings.clone();
    match param {
        SweepParam::Window => {
            settings.online.window = positive_int(value, "window")? as usize;
        }
        SweepParam::Alpha => {
            settings.online.replan_period = positive_int(value, "alpha")? as u32;
        }
        SweepParam::Users => {
            let n = positive_int(value, "users")? as usize;
            if n > config.users.len() {
                return Err(ExperimentError::BadSweepValue(value, "users"));
            }
            config.users.truncate(n);
        }
        SweepParam::ChunkSeconds => {
            let l_new = positive_int(value, "chunk_seconds")? as u32;
            let l_old = config.chunk_seconds;
            let duration = config.chunks as u64 * l_old as u64;
            config.chunks = ((duration / l_new as u64) as usize).max(1);
            config.chunk_seconds = l_new;
            let scale = l_new as f64 / l_old as f64;
            for y in &mut config.layer_sizes_mb {
                *y *= scale;
            }
        }
    }
    Ok((config, settings))
}

/// One aggregate row per sweep value, in the given order.
pub fn run_sweep(
    param: SweepParam,
    values: &[f64],
    config: &ExperimentConfig,
    traces_dir: Option<&Path>,
    algo: Algo,
    settings: &RunSettings,
) -> Result<Vec<SweepRow>, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let (cfg, st) = apply_sweep(param, value, config, settings)?;
        let (_, aggregate) = run_experiment(&cfg, traces_dir, algo, &st)?;
        rows.push(SweepRow { value, aggregate });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BandwidthTrace;
    use crate::trace::write_trace_file;

    fn write_config(dir: &Path, users: &[(UserId, Option<&Path>)]) -> ExperimentConfig {
        let _ = dir;
        ExperimentConfig {
            chunks: 6,
            chunk_seconds: 1,
            startup_seconds: 1,
            layer_sizes_mb: vec![2.0, 1.0],
            users: users
                .iter()
                .map(|(id, path)| UserConfig {
                    id: *id,
                    set: 1,
                    max_layer: 1,
                    cap_mb: None,
                    trace: path.map(|p| p.to_path_buf()),
                })
                .collect(),
        }
    }

    #[test]
    fn config_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        let text = r#"{
            "chunks": 10,
            "chunk_seconds": 2,
            "startup_seconds": 5,
            "layer_sizes_mb": [2.9, 2.0],
            "users": [
                { "id": 1, "max_layer": 1, "trace": "a.txt" },
                { "id": 2, "set": 2, "max_layer": 0, "cap_mb": 100.0 }
            ]
        }"#;
        std::fs::write(&path, text).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.chunks, 10);
        assert_eq!(cfg.users[0].set, 1); // defaulted
        assert_eq!(cfg.users[1].cap_mb, Some(100.0));
        assert!(cfg.users[1].trace.is_none());
        let v = cfg.video().unwrap();
        assert_eq!(v.horizon(), 23);
    }

    #[test]
    fn quantiles_are_monotone_nearest_rank() {
        let q = quantiles_1pct(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!(q.len(), 101);
        assert_eq!(q[0], 1.0);
        assert_eq!(q[50], 3.0);
        assert_eq!(q[100], 5.0);
        assert_eq!(q[25], 2.0);
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert!(quantiles_1pct(&[]).is_empty());
    }

    #[test]
    fn aggregate_means_are_plain_averages() {
        let mk = |skip: f64, apbr: f64| ExperimentRun {
            trace_id: "t".into(),
            algo: "x".into(),
            metrics: MetricsReport {
                skip_pct: skip,
                apbr_mbps: apbr,
                lsr_mbps: 0.0,
                stall_seconds: 0,
                objective: 1.0,
                layer_pct: vec![],
                per_user: vec![],
            },
        };
        let agg = aggregate_runs(&[mk(0.0, 4.0), mk(50.0, 2.0)]);
        assert_eq!(agg.runs, 2);
        assert_eq!(agg.mean_skip_pct, 25.0);
        assert_eq!(agg.mean_apbr_mbps, 3.0);
        assert_eq!(agg.skip_pct_quantiles[0], 0.0);
        assert_eq!(agg.skip_pct_quantiles[100], 50.0);
    }

    #[test]
    fn config_mode_runs_once_and_reports_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let t1 = dir.path().join("u1.txt");
        let t2 = dir.path().join("u2.txt");
        write_trace_file(&t1, &BandwidthTrace::flat(2.5, 10), TraceUnit::Mbps).unwrap();
        write_trace_file(&t2, &BandwidthTrace::flat(1.5, 10), TraceUnit::Mbps).unwrap();
        let cfg = write_config(dir.path(), &[(1, Some(&t1)), (2, Some(&t2))]);
        let settings = RunSettings::default();
        let (runs, agg) =
            run_experiment(&cfg, None, Algo::OfflineNoPref, &settings).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].trace_id, "config");
        assert_eq!(agg.runs, 1);
        let again = run_experiment(&cfg, None, Algo::OfflineNoPref, &settings).unwrap();
        assert_eq!(csv_report(&runs), csv_report(&again.0));
        let csv = csv_report(&runs);
        assert!(csv.starts_with("trace_id,algo,skip_pct,apbr,lsr,stall_s,objective,u1_pct,u2_pct\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn suite_mode_builds_one_run_per_full_deal() {
        let dir = tempfile::tempdir().unwrap();
        let long = dir.path().join("long.txt");
        let short = dir.path().join("short.txt");
        // 2×360 s in one file + 1×360 s in the other → 3 profiles, 2 users
        // → one full deal (the odd profile is spare).
        write_trace_file(&long, &BandwidthTrace::flat(3.0, 720), TraceUnit::Mbps).unwrap();
        write_trace_file(&short, &BandwidthTrace::flat(4.0, 360), TraceUnit::Mbps).unwrap();
        let cfg = write_config(dir.path(), &[(1, None), (2, None)]);
        let instances =
            build_instances(&cfg, Some(dir.path()), &RunSettings::default()).unwrap();
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].trace_id, "suite-000");
        for u in &instances[0].users {
            assert_eq!(u.trace.len_seconds(), PROFILE_SECONDS);
        }
    }

    #[test]
    fn missing_trace_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), &[(1, None)]);
        match build_instances(&cfg, None, &RunSettings::default()) {
            Err(ExperimentError::MissingTrace(1)) => {}
            other => panic!("expected MissingTrace, got {other:?}"),
        }
    }

    #[test]
    fn user_sweep_never_hurts_skip_rate() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for id in 1..=3u32 {
            let p = dir.path().join(format!("u{id}.txt"));
            write_trace_file(&p, &BandwidthTrace::flat(1.0, 10), TraceUnit::Mbps).unwrap();
            paths.push(p);
        }
        let cfg = write_config(
            dir.path(),
            &[(1, Some(&paths[0])), (2, Some(&paths[1])), (3, Some(&paths[2]))],
        );
        let rows = run_sweep(
            SweepParam::Users,
            &[1.0, 2.0, 3.0],
            &cfg,
            None,
            Algo::OfflineNoPref,
            &RunSettings::default(),
        )
        .unwrap();
        let skips: Vec<f64> = rows.iter().map(|r| r.aggregate.mean_skip_pct).collect();
        assert!(skips.windows(2).all(|w| w[0] >= w[1]), "skips {skips:?}");
        assert!(skips[0] > skips[2], "more links should rescue chunks");
    }

    #[test]
    fn single_value_sweep_equals_a_plain_run() {
        let dir = tempfile::tempdir().unwrap();
        let t1 = dir.path().join("u1.txt");
        write_trace_file(&t1, &BandwidthTrace::flat(2.0, 10), TraceUnit::Mbps).unwrap();
        let cfg = write_config(dir.path(), &[(1, Some(&t1))]);
        let settings = RunSettings::default();
        let rows = run_sweep(
            SweepParam::Window,
            &[5.0],
            &cfg,
            None,
            Algo::Online,
            &settings,
        )
        .unwrap();
        let (_, agg) = run_experiment(&cfg, None, Algo::Online, &settings).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].aggregate, agg);
    }

    #[test]
    fn chunk_duration_sweep_preserves_content() {
        let cfg = ExperimentConfig {
            chunks: 12,
            chunk_seconds: 1,
            startup_seconds: 2,
            layer_sizes_mb: vec![1.5, 1.25],
            users: vec![],
        };
        let (swept, _) = apply_sweep(
            SweepParam::ChunkSeconds,
            3.0,
            &cfg,
            &RunSettings::default(),
        )
        .unwrap();
        assert_eq!(swept.chunks, 4);
        assert_eq!(swept.chunk_seconds, 3);
        assert_eq!(swept.layer_sizes_mb, vec![4.5, 3.75]);
        // Same duration, same per-second rates.
        assert_eq!(
            swept.chunks as u32 * swept.chunk_seconds,
            cfg.chunks as u32 * cfg.chunk_seconds
        );
    }

    #[test]
    fn reports_land_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let t1 = dir.path().join("u1.txt");
        write_trace_file(&t1, &BandwidthTrace::flat(3.0, 10), TraceUnit::Mbps).unwrap();
        let cfg = write_config(dir.path(), &[(1, Some(&t1))]);
        let (runs, agg) =
            run_experiment(&cfg, None, Algo::OfflineNoPref, &RunSettings::default()).unwrap();
        let out = dir.path().join("out");
        let (csv_path, json_path) = write_reports(&runs, &agg, &out).unwrap();
        let csv = std::fs::read_to_string(csv_path).unwrap();
        assert_eq!(csv, csv_report(&runs));
        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(json_path).unwrap()).unwrap();
        assert_eq!(parsed["aggregate"]["runs"], 1);
        assert_eq!(parsed["runs"][0]["trace_id"], "config");
    }
}
