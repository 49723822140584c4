//! GroupCast: cooperative streaming of layer-encoded video over a group of
//! user links.
//!
//! A video is split into chunks and encoded into a base layer plus
//! enhancement layers (SVC-style), so each chunk can be played at any prefix
//! of its layers. Several users lend their network links to download layers
//! cooperatively; links differ in bandwidth over time, in how much data their
//! owners are willing to contribute, and in priority: the group may prefer to
//! burn through some members' data allowances before touching others'.
//!
//! This crate provides:
//!
//! * deterministic offline schedulers ([`plan_offline_nopref`],
//!   [`plan_offline_pref`], [`plan_offline_noskip`]) that decide, from full
//!   knowledge of every link's bandwidth trace, which user fetches which
//!   layer of which chunk;
//! * an online scheduler ([`run_online`]) that re-plans over a sliding window
//!   from harmonic-mean bandwidth estimates and executes the plan
//!   second-by-second against the true traces;
//! * buffer-based and prediction-based round-robin baselines
//!   ([`run_baseline`]) driven by the same executor;
//! * exhaustive-search oracles ([`oracle_optimal`], [`oracle_min_skips`],
//!   [`oracle_pref_penalized`]) for validating the schedulers on small
//!   instances;
//! * QoE metrics ([`compute_metrics`]) and a trace-driven experiment harness
//!   ([`run_experiment`], [`run_sweep`]) with CSV/JSON reporting.
//!
//! Conventions: data volumes are megabits (`f64`), time is whole seconds,
//! chunks are 1-indexed, layers 0-indexed with layer 0 the base layer.
pub mod baseline;
pub mod experiment;
pub mod feasibility;
pub mod metrics;
pub mod model;
pub mod offline;
pub mod online;
pub mod oracle;
pub mod trace;
pub mod weights;

pub use baseline::{
    bb_quality, pb_quality, run_baseline, BBConfig, BaselineAlgo, BaselineConfig, PB_SAFETY,
};
pub use experiment::{
    aggregate_runs, build_instances, csv_report, json_report, quantiles_1pct, run_experiment,
    run_one, run_sweep, write_reports, Aggregate, Algo, ExperimentConfig, ExperimentError,
    ExperimentRun, RosterInstance, RunSettings, SweepParam, SweepRow, UserConfig,
    PROFILE_SECONDS,
};
pub use feasibility::{check_feasibility, Violation};
pub use metrics::{compute_metrics, MetricsReport, UserShare};
pub use oracle::{
    edf_feasible, oracle_min_skips, oracle_optimal, oracle_optimal_naive, oracle_pref_penalized,
    OracleError, OracleResult, PenaltyParams,
};
pub use model::{
    validate_roster, BandwidthTrace, ChunkOutcome, Contribution, ExecutionLog, FetchPlan,
    ModelError, Transfer, UserId, UserLink, VideoSpec, EPS_MB,
};
pub use offline::{
    cumulative_bandwidth, execute_plan, materialize_download_order, plan_offline_nopref,
    plan_offline_noskip, plan_offline_pref, ExecError, OfflineOutcome, PassSnapshot, PlanError,
};
pub use online::{
    harmonic_predict, run_online, window_contribution, OnlineConfig, OnlineError, OnlineMode,
};
pub use trace::{
    assign_profiles, parse_trace, partition_profiles, read_trace_file, splitmix64,
    write_trace_file, TraceError, TraceUnit,
};
pub use weights::{make_weights, objective_value, ObjectiveError, StreamingMode, WeightTable};
