//! `groupcast` — run a scheduling algorithm over a trace scenario and emit
//! CSV/JSON reports.
//!
//! Examples:
//!
//! ```text
//! groupcast --algo offline-nopref --config scenario.json --out results/
//! groupcast --algo online --config scenario.json --traces traces/ \
//!     --window 5 --alpha 4 --delta 2 --beta 5 --seed 7 --out results/
//! groupcast --algo offline-noskip --config scenario.json --traces traces/ \
//!     --sweep chunk_seconds=1,2,3,4 --out sweep/
//! ```
//!
//! Set `GROUPCAST_LOG=debug` for scheduler internals.

use anyhow::Context;
use clap::Parser;
use groupcast::{
    run_experiment, run_sweep, Algo, ExperimentConfig, RunSettings, SweepParam, SweepRow,
    TraceUnit,
};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "groupcast", version, about = "Cooperative SVC streaming simulator")]
struct Cli {
    /// Scheduling algorithm: offline-nopref, offline-pref, offline-noskip,
    /// online, bb, pb or oracle.
    #[arg(long)]
    algo: Algo,

    /// Scenario config file (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Directory of bandwidth trace files to slice into a suite of runs.
    /// Omit to use the per-user trace paths from the config instead.
    #[arg(long)]
    traces: Option<PathBuf>,

    /// Unit of the trace samples: mbps or bps (bytes per second).
    #[arg(long, default_value = "mbps")]
    unit: TraceUnit,

    /// Online lookahead window W, in chunks.
    #[arg(long)]
    window: Option<usize>,

    /// Online replanning period, in seconds.
    #[arg(long)]
    alpha: Option<u32>,

    /// Online deadline safety margin, in seconds.
    #[arg(long)]
    delta: Option<u32>,

    /// Bandwidth-prediction history depth, in completed downloads.
    #[arg(long)]
    beta: Option<usize>,

    /// Seed for dealing suite profiles to users.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory for report.csv / report.json (sweep.csv /
    /// sweep.json when sweeping).
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Sweep one parameter over several values, e.g. `window=2,5,10` or
    /// `chunk_seconds=1,2,3,4`. Parameters: window, alpha, users,
    /// chunk_seconds.
    #[arg(long, value_name = "PARAM=V1,V2,...")]
    sweep: Option<String>,

    /// Honor contribution-priority sets in the online scheduler and
    /// baselines (offline-pref always does).
    #[arg(long)]
    preference: bool,
}

fn parse_sweep(spec: &str) -> anyhow::Result<(SweepParam, Vec<f64>)> {
    let (name, rest) = spec
        .split_once('=')
        .context("--sweep expects PARAM=V1,V2,... (e.g. window=2,5,10)")?;
    let param = SweepParam::from_str(name.trim()).map_err(anyhow::Error::msg)?;
    let values = rest
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep value {v:?}"))
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok((param, values))
}

fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "param,value,runs,mean_skip_pct,mean_apbr,mean_lsr,mean_stall_s,mean_objective\n",
    );
    for row in rows {
        let a = &row.aggregate;
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            param.name(),
            row.value,
            a.runs,
            a.mean_skip_pct,
            a.mean_apbr_mbps,
            a.mean_lsr_mbps,
            a.mean_stall_seconds,
            a.mean_objective
        );
    }
    out
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = ExperimentConfig::load(&cli.config)?;
    let mut settings = RunSettings {
        unit: cli.unit,
        seed: cli.seed,
        preference: cli.preference,
        ..RunSettings::default()
    };
    if let Some(w) = cli.window {
        settings.online.window = w;
    }
    if let Some(a) = cli.alpha {
        settings.online.replan_period = a;
    }
    if let Some(d) = cli.delta {
        settings.online.deadline_margin = d;
    }
    if let Some(b) = cli.beta {
        settings.online.history_depth = b;
    }
    let traces = cli.traces.as_deref();

    if let Some(spec) = &cli.sweep {
        let (param, values) = parse_sweep(spec)?;
        log::info!("sweeping {} over {:?}", param.name(), values);
        let rows = run_sweep(param, &values, &config, traces, cli.algo, &settings)?;
        std::fs::create_dir_all(&cli.out)
            .with_context(|| format!("creating {}", cli.out.display()))?;
        let csv_path = cli.out.join("sweep.csv");
        let json_path = cli.out.join("sweep.json");
        std::fs::write(&csv_path, sweep_csv(param, &rows))?;
        let body = serde_json::json!({ "param": param.name(), "rows": rows });
        std::fs::write(&json_path, serde_json::to_string_pretty(&body)? + "\n")?;
        println!("wrote {} and {}", csv_path.display(), json_path.display());
    } else {
        let (runs, aggregate) = run_experiment(&config, traces, cli.algo, &settings)?;
        log::info!(
            "{} runs: mean skip {:.2}%, mean APBR {:.3} Mbps",
            aggregate.runs,
            aggregate.mean_skip_pct,
            aggregate.mean_apbr_mbps
        );
        let (csv_path, json_path) = groupcast::write_reports(&runs, &aggregate, &cli.out)?;
        println!("wrote {} and {}", csv_path.display(), json_path.display());
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GROUPCAST_LOG", "warn"))
        .init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
