use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cotow_harness::campaign::{run_campaign, DEFAULT_PAIRS};
use cotow_harness::config::{ConfigError, ExperimentConfig};
use cotow_harness::export::{
    export_campaign, export_csv, export_plots, export_summary, import_csv, log_from_rows,
};
use cotow_harness::metrics::{compute_metrics, DEFAULT_SKIP};
use cotow_harness::runner::{run_experiment, RunError};

const EXIT_DIVERGED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "cotow", version, about = "Tethered USV/UAV towing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its log, summary and plot series.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's mode.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, env = "COTOW_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Paired multi/single comparison on randomized trajectories.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's campaign.pairs, then 30.
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, env = "COTOW_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Recompute metrics from a saved run log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        metrics: bool,
        #[arg(long, default_value_t = DEFAULT_SKIP)]
        skip: f64,
    },
}

enum Failure {
    Config(ConfigError),
    Diverged(RunError),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn run(config: &Path, mode: Option<String>, out: &Path) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if mode.is_some() {
        cfg.mode = mode;
    }
    let setup = cfg.build()?;
    let log = match run_experiment(&setup) {
        Ok(log) => log,
        Err(RunError::Setup(e)) => return Err(ConfigError::Invalid(e.to_string()).into()),
        Err(e @ RunError::SimulationDiverged { .. }) => {
            if let RunError::SimulationDiverged { log, .. } = &e {
                let path = out.join(format!("{}-{}-partial.csv", setup.plan.name, cfg.mode_name()));
                if export_csv(log, &path).is_ok() {
                    eprintln!("partial log written to {}", path.display());
                }
            }
            return Err(Failure::Diverged(e));
        }
    };
    let stem = format!("{}-{}", setup.plan.name, cfg.mode_name());
    let csv = out.join(format!("{stem}.csv"));
    export_csv(&log, &csv).context("writing run log")?;
    let metrics = compute_metrics(&log, cfg.skip()).context("computing metrics")?;
    export_summary(&metrics, &setup.plan.name, cfg.mode_name(), &out.join(format!("{stem}-summary.toml")))
        .context("writing summary")?;
    export_plots(&log.rows, &out.join(format!("{stem}-plots"))).context("writing plot series")?;
    println!("{}", csv.display());
    print_metrics(&metrics);
    Ok(())
}

fn campaign(config: &Path, pairs: Option<usize>, out: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let pairs = pairs.or(cfg.campaign.pairs).unwrap_or(DEFAULT_PAIRS);
    let report = run_campaign(&cfg, pairs)?;
    export_campaign(&report, out).context("writing campaign report")?;
    for (mode, fit) in &report.fits {
        match fit {
            Some(f) => println!("{mode:>6}: mu = {:.3} m, sigma = {:.3} m, n = {}", f.mu, f.sigma, f.n_samples),
            None => println!("{mode:>6}: too few successful runs"),
        }
    }
    println!("multi wins {}/{} pairs", report.multi_wins, report.complete_pairs);
    for f in &report.failures {
        eprintln!("trajectory {} ({}) failed: {}", f.trajectory, f.mode, f.error.as_deref().unwrap_or("?"));
    }
    Ok(())
}

fn replay(log: &Path, metrics: bool, skip: f64) -> Result<(), Failure> {
    let rows = import_csv(log).context("reading run log")?;
    println!("{} rows", rows.len());
    if metrics {
        let m = compute_metrics(&log_from_rows(rows), skip).context("computing metrics")?;
        print_metrics(&m);
    }
    Ok(())
}

fn print_metrics(m: &cotow_harness::metrics::Metrics) {
    println!("mean distance   {:.4} m (full run {:.4} m)", m.mean_distance, m.mean_distance_full);
    println!("max distance    {:.4} m", m.max_distance);
    match m.recovery_time {
        Some(t) => println!("recovery time   {t:.2} s"),
        None => println!("recovery time   -"),
    }
    println!("slack events    {}", m.slack_events);
    println!("lifting events  {}", m.lifting_violations);
    println!("solver failures {}", m.solver_failures);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, mode, out } => run(&config, mode, &out),
        Command::Campaign { config, pairs, out } => campaign(&config, pairs, &out),
        Command::Replay { log, metrics, skip } => replay(&log, metrics, skip),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Diverged(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
