//! `resalloc`: runs the prediction statistics, single planning problems and
//! network simulations, writing plot-ready CSV files.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 infeasible or domain
//! error.

mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resalloc::par::{set_workers, Execution};
use resalloc::planner::plan_file::{PlanFile, WindowDescription};
use resalloc::planner::{optimize_t_mw, Objective};
use resalloc::prediction::grid::{run_bias, run_grid, StatsConfig};
use resalloc::simulator::{run_figure, run_trials, Figure, ScenarioConfig, Scheme};

use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "resalloc", version, about = "Predictive resource allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form prediction error statistics against Monte Carlo.
    Stats(StatsArgs),
    /// Solves one planning window and writes the plan.
    Plan(PlanArgs),
    /// Runs network simulations, optionally for a figure preset.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Input file (TOML).
    #[arg(long, env = "RESALLOC_CONFIG")]
    config: PathBuf,
    #[arg(long, env = "RESALLOC_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "RESALLOC_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "RESALLOC_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    /// proposed, min-time or max-throughput.
    #[arg(long, env = "RESALLOC_OBJECTIVE", value_parser = parse_objective)]
    objective: Option<Objective>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Csi {
    On,
    Off,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "RESALLOC_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "RESALLOC_TRIALS")]
    trials: Option<usize>,
    /// f4, f5, f6, f7 or f8. Without it the configured scheme runs once.
    #[arg(long, env = "RESALLOC_FIGURE", value_parser = parse_figure)]
    figure: Option<Figure>,
    /// Scheme to run; with --figure, keeps only that scheme's series.
    #[arg(long, env = "RESALLOC_SCHEME", value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// Per-slot CSI; with --figure, keeps only matching series.
    #[arg(long, env = "RESALLOC_CSI")]
    csi: Option<Csi>,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    Objective::parse(s).ok_or_else(|| format!("unknown objective '{s}' (proposed, min-time, max-throughput)"))
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    Figure::parse(s).ok_or_else(|| format!("unknown figure '{s}' (f4, f5, f6, f7, f8)"))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
    Scheme::parse(s).ok_or_else(|| format!("unknown scheme '{s}' ({})", names.join(", ")))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Lib(#[from] resalloc::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use resalloc::Error as E;
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::Io { .. } | CliError::Csv(_) => 1,
            CliError::Lib(E::Config(_)) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_with<T>(path: &Path, bytes: &[u8], parse: impl Fn(&str) -> resalloc::Result<T>) -> CliResult<T> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse(text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn prepare(common: &Common) -> CliResult<Execution> {
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        set_workers(w);
    }
    std::fs::create_dir_all(&common.out_dir).map_err(|source| CliError::Io {
        path: common.out_dir.clone(),
        source,
    })?;
    Ok(Execution::Parallel)
}

fn cmd_stats(args: &StatsArgs) -> CliResult<()> {
    let bytes = read_input(&args.common.config)?;
    let mut cfg = parse_with(&args.common.config, &bytes, StatsConfig::from_toml)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let exec = prepare(&args.common)?;
    let grid = run_grid(&cfg, exec)?;
    let bias = run_bias(&cfg, exec)?;
    let dir = &args.common.out_dir;
    let mut files = vec![
        output::write_rows(dir, "fig3_grid", &grid.rows)?,
        output::write_rows(dir, "fig3_pdf", &grid.pdf)?,
    ];
    if !bias.is_empty() {
        files.push(output::write_rows(dir, "fig3_bias", &bias)?);
    }
    for r in &grid.rows {
        println!(
            "snr {:>5} dB  W {}  a {}  mean gap {:.4} sd  var gap {:.4}  KS {:.4}",
            r.snr_db,
            r.bandwidth_distribution.label(),
            r.gain_distribution.label(),
            r.mean_gap_in_sd,
            r.variance_rel_gap,
            r.ks_normal
        );
    }
    RunManifest::new("stats", &args.common.config, &bytes, cfg.seed, None, files).write(dir)
}

fn cmd_plan(args: &PlanArgs) -> CliResult<()> {
    let bytes = read_input(&args.common.config)?;
    let window = parse_with(&args.common.config, &bytes, WindowDescription::from_toml)?;
    prepare(&args.common)?;
    let objective = args.objective.or(window.objective).unwrap_or_default();
    let grid = window.grid()?;
    let inputs = window.inputs()?;
    let plan = optimize_t_mw(&inputs, &grid, window.bounds(), objective)?;
    let file = PlanFile::from(&plan);
    let dir = &args.common.out_dir;
    let text = file.to_toml()?;
    let path = dir.join("plan.toml");
    std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
    println!(
        "T_mw* = {} frames, {} user(s), {} objective {}",
        plan.t_mw_frames,
        plan.users.len(),
        objective.name(),
        plan.objective_value
    );
    RunManifest::new("plan", &args.common.config, &bytes, 0, None, vec!["plan.toml".into()]).write(dir)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let bytes = read_input(&args.common.config)?;
    let mut cfg = parse_with(&args.common.config, &bytes, ScenarioConfig::from_toml)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        cfg.trials = trials;
    }
    let csi = args.csi.map(|c| c == Csi::On);
    let exec = prepare(&args.common)?;
    let dir = &args.common.out_dir;
    let files = match args.figure {
        Some(figure) => {
            let mut series = figure.series();
            if let Some(s) = args.scheme {
                series.retain(|x| x.scheme == s);
            }
            if let Some(c) = csi {
                series.retain(|x| x.csi == c);
            }
            if series.is_empty() {
                return Err(CliError::Usage(format!(
                    "{} has no series matching the --scheme/--csi filters",
                    figure.name()
                )));
            }
            let tables = run_figure(figure, &cfg, &series, exec)?;
            tables
                .iter()
                .map(|t| output::write_table(dir, t))
                .collect::<CliResult<Vec<_>>>()?
        }
        None => {
            if let Some(s) = args.scheme {
                cfg.scheme.policy = s;
            }
            if let Some(c) = csi {
                cfg.scheme.csi = c;
            }
            let outcomes = run_trials(&cfg, exec)?;
            let summary = output::write_rows(dir, "run_trials", &output::trial_rows(&outcomes))?;
            let users = output::write_rows(dir, "run_users", &output::user_rows(&outcomes))?;
            let pooled = resalloc::simulator::pooled(&outcomes);
            println!(
                "{}: {} trials, {} users, mean total stall {:.4} s, satisfied {:.4}",
                cfg.scheme.policy.name(),
                outcomes.len(),
                pooled.users.len(),
                pooled.mean_total_stall_s(),
                pooled.satisfaction_fraction()
            );
            vec![summary, users]
        }
    };
    let label = args
        .figure
        .map_or("simulate".to_string(), |f| format!("simulate_{}", f.name()));
    RunManifest::new(&label, &args.common.config, &bytes, cfg.seed, Some(cfg.trials), files).write(dir)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("RESALLOC_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
