use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use slotgame_core::capture::{DEFAULT_MAX_SLOTS, DEFAULT_TOLERANCE};
use slotgame_core::dsl::{check_source, parse_strategy_bytes};
use slotgame_core::multichannel::OptimizerSettings;
use slotgame_core::tournament::{DEFAULT_HORIZON, DEFAULT_RUNS};

mod entrants;
mod jobs;
mod manifest;

use entrants::TournamentFile;
use jobs::{
    AnalyticsJob, Artifact, CaptureConverseJob, CaptureSimulateJob, CaptureSolveJob, ChannelPolicy,
    Job, MultichannelOptimizeJob, MultichannelSimulateJob, MultichannelSweepJob, SweepFamily,
    TournamentJob,
};
use manifest::{write_outputs, RunManifest, MANIFEST_FILE};

const DEFAULT_SEED: u64 = 1;
const SEED_ENV: &str = "SLOTGAME_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "slotgame",
    version,
    about = "Slotted multiple-access games and channel capture"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// Directory for output files and manifest.json; prints to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SeedArg {
    /// Master seed.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Round-robin tournament between strategy machines.
    Tournament(TournamentArgs),
    /// Closed-form scores over a range of horizons.
    Analytics(AnalyticsArgs),
    /// n-user first-capture problem.
    #[command(subcommand)]
    Capture(CaptureCommand),
    /// First capture over several channels.
    #[command(subcommand)]
    Multichannel(MultichannelCommand),
    /// Check strategy files and print diagnostics.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Re-run the job recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory (default: the manifest's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct TournamentArgs {
    /// Directory of .strat files.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Individual strategy files.
    #[arg(long = "strategy")]
    strategies: Vec<PathBuf>,
    /// Built-in strategies by name.
    #[arg(long = "builtin")]
    builtins: Vec<String>,
    /// TOML config with dir, strategies, builtins, horizon, runs, seed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Slots per game.
    #[arg(long = "T", visible_alias = "horizon")]
    horizon: Option<u32>,
    /// Games per pairing.
    #[arg(long)]
    runs: Option<u64>,
    #[command(flatten)]
    seed: SeedArg,
    /// Also write transcripts of the first game of every pairing.
    #[arg(long)]
    dump_transcripts: bool,
    /// Also write tidy CSV for plotting.
    #[arg(long)]
    emit_plot_data: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct AnalyticsArgs {
    #[arg(long, default_value_t = 1)]
    t_min: u32,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    t_max: u32,
    #[arg(long)]
    emit_plot_data: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Subcommand, Debug)]
enum CaptureCommand {
    /// Solve the p_n / z_n table.
    Solve {
        #[arg(long, default_value_t = 7)]
        n_max: usize,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        emit_plot_data: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte-Carlo capture time for n users.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        episodes: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = DEFAULT_MAX_SLOTS)]
        max_slots: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Numerical checks of the lower-bound arguments.
    Converse {
        #[arg(long, default_value_t = 7)]
        n_max: usize,
        #[arg(long, default_value_t = 1_000_000)]
        episodes: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = DEFAULT_MAX_SLOTS)]
        max_slots: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Debug)]
enum MultichannelCommand {
    /// Best 3-user, 2-channel policies.
    Optimize {
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 1001)]
        restricted_grid: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte-Carlo capture time over several channels.
    Simulate {
        #[arg(long, default_value_t = 2)]
        users: usize,
        /// Channel count for the independent policy.
        #[arg(long, default_value_t = 2)]
        channels: usize,
        /// Per-channel probability (independent policy) or P(channel 1) with --q/--r.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// P(channel 2 | channel 1); selects the two-channel (p, q, r) policy.
        #[arg(long, requires = "r")]
        q: Option<f64>,
        /// P(channel 2 | not channel 1).
        #[arg(long, requires = "q")]
        r: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        episodes: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = DEFAULT_MAX_SLOTS)]
        max_slots: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Renewal value over a parameter grid, as CSV.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepFamily::Restricted)]
        family: SweepFamily,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn resolve_tournament(args: TournamentArgs) -> Result<Job> {
    let file = match &args.config {
        Some(path) => TournamentFile::load(path)?,
        None => TournamentFile::default(),
    };
    let mut entrants = Vec::new();
    for dir in args.dir.iter().chain(file.dir.iter()) {
        entrants.extend(entrants::read_dir(dir)?);
    }
    for path in args.strategies.iter().chain(&file.strategies) {
        entrants.push(entrants::read_strategy(path)?);
    }
    for name in args.builtins.iter().chain(&file.builtins) {
        entrants.push(entrants::builtin_source(name)?);
    }
    if entrants.is_empty() {
        bail!("no entrants: pass --dir, --strategy, --builtin or a --config listing them");
    }
    Ok(Job::Tournament(TournamentJob {
        entrants,
        horizon: args.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON),
        runs: args.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        seed: args.seed.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        dump_transcripts: args.dump_transcripts,
        emit_plot_data: args.emit_plot_data,
    }))
}

/// Turns parsed arguments into a job and its output directory.
fn resolve(command: Command) -> Result<(Job, Option<PathBuf>)> {
    let seed = |s: SeedArg| s.seed.unwrap_or(DEFAULT_SEED);
    Ok(match command {
        Command::Tournament(args) => {
            let out = args.out.out.clone();
            (resolve_tournament(args)?, out)
        }
        Command::Analytics(a) => (
            Job::Analytics(AnalyticsJob {
                t_min: a.t_min,
                t_max: a.t_max,
                emit_plot_data: a.emit_plot_data,
            }),
            a.out.out,
        ),
        Command::Capture(CaptureCommand::Solve {
            n_max,
            tol,
            emit_plot_data,
            out,
        }) => (
            Job::CaptureSolve(CaptureSolveJob {
                n_max,
                tol,
                emit_plot_data,
            }),
            out.out,
        ),
        Command::Capture(CaptureCommand::Simulate {
            n,
            episodes,
            seed: s,
            max_slots,
            tol,
            out,
        }) => (
            Job::CaptureSimulate(CaptureSimulateJob {
                n,
                episodes,
                seed: seed(s),
                max_slots,
                tol,
            }),
            out.out,
        ),
        Command::Capture(CaptureCommand::Converse {
            n_max,
            episodes,
            seed: s,
            max_slots,
            tol,
            out,
        }) => (
            Job::CaptureConverse(CaptureConverseJob {
                n_max,
                episodes,
                seed: seed(s),
                max_slots,
                tol,
            }),
            out.out,
        ),
        Command::Multichannel(MultichannelCommand::Optimize {
            grid,
            restricted_grid,
            tol,
            out,
        }) => (
            Job::MultichannelOptimize(MultichannelOptimizeJob {
                settings: OptimizerSettings {
                    grid,
                    restricted_grid,
                    tol,
                },
            }),
            out.out,
        ),
        Command::Multichannel(MultichannelCommand::Simulate {
            users,
            channels,
            p,
            q,
            r,
            episodes,
            seed: s,
            max_slots,
            out,
        }) => {
            let policy = match (q, r) {
                (Some(q), Some(r)) => ChannelPolicy::Correlated { p, q, r },
                _ => ChannelPolicy::Independent { p, channels },
            };
            (
                Job::MultichannelSimulate(MultichannelSimulateJob {
                    users,
                    policy,
                    episodes,
                    seed: seed(s),
                    max_slots,
                }),
                out.out,
            )
        }
        Command::Multichannel(MultichannelCommand::Sweep { family, steps, out }) => (
            Job::MultichannelSweep(MultichannelSweepJob { family, steps }),
            out.out,
        ),
        Command::Validate { .. } | Command::Replay { .. } => unreachable!("handled by caller"),
    })
}

fn emit(job: Job, artifacts: Vec<Artifact>, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => write_outputs(dir, job, &artifacts),
        None => {
            let mut stdout = std::io::stdout().lock();
            for a in &artifacts {
                stdout.write_all(&a.contents)?;
            }
            Ok(())
        }
    }
}

/// Prints every diagnostic; true when all files are free of errors.
fn validate(files: &[PathBuf]) -> Result<bool> {
    let mut clean = true;
    for path in files {
        let bytes =
            std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let diagnostics = match std::str::from_utf8(&bytes) {
            Ok(text) => check_source(text).1,
            Err(_) => parse_strategy_bytes(&bytes)
                .err()
                .map(|e| e.diagnostics)
                .unwrap_or_default(),
        };
        for d in &diagnostics {
            println!("{}: {d}", path.display());
        }
        clean &= !diagnostics.iter().any(|d| d.is_error());
    }
    Ok(clean)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure worker threads")?;
    }
    match cli.command {
        Command::Validate { files } => {
            return Ok(if validate(&files)? {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
        Command::Replay { manifest, out } => {
            let recorded = RunManifest::load(&manifest)?;
            let dir = match out {
                Some(d) => d,
                None => manifest
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            let artifacts = recorded.job.execute()?;
            write_outputs(&dir, recorded.job, &artifacts)?;
            eprintln!("replayed into {}", dir.join(MANIFEST_FILE).display());
        }
        command => {
            let (job, out) = resolve(command)?;
            let artifacts = job.execute()?;
            emit(job, artifacts, out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
