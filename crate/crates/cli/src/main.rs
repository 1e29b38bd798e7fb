// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod run_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Suite;
use error::CliError;
use run_dir::RunDir;

#[derive(Parser)]
#[command(name = "spme", version, about = "Stochastic porous medium experiments")]
struct Cli {
    /// TOML or JSON configuration (or a run manifest to replay).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Dotted-key override, e.g. `--set solver.nu=0.5`; repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads; never affects results.
    #[arg(short, long, env = "SPME_WORKERS", global = true)]
    workers: Option<usize>,

    /// Root directory for run folders (overrides `output.dir`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One pathwise solve: snapshots, path, diagnostics.
    Solve,
    /// Extinction Monte Carlo.
    Mc {
        /// Number of paths (overrides `mc.n_paths`).
        #[arg(short = 'n', long)]
        paths: Option<usize>,
    },
    /// Contraction of shifted truncated densities across the ladder.
    Contraction,
    /// Cauchy table of consecutive ladder levels.
    Convergence,
    /// Runs one validation suite; exit code 4 when an assertion fails.
    Validate {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Barenblatt oracle curves and support-rate constant.
    Barenblatt,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Solve => "solve".into(),
            Command::Mc { .. } => "mc".into(),
            Command::Contraction => "contraction".into(),
            Command::Convergence => "convergence".into(),
            Command::Validate { suite } => format!("validate-{}", suite.name()),
            Command::Barenblatt => "barenblatt".into(),
        }
    }
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Command::Mc { paths: Some(n) } = cli.command {
        overrides.push(format!("mc.n_paths={n}"));
    }
    let cfg = config::load(cli.config.as_deref(), &overrides)?;
    let workers = match cli.workers {
        Some(0) => return Err(CliError::Config("workers must be at least 1".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let root = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let resolved = serde_json::to_value(&cfg)?;
    let mut dir = RunDir::create(&root, &cli.command.name(), cfg.seed, resolved)?;
    let outcome = pool.install(|| match &cli.command {
        Command::Solve => commands::solve_cmd(&cfg, &mut dir),
        Command::Mc { .. } => commands::mc_cmd(&cfg, &mut dir),
        Command::Contraction => commands::contraction_cmd(&cfg, &mut dir),
        Command::Convergence => commands::convergence_cmd(&cfg, &mut dir),
        Command::Validate { suite } => commands::validate_cmd(&cfg, *suite, &mut dir),
        Command::Barenblatt => commands::barenblatt_cmd(&cfg, &mut dir),
    });
    let path = dir.finish(&outcome)?;
    outcome.map(|()| path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spme: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
