use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curvelab::experiments::{acceptance_guard, run_experiment, write_outputs, ExperimentConfig, EXPERIMENTS};
use curvelab::Error;

/// Numerical experiments for operators along variable curves.
#[derive(Parser)]
#[command(name = "curvelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the experiment names.
    List,
    #[command(external_subcommand)]
    Run(Vec<String>),
}

#[derive(Parser)]
#[command(name = "curvelab <experiment>")]
struct RunCli {
    experiment: String,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args)]
struct RunOpts {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; results go to `<out>/<experiment>/<tag>/`.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (CURVELAB_THREADS takes precedence).
    #[arg(long)]
    threads: Option<usize>,
    /// Apply the experiment's acceptance guard; exit 3 on failure.
    #[arg(long)]
    check: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_GUARD: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in EXPERIMENTS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => {
            let run = RunCli::parse_from(std::iter::once("curvelab".to_string()).chain(args));
            match execute(run) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(match e {
                        Error::Config(_) | Error::Infeasible { .. } => EXIT_CONFIG,
                        _ => 1,
                    })
                }
            }
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Error> {
    match std::env::var("CURVELAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("CURVELAB_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn execute(run: RunCli) -> Result<ExitCode, Error> {
    let opts = run.opts;
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::new(""),
    };
    if !cfg.experiment.is_empty() && cfg.experiment != run.experiment {
        return Err(Error::Config(format!(
            "config is for `{}` but `{}` was requested",
            cfg.experiment, run.experiment
        )));
    }
    cfg.experiment = run.experiment;
    if !EXPERIMENTS.contains(&cfg.experiment.as_str()) {
        return Err(Error::Config(format!("unknown experiment `{}`; try `curvelab list`", cfg.experiment)));
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(n) = threads(opts.threads)? {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    let result = run_experiment(&cfg)?;
    let tag = cfg.tag.clone().unwrap_or_else(|| format!("seed{}", cfg.seed));
    let dir = write_outputs(&result, &opts.out, &tag)?;
    println!("wrote {}", dir.display());
    if let Some(fit) = &result.fit {
        println!("slope {:.6}  intercept {:.6}  R² {:.6}", fit.slope, fit.intercept, fit.r_squared);
    }
    if opts.check {
        match acceptance_guard(&result) {
            Some(g) if g.passed => println!("check passed: {}", g.detail),
            Some(g) => {
                println!("check FAILED: {}", g.detail);
                return Ok(ExitCode::from(EXIT_GUARD));
            }
            None => println!("no acceptance guard for {}", result.experiment),
        }
    }
    Ok(ExitCode::SUCCESS)
}
