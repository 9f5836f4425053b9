//! Command-line front end: `run`, `verify`, `sweep` and `classify`.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dvflow_core::diagnostics::Mutation;
use dvflow_core::{ConstitutiveLaw, Scheme};

use crate::commands::{status_code, CliError};
use crate::config::{parse_config, ConfigError, RunConfig};

pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "dvflow", version, about = "1D compressible flow with degenerate viscosity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (default: $OUT_DIR, else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and verification.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Spatial scheme; overrides the config.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Spectral,
    Fd4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MutationArg {
    WQuadratic,
    EntropyDissipation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configured simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these checks (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Deliberately break one term to confirm the suite notices.
        #[arg(long, value_enum)]
        mutate: Option<MutationArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a parameter grid and write one CSV row per tuple.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the regime table of a law without running.
    Classify {
        #[arg(long, conflicts_with_all = ["c_p", "gamma", "c_mu", "alpha"])]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        c_p: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c_mu: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(path: &Path, common: Option<&Common>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(common) = common {
        if let Some(s) = common.scheme {
            config.grid.scheme = match s {
                SchemeArg::Spectral => Scheme::Spectral,
                SchemeArg::Fd4 => Scheme::Fd4,
            };
        }
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        config::resolve(&config)?;
    }
    Ok(config)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn report(e: &CliError) -> i32 {
    eprintln!("error: {e}");
    match e {
        CliError::Config(_) => EXIT_CONFIG,
        CliError::Solver(dvflow_core::Error::NonFinite { .. })
        | CliError::Solver(dvflow_core::Error::DtUnderflow { .. }) => 3,
        CliError::Solver(_) => EXIT_CONFIG,
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, common } => {
            let result = load(&config, Some(&common)).and_then(|cfg| {
                with_jobs(common.jobs, || commands::cmd_run(&cfg, &out_dir(&common)))
            });
            match result {
                Ok(r) => {
                    let s = &r.summary;
                    println!(
                        "status {} at t = {} (min rho {} at x = {})",
                        r.status.as_str(),
                        s["final_t"],
                        s["min_rho"]["value"],
                        s["min_rho"]["x"]
                    );
                    status_code(r.status)
                }
                Err(e) => report(&e),
            }
        }
        Command::Verify {
            config,
            only,
            mutate,
            common,
        } => {
            let seed = match (&config, common.seed) {
                (_, Some(seed)) => Ok(seed),
                (Some(path), None) => load(path, None).map(|c| c.seed),
                (None, None) => Ok(0),
            };
            let mutation = match mutate {
                None => Mutation::None,
                Some(MutationArg::WQuadratic) => Mutation::FlipWQuadratic,
                Some(MutationArg::EntropyDissipation) => Mutation::FlipEntropyDissipation,
            };
            let result = seed.and_then(|seed| {
                with_jobs(common.jobs, || {
                    commands::cmd_verify(seed, mutation, &only, &out_dir(&common))
                })
            });
            match result {
                Ok(true) => 0,
                Ok(false) => EXIT_VERIFY_FAILED,
                Err(e) => report(&e),
            }
        }
        Command::Sweep { config, common } => {
            let result = load(&config, Some(&common)).and_then(|cfg| {
                with_jobs(common.jobs, || commands::cmd_sweep(&cfg, &out_dir(&common)))
            });
            match result {
                Ok(path) => {
                    println!("wrote {}", path.display());
                    0
                }
                Err(e) => report(&e),
            }
        }
        Command::Classify {
            config,
            c_p,
            gamma,
            c_mu,
            alpha,
        } => {
            let law = match config {
                Some(path) => load(&path, None)
                    .and_then(|c| Ok(config::resolve(&c)?.mapping.law)),
                None => match (c_p, gamma, c_mu, alpha) {
                    (Some(c_p), Some(g), Some(c_mu), Some(a)) => {
                        ConstitutiveLaw::new(c_p, g, c_mu, a).map_err(CliError::from)
                    }
                    _ => Err(CliError::Config(ConfigError::Invalid {
                        path: "classify".into(),
                        message: "give --config or all of --c-p, --gamma, --c-mu, --alpha".into(),
                    })),
                },
            };
            match law {
                Ok(law) => {
                    print!("{}", commands::classify_table(&law));
                    0
                }
                Err(e) => report(&e),
            }
        }
    }
}
