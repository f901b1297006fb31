//! `hfdyn`: configuration-driven runs of the Hartree-Fock solver.
//!
//! Exit codes: 0 pass, 1 internal error, 2 hypothesis failure, 3 warning only,
//! 4 blow-up, 5 invertibility not certified, 6 wrap window, 7 trajectory too
//! short, 64 malformed configuration or usage.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;
use output::{sha256_hex, Manifest, OutputDir};

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 4;
pub const EXIT_NOT_INVERTIBLE: i32 = 5;
pub const EXIT_WRAP_WINDOW: i32 = 6;
pub const EXIT_TRAJECTORY_LENGTH: i32 = 7;
pub const EXIT_CONFIG: i32 = 64;

/// Output directory override, the only setting read from the environment.
const OUT_ENV: &str = "HFDYN_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration{}{}: {message}", fmt_field(.field), fmt_line(.line))]
    Config {
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] hfdyn::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

fn fmt_field(field: &str) -> String {
    if field.is_empty() {
        String::new()
    } else {
        format!(" at `{field}`")
    }
}

fn fmt_line(line: &Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        use hfdyn::Error as E;
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Io(_) => EXIT_INTERNAL,
            CliError::Core(e) => match e {
                E::HypothesisViolation(_) => EXIT_FAIL,
                E::BlowUp { .. } => EXIT_BLOW_UP,
                E::InvertibilityNotCertified { .. } => EXIT_NOT_INVERTIBLE,
                E::WrapWindow { .. } => EXIT_WRAP_WINDOW,
                E::TrajectoryTooShort { .. } => EXIT_TRAJECTORY_LENGTH,
                _ => EXIT_INTERNAL,
            },
        }
    }

    fn status(&self) -> &'static str {
        match self.exit_code() {
            EXIT_CONFIG => "invalid_config",
            EXIT_FAIL => "fail",
            EXIT_BLOW_UP => "blow_up",
            EXIT_NOT_INVERTIBLE => "not_certified",
            EXIT_WRAP_WINDOW => "wrap_window",
            EXIT_TRAJECTORY_LENGTH => "trajectory_too_short",
            _ => "error",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hfdyn", version, about = "Hartree-Fock equilibrium stability runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the `seed` of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: $HFDYN_OUT, then ./hfdyn-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify the hypotheses on (w, g) and write certificate.json.
    CheckHypotheses { config: PathBuf },
    /// Evolve the configured initial data; writes trajectory/ and observers.csv.
    Evolve { config: PathBuf },
    /// Norm of L3+L4 and a Neumann inversion of a random right-hand side.
    LinearResponse { config: PathBuf },
    /// Extract the scattering state of a run.
    Scatter { config: PathBuf },
    /// Fit the dispersive decay exponent of one dyadic shell.
    Decay { config: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckHypotheses { .. } => "check-hypotheses",
            Command::Evolve { .. } => "evolve",
            Command::LinearResponse { .. } => "linear-response",
            Command::Scatter { .. } => "scatter",
            Command::Decay { .. } => "decay",
        }
    }

    fn config(&self) -> &Path {
        match self {
            Command::CheckHypotheses { config }
            | Command::Evolve { config }
            | Command::LinearResponse { config }
            | Command::Scatter { config }
            | Command::Decay { config } => config,
        }
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit(EXIT_CONFIG) } else { exit(0) };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let mut cfg = match RunConfig::load(cli.command.config()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cli.command.config().display());
            return exit(e.exit_code());
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        eprintln!("--workers must be at least 1");
        return exit(EXIT_CONFIG);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        eprintln!("cannot start worker pool: {e}");
        return exit(EXIT_INTERNAL);
    }
    let root = cli
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hfdyn-out"));

    let mut out = match OutputDir::create(&root) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}: {e}", root.display());
            return exit(e.exit_code());
        }
    };
    let canonical = cfg.to_toml();
    let mut manifest = Manifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(canonical.as_bytes()),
        seed: cfg.seed,
        workers,
        status: String::new(),
        exit_code: 0,
        message: None,
        last_good_time: None,
        outputs: Default::default(),
    };
    let result = out.write("config.toml", canonical.as_bytes()).and_then(|_| {
        log::info!("{} -> {}", manifest.command, root.display());
        match &cli.command {
            Command::CheckHypotheses { .. } => commands::check_hypotheses(&cfg, &mut out),
            Command::Evolve { .. } => commands::evolve(&cfg, &mut out),
            Command::LinearResponse { .. } => commands::linear_response(&cfg, &mut out),
            Command::Scatter { .. } => commands::scatter(&cfg, &mut out),
            Command::Decay { .. } => commands::decay(&cfg, &mut out),
        }
    });
    match result {
        Ok(o) => {
            manifest.status = o.status;
            manifest.exit_code = o.code;
            manifest.last_good_time = o.last_good_time;
        }
        Err(e) => {
            eprintln!("{e}");
            manifest.status = e.status().to_string();
            manifest.exit_code = e.exit_code();
            manifest.message = Some(e.to_string());
            if let CliError::Core(hfdyn::Error::BlowUp { last_good_time }) = e {
                manifest.last_good_time = Some(last_good_time);
            }
        }
    }
    let code = manifest.exit_code;
    if let Err(e) = out.finish(manifest) {
        eprintln!("cannot write manifest: {e}");
        return exit(EXIT_INTERNAL);
    }
    exit(code)
}
