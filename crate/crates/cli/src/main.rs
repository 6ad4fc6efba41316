//! impactlab: metaorder impact scenarios from TOML configs to figure-ready
//! CSV/JSON files.

mod config;
mod run;

use clap::{Parser, Subcommand};
use config::ScenarioConfig;
use run::{
    cmd_noneq, cmd_psi, cmd_relax, cmd_selftest, cmd_simulate, cmd_sizes, RunContext, RunError,
};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

#[derive(Parser)]
#[command(
    name = "impactlab",
    about = "Simulate metaorder market-impact scenarios, estimate the equilibrium index, and export friction, averaged-impact, size-law and relaxation data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config file (repeat to run a batch concurrently)
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Override the config's seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (IMPACTLAB_OUT overrides this flag)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Max scenarios processed concurrently in batch mode
    #[arg(long, global = true, default_value_t = 4)]
    jobs: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Equilibrium scenario: path.csv + summary.json
    Simulate,
    /// Two-regime sawtooth scenario with the limit-point report
    Noneq,
    /// Averaged impact function psi: closed form vs Monte Carlo
    Psi,
    /// Length/size laws: hazard ratios, bracket bounds, moment verdicts
    Sizes,
    /// Relaxation curve and the fair pricing point
    Relax,
    /// Run the oracle reference checks (exit 0 iff all pass)
    Selftest,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_SELFTEST: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if matches!(cli.command, Command::Selftest) {
        return if cmd_selftest() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(EXIT_SELFTEST)
        };
    }
    if cli.config.is_empty() {
        eprintln!("error: --config <file> is required for this command");
        return ExitCode::from(EXIT_CONFIG);
    }
    let out_base = std::env::var_os("IMPACTLAB_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out.clone());

    // Load and validate every config before running anything.
    let mut contexts = Vec::new();
    for path in &cli.config {
        match load_context(path, &cli, out_base.as_deref(), cli.config.len() > 1) {
            Ok(ctx) => contexts.push(ctx),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }

    let jobs = cli.jobs.max(1);
    let queue: Mutex<VecDeque<RunContext>> = Mutex::new(contexts.into());
    let failures: Mutex<Vec<RunError>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let ctx = match queue.lock().unwrap().pop_front() {
                    Some(c) => c,
                    None => break,
                };
                if let Err(e) = dispatch(cli.command, &ctx) {
                    eprintln!("error: {e}");
                    failures.lock().unwrap().push(e);
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    match failures.first() {
        None => ExitCode::SUCCESS,
        Some(RunError::Config(_)) => ExitCode::from(EXIT_CONFIG),
        Some(_) => ExitCode::from(EXIT_NUMERICAL),
    }
}

fn dispatch(command: Command, ctx: &RunContext) -> Result<(), RunError> {
    match command {
        Command::Simulate => cmd_simulate(ctx),
        Command::Noneq => cmd_noneq(ctx),
        Command::Psi => cmd_psi(ctx),
        Command::Sizes => cmd_sizes(ctx),
        Command::Relax => cmd_relax(ctx),
        Command::Selftest => unreachable!("handled before batch dispatch"),
    }
}

fn load_context(
    path: &PathBuf,
    cli: &Cli,
    out_base: Option<&std::path::Path>,
    batch: bool,
) -> Result<RunContext, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| format!("{} is not utf-8: {e}", path.display()))?;
    let config = ScenarioConfig::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let seed = cli.seed.unwrap_or(config.seed);
    let config_sha256 = hex(&Sha256::digest(&bytes));

    let mut out_dir = out_base
        .map(|p| p.to_path_buf())
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if batch {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        out_dir = out_dir.join(stem);
    }
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    Ok(RunContext {
        config,
        config_sha256,
        seed,
        out_dir,
    })
}

fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
