use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use etaqfi_cli::verify::{run_verify, Fixture, Level, Status};
use etaqfi_cli::{cmd_analyze, cmd_sweep, presets, read_config, CliError, EXIT_NUMERIC, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "etaqfi", version, about = "Covariant quantum Fisher information for pseudo-Hermitian systems")]
struct Cli {
    /// Directory for CSV and JSON outputs
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available cores)
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Seed for the randomized verification fixtures
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one θ and print the sample with metric diagnostics as JSON
    Analyze { config: PathBuf },
    /// Evaluate a θ-grid and emit CSV plus a JSON report
    Sweep {
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// One of: figure1a, figure1b, multiplicative, pt-bound
        #[arg(long, value_name = "NAME")]
        preset: Option<String>,
    },
    /// Run the self-check suite
    Verify {
        /// Include the long sweeps
        #[arg(long)]
        full: bool,
        /// Print the results as JSON
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let stdout = std::io::stdout();
    match cli.command {
        Command::Analyze { config } => {
            let report = cmd_analyze(read_config(&config)?)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            writeln!(stdout.lock(), "{text}").ok();
            Ok(EXIT_OK)
        }
        Command::Sweep { config, preset } => {
            let (cfg, stem) = match (&config, &preset) {
                (_, Some(name)) => (presets::load(name)?, name.clone()),
                (Some(path), None) => {
                    let stem = path.file_stem().map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
                    (read_config(path)?, stem)
                }
                (None, None) => unreachable!("clap requires a config or a preset"),
            };
            let mut lock = stdout.lock();
            let report = cmd_sweep(cfg, workers, cli.out.as_deref(), &stem, &mut lock)?;
            let s = &report.summary;
            eprintln!(
                "{} points, {} failed, {} flagged; max cqfi {:?} at θ = {:?}; duality max deviation {:?}; {} bound violations",
                s.points, s.failed, s.flagged, s.max_cqfi, s.argmax_theta, s.duality_max_deviation, s.bound_violations
            );
            if s.points > 0 && s.failed == s.points {
                return Ok(EXIT_NUMERIC);
            }
            Ok(EXIT_OK)
        }
        Command::Verify { full, json } => {
            let level = if full { Level::Full } else { Level::Fast };
            let report = run_verify(level, cli.seed, Fixture::default());
            let mut out = stdout.lock();
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes")).ok();
            } else {
                for r in &report.results {
                    let tag = match r.status {
                        Status::Pass => "PASS",
                        Status::Fail => "FAIL",
                        Status::Skip => "SKIP",
                    };
                    writeln!(out, "{tag} {:<36} {:>7.2}s  {}", r.name, r.seconds, r.detail).ok();
                }
            }
            let failed = report.results.iter().filter(|r| r.status == Status::Fail).count();
            if failed > 0 {
                return Err(CliError::Verify(failed));
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
