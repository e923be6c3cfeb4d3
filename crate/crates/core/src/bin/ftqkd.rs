use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ftqkd::commands::{
    check_scheme, cmd_crossover, cmd_protocol, cmd_rates, cmd_validate, write_protocol_outputs,
};
use ftqkd::config::RunConfig;
use ftqkd::error::exit_code;
use ftqkd::protocol::SUMMARY_CSV_HEADER;
use ftqkd::sim::{write_records, Simulator};
use ftqkd::Result;

/// Frequency/time-coding QKD simulator.
#[derive(Parser)]
#[command(name = "ftqkd", version)]
struct Cli {
    /// Configuration file (`name = value unit` per line).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output file; a directory for `protocol`. Defaults to stdout / `.`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Run even if the coding scheme fails validation.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// FT and BB84 rate curves as CSV.
    Rates,
    /// Maximum distances, FT advantage and BB84 breakdown visibility.
    Crossover,
    /// Monte Carlo count rate and QBER against the closed forms.
    Validate,
    /// One full key-distribution session.
    Protocol {
        /// Also dump every pulse record as CSV.
        #[arg(long, value_name = "PATH")]
        dump_records: Option<PathBuf>,
    },
    /// Check the coding scheme's constraints.
    CheckScheme,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.protocol.seed = seed;
    }
    let out = cli.out.as_deref();

    match &cli.command {
        Command::CheckScheme => {
            let report = check_scheme(&cfg);
            emit(out, &format!("{report}\n"))?;
            Ok(if report.passed() {
                exit_code::SUCCESS
            } else {
                exit_code::CONFIG
            })
        }
        Command::Rates => {
            emit(out, &cmd_rates(&cfg, cli.force)?)?;
            Ok(exit_code::SUCCESS)
        }
        Command::Crossover => {
            emit(out, &cmd_crossover(&cfg, cli.force)?.to_string())?;
            Ok(exit_code::SUCCESS)
        }
        Command::Validate => {
            let report = cmd_validate(&cfg, cli.force)?;
            emit(out, &report.to_string())?;
            Ok(if report.breach() {
                exit_code::VALIDATION_BREACH
            } else {
                exit_code::SUCCESS
            })
        }
        Command::Protocol { dump_records } => {
            if let Some(path) = dump_records {
                let sim = Simulator::new(&cfg.scheme, cfg.params, cfg.protocol.eve)
                    .or_else(|e| {
                        if cli.force {
                            Simulator::unchecked_scheme(cfg.params, cfg.protocol.eve)
                        } else {
                            Err(e)
                        }
                    })?
                    .with_resend_position(cfg.protocol.resend);
                let records = sim.run(cfg.protocol.n_pulses, cfg.protocol.seed);
                let mut file = std::io::BufWriter::new(fs::File::create(path)?);
                write_records(&mut file, &records)?;
                file.flush()?;
            }
            let outcome = cmd_protocol(&cfg, cli.force)?;
            write_protocol_outputs(&outcome, out.unwrap_or(Path::new(".")))?;
            println!("{SUMMARY_CSV_HEADER}\n{}", outcome.summary);
            Ok(if outcome.summary.aborted {
                exit_code::ABORT
            } else {
                exit_code::SUCCESS
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ftqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
