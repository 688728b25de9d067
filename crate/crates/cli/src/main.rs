//! `svp`: drive the simulated profiler from the command line.
//!
//! Exit status: 0 ok, 1 usage error, 2 data error, 3 acceptance threshold
//! missed.

mod calibrate;
mod decode;
mod error;
mod manifest;
mod send;
mod simulate;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use svp_core::constants::Constants;
use svp_core::SynthesisScenario;

use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "svp", version, about = "Simulated sound speed and attenuation profiler")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a sweep through the simulated device; write CSV, ground-truth JSONL
    /// and optionally the memory dump named in the manifest.
    Simulate {
        /// TOML run manifest.
        manifest: PathBuf,
    },
    /// Tabulate a memory dump (concatenated RECORD/MEM_DATA frames) as CSV.
    Decode {
        dump: PathBuf,
        /// Output CSV; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Measure pure water at each temperature and report residuals against
    /// the calibration equation; fails (exit 3) beyond ±0.02 m/s.
    Calibrate {
        /// Temperatures in °C, comma separated.
        #[arg(short, long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        temperatures: Vec<f64>,
        /// Additive noise, mV rms.
        #[arg(long, default_value_t = 0.0)]
        noise_rms: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constants file replacing the bundled calibration coefficients.
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Output CSV; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Send command frames to a freshly powered device and print the
    /// exchange in hex. Tokens: set-mode=<mode>, read-record,
    /// read-mem=<start>,<count>, format-mem, write-settings, read-settings,
    /// status, raw=<hex>, cycle[=<n>].
    ProtocolSend {
        #[arg(required = true)]
        tokens: Vec<String>,
    },
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Cmd::Simulate { manifest } => {
            let m = manifest::RunManifest::load(&manifest)?;
            let summary = simulate::run(&m)?;
            eprintln!(
                "{} records ({} invalid) -> {}, {}",
                summary.records,
                summary.invalid,
                m.csv.display(),
                m.truth.display()
            );
            Ok(())
        }
        Cmd::Decode { dump, output: out } => {
            let bytes =
                std::fs::read(&dump).map_err(|e| CliError::Data(format!("cannot read {}: {e}", dump.display())))?;
            let mut w = output(out.as_deref())?;
            let problem = decode::run(&bytes, &mut w)?;
            w.flush()?;
            match problem {
                None => Ok(()),
                Some(p) => {
                    eprintln!("warning: {p}; output is partial");
                    Err(CliError::Data(p.to_string()))
                }
            }
        }
        Cmd::Calibrate {
            temperatures,
            noise_rms,
            seed,
            constants,
            output: out,
        } => {
            let loaded;
            let constants = match constants {
                Some(p) => {
                    loaded = Constants::load(&p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                    &loaded
                }
                None => Constants::bundled(),
            };
            let scenario = SynthesisScenario {
                noise_rms,
                seed,
                ..SynthesisScenario::default()
            };
            let opts = calibrate::Options {
                constants,
                scenario,
                settings: Default::default(),
            };
            let rows = calibrate::run(&temperatures, &opts)?;
            let mut w = output(out.as_deref())?;
            calibrate::write_report(&rows, &mut w)?;
            w.flush()?;
            let failed: Vec<String> = rows
                .iter()
                .filter(|r| !r.passes())
                .map(|r| format!("{} °C ({:+.4} m/s)", r.temperature, r.residual()))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Threshold(format!(
                    "|residual| > {} m/s at {}",
                    calibrate::TOLERANCE,
                    failed.join(", ")
                )))
            }
        }
        Cmd::ProtocolSend { tokens } => {
            let steps = tokens
                .iter()
                .map(|t| send::parse_step(t))
                .collect::<CliResult<Vec<_>>>()?;
            let mut w = output(None)?;
            send::run(&steps, &SynthesisScenario::default(), &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svp: {e}");
            e.exit_code()
        }
    }
}
