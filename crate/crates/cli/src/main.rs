use std::io::Write;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qudit_teleport::channels::ChannelDescriptor;
use qudit_teleport::harness::{run_teleport, InputSource, RunConfig};
use qudit_teleport::verify::{run_verify, VerifyOptions};
use qudit_teleport::{Outcome, Protocol};

#[derive(Parser)]
#[command(name = "qtele", version, about = "Qudit teleportation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of teleportations and write a JSON report.
    Teleport {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// dn, dpn or dppn.
        #[arg(long)]
        protocol: Protocol,
        /// tps, ges:GEN or ges2:GEN:GEN with GEN one of identity, haar:SEED,
        /// yeo-chua:THETA,PHI. Defaults to tps, ges:haar:0, ges2:haar:0:haar:1.
        #[arg(long)]
        channel: Option<String>,
        /// Bell labels of the channel pairs as k1,l1,...,kn,ln.
        #[arg(long)]
        offsets: Option<String>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// State-vector text file; a fresh random input per trial if absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Report path; stdout if absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant suites over ranges of d and n.
    Verify {
        /// Single value or inclusive range like 2..5.
        #[arg(long, default_value = "2..5")]
        d: String,
        #[arg(long, default_value = "1..2")]
        n: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>> {
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.strip_prefix('=').unwrap_or(hi)),
        None => (s, s),
    };
    let lo: usize = lo
        .trim()
        .parse()
        .with_context(|| format!("bad range {s:?}"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .with_context(|| format!("bad range {s:?}"))?;
    if lo > hi {
        bail!("empty range {s:?}");
    }
    Ok(lo..=hi)
}

fn default_channel(protocol: Protocol) -> &'static str {
    match protocol {
        Protocol::Dn => "tps",
        Protocol::Dpn => "ges:haar:0",
        Protocol::Dppn => "ges2:haar:0:haar:1",
    }
}

fn write_report(json: &str, output: Option<&PathBuf>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, format!("{json}\n"))
            .with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{json}")?;
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Teleport {
            d,
            n,
            protocol,
            channel,
            offsets,
            trials,
            seed,
            input,
            output,
        } => {
            let channel: ChannelDescriptor = channel
                .as_deref()
                .unwrap_or(default_channel(protocol))
                .parse()?;
            let offsets = match offsets {
                Some(s) => s.parse::<Outcome>()?.labels,
                None => Vec::new(),
            };
            let config = RunConfig {
                d,
                n,
                protocol,
                channel,
                offsets,
                trials,
                seed,
                input: input.map_or(InputSource::Random, InputSource::File),
            };
            let report = run_teleport(&config)?;
            write_report(&serde_json::to_string_pretty(&report)?, output.as_ref())?;
            if !report.passed {
                eprintln!(
                    "min fidelity {} below threshold {}",
                    report.aggregate.min_fidelity, report.fidelity_threshold
                );
            }
            Ok(report.passed)
        }
        Command::Verify {
            d,
            n,
            seed,
            output,
            inject_fault,
        } => {
            let opts = VerifyOptions {
                d: parse_range(&d)?,
                n: parse_range(&n)?,
                seed,
                inject_fault,
            };
            let report = run_verify(&opts)?;
            write_report(&serde_json::to_string_pretty(&report)?, output.as_ref())?;
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!(
                    "FAIL {} d={} n={}: deviation {:e} > {:e}",
                    c.property,
                    c.d,
                    c.n.map_or_else(|| "-".to_string(), |n| n.to_string()),
                    c.max_deviation,
                    c.tolerance
                );
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
