//! Command-line front end. `run_cli` writes everything except the
//! transcript file to `out`, so it can be driven in-process.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_traits::One;

use crate::algebra::{generate_group_params, GroupParams, RandomSource};
use crate::baseline::CoverageRow;
use crate::bench::{parse_range, run_bench, BenchRow, BenchTarget, DEFAULT_INPUT_BITS};
use crate::error::Error;
use crate::netsim::{complexity_report, Transcript};
use crate::poly::{evaluate, PolynomialSpec, Scheme};
use crate::session::{run_protocol, Model, Protocol};

#[derive(Debug, Parser)]
#[command(name = "aggsim", version, about = "Privacy-preserving product, sum and polynomial aggregation simulator")]
pub struct Cli {
    /// Seed for every random choice; falls back to AGGSIM_SEED, then 0.
    #[arg(long, global = true, env = "AGGSIM_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate group parameters.
    Params {
        #[arg(long, default_value_t = 256)]
        qbits: u64,
        /// Write to FILE instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one product or sum session.
    Run {
        #[arg(long, value_parser = parse_protocol)]
        protocol: Protocol,
        #[arg(long, value_parser = parse_model, default_value = "aggregator")]
        model: Model,
        /// Number of participants; defaults to the number of inputs.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        group: GroupArgs,
        /// Inputs as a file path or inline, comma or newline separated.
        #[arg(long)]
        inputs: Option<String>,
        /// Where to write the eavesdropper transcript.
        #[arg(long, default_value = "transcript.txt")]
        transcript: PathBuf,
        /// Also print the per-role complexity report.
        #[arg(long)]
        report: bool,
    },
    /// Evaluate a polynomial with the basic or advanced scheme.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        inputs: String,
        #[arg(long, value_parser = parse_model, default_value = "aggregator")]
        model: Model,
        #[arg(long, value_parser = parse_scheme, default_value = "advanced")]
        scheme: Scheme,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value = "transcript.txt")]
        transcript: PathBuf,
        #[arg(long)]
        report: bool,
    },
    /// Monte Carlo coverage of segment redistribution, as CSV.
    Baseline {
        /// One or more party counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// One or more values in (0, 1), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Scaling benchmark, as CSV.
    Bench {
        #[arg(long, value_parser = parse_target)]
        protocol: BenchTarget,
        /// A:B:STEP
        #[arg(long = "n-range")]
        n_range: String,
        #[arg(long, default_value_t = 256)]
        qbits: u64,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_INPUT_BITS)]
        input_bits: u64,
    },
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    /// Group parameters file; generated from the seed when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Size of q when generating parameters.
    #[arg(long, default_value_t = 256)]
    pub qbits: u64,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_target(s: &str) -> Result<BenchTarget, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Protocol(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Protocol(_) | CliError::Io { .. } => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source }
}

/// Comma- or whitespace-separated decimal values.
pub fn parse_inputs(text: &str) -> Result<Vec<BigUint>, Error> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<BigUint>().map_err(|_| Error::Parse(format!("input {t:?} is not a decimal integer"))))
        .collect()
}

/// An existing file is read; anything else is taken as inline values.
fn load_inputs(arg: &str) -> Result<Vec<BigUint>, CliError> {
    let path = Path::new(arg);
    let text = if path.is_file() { read(path)? } else { arg.to_owned() };
    parse_inputs(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_params(group: &GroupArgs, rng: &mut RandomSource) -> Result<GroupParams, CliError> {
    match &group.params {
        Some(path) => read(path)?.parse::<GroupParams>().map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => Ok(generate_group_params(group.qbits, rng)?),
    }
}

fn finish_run(out: &mut dyn Write, value: &BigUint, t: &Transcript, path: &Path, report: bool) -> Result<(), CliError> {
    write(path, &t.dump())?;
    writeln!(out, "{value}").map_err(stdout_err)?;
    if report {
        writeln!(out, "{}", complexity_report(t)).map_err(stdout_err)?;
    }
    Ok(())
}

pub fn run_cli(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rng = RandomSource::from_u64(cli.seed);
    match &cli.command {
        Command::Params { qbits, out: file } => {
            let gp = generate_group_params(*qbits, &mut rng)?;
            match file {
                Some(path) => write(path, &format!("{gp}\n"))?,
                None => writeln!(out, "{gp}").map_err(stdout_err)?,
            }
        }
        Command::Run { protocol, model, n, group, inputs, transcript, report } => {
            let gp = load_params(group, &mut rng)?;
            let inputs = match (inputs, n) {
                (Some(arg), _) => load_inputs(arg)?,
                (None, Some(n)) => {
                    let hi = (BigUint::one() << DEFAULT_INPUT_BITS).min(gp.p().clone());
                    (0..*n).map(|_| rng.range(&BigUint::one(), &hi)).collect()
                }
                (None, None) => return Err(CliError::Usage("give --n or --inputs".into())),
            };
            if let Some(n) = n {
                if *n != inputs.len() {
                    return Err(CliError::Usage(format!("--n is {n} but {} inputs were given", inputs.len())));
                }
            }
            let (value, t) = run_protocol(&gp, *protocol, *model, &inputs, &mut rng)?;
            finish_run(out, &value, &t, transcript, *report)?;
        }
        Command::Eval { spec, inputs, model, scheme, group, transcript, report } => {
            let spec: PolynomialSpec =
                read(spec)?.parse().map_err(|e: Error| CliError::Usage(format!("{}: {e}", spec.display())))?;
            let inputs = load_inputs(inputs)?;
            let gp = load_params(group, &mut rng)?;
            let eval = evaluate(&gp, &spec, &inputs, *model, *scheme, &mut rng)?;
            finish_run(out, &eval.value, &eval.transcript, transcript, *report)?;
        }
        Command::Baseline { n, epsilon, trials } => {
            writeln!(out, "{}", CoverageRow::CSV_HEADER).map_err(stdout_err)?;
            for &n in n {
                for &eps in epsilon {
                    let row = CoverageRow::compute(n, eps, *trials, &mut rng)?;
                    writeln!(out, "{row}").map_err(stdout_err)?;
                }
            }
        }
        Command::Bench { protocol, n_range, qbits, reps, input_bits } => {
            let ns = parse_range(n_range).map_err(|e| CliError::Usage(e.to_string()))?;
            let gp = generate_group_params(*qbits, &mut rng)?;
            writeln!(out, "{}", BenchRow::CSV_HEADER).map_err(stdout_err)?;
            for row in run_bench(&gp, *protocol, &ns, *reps, *input_bits, &mut rng)? {
                writeln!(out, "{row}").map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}
