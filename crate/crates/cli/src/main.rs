//! `phylocoal` command-line tool: simulate genealogies, run samplers on
//! them, compare sampler efficiency and summarize posterior trajectories.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "phylocoal", version, about = "Coalescent effective population size inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a genealogy under a population size trajectory.
    Simulate(SimulateArgs),
    /// Sample the posterior of log population sizes for a genealogy.
    Infer(InferArgs),
    /// Report sampling efficiency for one or more traces.
    Diagnose(DiagnoseArgs),
    /// Posterior median and 95% band of the trajectory from a trace.
    Summarize(SummarizeArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// logistic, expgrowth, boombust, constant:N or piecewise:t1,..:N0,N1,..
    #[arg(long)]
    pub trajectory: Option<String>,
    /// Number of samples, all taken at time 0.
    #[arg(long)]
    pub n: Option<usize>,
    /// Heterochronous design `s1:n1,s2:n2,...`; overrides --n.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `auto` or a fixed integration step.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the trajectory as `t,Ne` CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub truth_points: Option<usize>,
    /// `key=value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    /// Genealogy file.
    pub genealogy: PathBuf,
    /// Read the genealogy as a Newick tree.
    #[arg(long)]
    pub newick: bool,
    /// hmc, splithmc, mala, amala or ess2.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Number of grid points.
    #[arg(long = "D")]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Initial step size.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Leapfrog steps per proposal.
    #[arg(long = "L", alias = "steps")]
    pub steps: Option<usize>,
    /// aMALA bound on the multiplicative precision move.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep the initial step size instead of tuning it during burn-in.
    #[arg(long)]
    pub no_tune: bool,
    /// `cpu` records thread CPU seconds; `iter` counts iterations, which
    /// makes the trace byte-reproducible.
    #[arg(long)]
    pub clock: Option<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Dump the grid sufficient statistics as CSV.
    #[arg(long)]
    pub stats_csv: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Trace files; the first is the speedup baseline.
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SummarizeArgs {
    pub trace: PathBuf,
    /// Trajectory to overlay and score coverage against.
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Infer(a) => commands::infer(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Summarize(a) => commands::summarize(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(line.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
