//! `hamsim`: plan, run and check sparse Hamiltonian simulations.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors (including a
//! failed `verify` suite), 2 on internal errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hamsim", version, about = "Sparse time-dependent Hamiltonian simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Problem {
    /// Hamiltonian spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Total evolution time.
    #[arg(long)]
    t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ideal,
    Stochastic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Self-inverse decomposition properties on random 1-sparse terms.
    Lemma1,
    /// Exactness of the 1-sparse partition on random Hamiltonians.
    Partition,
    /// Gadget branch, probability and correction identities.
    Gadget,
    /// Analytic walk bounds.
    Bounds,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a Hamiltonian into 1-sparse terms.
    ///
    /// Without --dump prints a JSON summary; with --dump prints a JSON array
    /// of {color, kind, term} where each term is a spec-file document.
    Decompose {
        /// Hamiltonian spec file (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Time at which the partition is checked.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        dump: bool,
    },
    /// Print the simulation plan and its resource estimate as JSON.
    Plan {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        eps: f64,
    },
    /// Run a plan on a basis state.
    ///
    /// A single stochastic run prints its trace as JSON. With --seeds N the
    /// runs use seeds seed..seed+N and print CSV with columns
    /// seed,completed,attempts,attempts_cap,faults,correction_queries,
    /// basic_queries,recursive_steps,fidelity; batch statistics go to
    /// --summary (JSON) or standard error.
    Run {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds for a stochastic batch.
        #[arg(long)]
        seeds: Option<u64>,
        /// Worker threads (0 = all cores, 1 = sequential).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Index of the initial basis state.
        #[arg(long, default_value_t = 0)]
        state: usize,
        /// Write the batch statistics JSON here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Monte Carlo of the segment walk.
    ///
    /// Prints CSV with columns trial,attempts,queries,recursive_steps,faults,
    /// exceeded_cap; the JSON summary with analytic bounds goes to --summary
    /// or standard error.
    Walk {
        /// Segments to complete.
        #[arg(long = "T", alias = "segments")]
        segments: u64,
        /// Gadgets per segment.
        #[arg(long)]
        m: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-gadget failure probability (default 1/(4m)).
        #[arg(long)]
        p_fail: Option<f64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Plan over several precisions.
    ///
    /// Prints CSV with columns eps,r,gamma,m,k1,eps1,segments,attempts_cap,
    /// queries_total,measured_error. The measured error is the operator
    /// distance of the compiled unitary to the exact evolution, left empty
    /// when the schedule exceeds --max-blocks.
    Sweep {
        #[command(flatten)]
        problem: Problem,
        /// Comma-separated precisions.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 2_000_000)]
        max_blocks: u128,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run a built-in verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random cases.
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| commands::dispatch(cli.command));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(2),
    }
}
