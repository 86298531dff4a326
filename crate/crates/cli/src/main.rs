//! `psp`: measure how strategyproof a random assignment mechanism is.

mod commands;
mod envelope;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use envelope::{Outcome, ReportEnvelope};

#[derive(Debug, Parser)]
#[command(
    name = "psp",
    version,
    about = "Partial strategyproofness analysis for random assignment mechanisms"
)]
struct Cli {
    /// Print a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check dominance-based strategyproofness and measure local and global degrees.
    Analyze {
        /// Mechanism table in JSON.
        file: PathBuf,
        /// Number of sampled utility functions per agent and truthful order.
        #[arg(long)]
        audit: Option<usize>,
        /// Seed for the utility sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for a mechanism separating local and global degrees.
    Counterexample {
        /// Gap exponent, a rational in (0, 2).
        #[arg(long)]
        epsilon: String,
        /// Largest s to scan.
        #[arg(long, default_value = "1000000")]
        budget: String,
    },
    /// Follow the straight path between two utility functions.
    Transition {
        /// Order of the starting utility, e.g. "a>b>c".
        #[arg(long = "true", value_name = "ORDER")]
        truthful: String,
        /// Order of the target utility.
        #[arg(long = "false", value_name = "ORDER")]
        misreport: String,
        /// Bounded-indifference level.
        #[arg(long, default_value = "1/10")]
        r: String,
        /// Start from the geometric utility at r² instead of r.
        #[arg(long)]
        urbi_sq: bool,
    },
    /// Write a reference mechanism table.
    Zoo {
        #[arg(long, value_enum)]
        mechanism: ZooKind,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Comma-separated capacities; defaults to ceil(n/m) for every object.
        #[arg(long)]
        q: Option<String>,
        /// Parameter s of the four-object family.
        #[arg(long)]
        s: Option<String>,
        /// Parameter alpha of the four-object family, or "mid" for the
        /// midpoint of its local interval.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ZooKind {
    Rsd,
    Ps,
    Phi,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let outcome: Outcome = match &cli.command {
        Command::Analyze { file, audit, seed } => commands::analyze(file, *audit, *seed),
        Command::Counterexample { epsilon, budget } => commands::counterexample(epsilon, budget),
        Command::Transition {
            truthful,
            misreport,
            r,
            urbi_sq,
        } => commands::transition(truthful, misreport, r, *urbi_sq),
        Command::Zoo {
            mechanism,
            n,
            m,
            q,
            s,
            alpha,
            out,
        } => commands::zoo(*mechanism, *n, *m, q.as_deref(), s.as_deref(), alpha.as_deref(), out),
    };
    let envelope = ReportEnvelope::new(echo, outcome);
    envelope.print(cli.json);
    ExitCode::from(envelope.exit_code())
}
