//! `negdep`: Simes, BH and e-value merging under negative dependence, and
//! the Monte Carlo scenarios that check their bounds.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 input error,
//! 3 domain error.

mod commands;
mod error;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Correction, EMethod, MergeKind, SimulateArgs, Which};
use crate::error::CliResult;

#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Merge p-values with the Simes function or one of its variants.
    Merge {
        #[arg(value_enum)]
        kind: MergeKind,
        /// CSV or JSON file with a `p` column (plus `weight` or `group`).
        input: PathBuf,
        /// Level for the rejection decision and the bound report.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        json: bool,
    },
    /// Benjamini–Hochberg, optionally with the BY correction or on groups.
    Bh {
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Correction::None)]
        correction: Correction,
        /// Run BH on the Simes value of each group in the `group` column.
        #[arg(long)]
        groups: bool,
        #[arg(long)]
        json: bool,
    },
    /// Merge e-values.
    MergeE {
        /// CSV or JSON file with an `e` column.
        input: PathBuf,
        /// product, lambda, ustat:K, average or convex.
        #[arg(long)]
        method: EMethod,
        /// Bets for `lambda`: one value for all, or one per e-value.
        #[arg(long = "lambda", value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Convex term `i,j,...:weight` with 1-based indices; repeatable.
        #[arg(long = "term", value_parser = commands::parse_term)]
        terms: Vec<(Vec<usize>, f64)>,
        #[arg(long)]
        json: bool,
    },
    /// Type-1 error and FDR bounds under negative dependence.
    Bounds {
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long = "k", default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
        /// Emit the two reference tables as CSV instead.
        #[arg(long)]
        paper_tables: bool,
        /// With --paper-tables, write table1.csv and table2.csv here.
        #[arg(long, requires = "paper_tables")]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run a verification scenario or an experiment file.
    Simulate {
        #[arg(long, conflicts_with = "spec", required_unless_present_any = ["spec", "list"])]
        scenario: Option<String>,
        /// JSON experiment description.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Replications per check; defaults to each scenario's own count.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Worker threads; results do not depend on it.
        #[arg(long, env = "NEGDEP_THREADS")]
        threads: Option<usize>,
        /// JSON Lines output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// List the scenarios and exit.
        #[arg(long)]
        list: bool,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Merge {
            kind,
            input,
            alpha,
            json,
        } => commands::merge(kind, &input, alpha, json),
        Command::Bh {
            input,
            alpha,
            correction,
            groups,
            json,
        } => commands::bh_cmd(&input, alpha, correction, groups, json),
        Command::MergeE {
            input,
            method,
            lambdas,
            terms,
            json,
        } => commands::merge_e(&input, method, &lambdas, &terms, json),
        Command::Bounds {
            alpha,
            k,
            which,
            paper_tables,
            out_dir,
            json,
        } => {
            if paper_tables {
                commands::paper_tables(out_dir.as_deref())
            } else {
                commands::bounds(alpha, k, which, json)
            }
        }
        Command::Simulate {
            scenario,
            spec,
            reps,
            seed,
            threads,
            out,
            csv,
            list,
        } => {
            if list {
                commands::list_scenarios();
                return Ok(());
            }
            commands::simulate(SimulateArgs {
                scenario: scenario.as_deref(),
                spec: spec.as_deref(),
                reps,
                seed,
                threads,
                out: out.as_deref(),
                csv: csv.as_deref(),
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
