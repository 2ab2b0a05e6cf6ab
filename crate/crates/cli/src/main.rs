mod args;
mod commands;
mod config;
mod exit;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::commands::{EvalArgs, IngestArgs, RankArgs, RebalanceArgs, SweepArgs, SynthArgs, TopArgs};
use crate::output::Run;

/// Rank items in a user–item rating network and correct the ranking for
/// item age.
///
/// Options can also come from a `--config FILE` of `key = value` lines;
/// flags given on the command line take precedence. Relative input paths
/// are resolved against $TBRANK_DATA_DIR when it is set.
#[derive(Debug, Parser)]
#[command(name = "tbrank", version, args_override_self = true)]
struct Cli {
    /// Read default options from this file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, merge and filter interactions and write them back cleaned.
    Ingest(IngestArgs),
    /// Score every item with one algorithm.
    Rank(RankArgs),
    /// Rebalance an existing score file by release-time windows.
    Rebalance(RebalanceArgs),
    /// Compute metrics against a ground-truth list.
    Eval(EvalArgs),
    /// Imbalance of the rebalanced ranking across window sizes.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset with planted ground truth.
    Synth(SynthArgs),
    /// Print the best-ranked items.
    Top(TopArgs),
}

fn dispatch(cli: Cli, config: Option<PathBuf>) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(a, Run::start("ingest", config)),
        Command::Rank(a) => commands::rank(a, Run::start("rank", config)),
        Command::Rebalance(a) => commands::rebalance(a, Run::start("rebalance", config)),
        Command::Eval(a) => commands::eval(a, Run::start("eval", config)),
        Command::Sweep(a) => commands::sweep(a, Run::start("sweep", config)),
        Command::Synth(a) => commands::synth(a, Run::start("synth", config)),
        Command::Top(a) => commands::top(a, Run::start("top", config)),
    }
}

/// The error and its causes on one line, leaving out causes that the
/// message before them already quotes.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn fail(err: &anyhow::Error) -> ExitCode {
    eprintln!("error: {}", describe(err));
    ExitCode::from(exit::classify(err) as u8)
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let (argv, config) = match config::expand_config(argv) {
        Ok(x) => x,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::ExitCode::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli, config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
