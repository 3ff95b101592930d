//! `ctxbias` command-line tool.
//!
//! Exit status is 0 on success, 1 for bad input data and 2 for inconsistent
//! configuration (flags, manifests, vocabularies).

mod commands;
mod fst_cmd;
mod io;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::io::CliError;

#[derive(Debug, Parser)]
#[command(name = "ctxbias", version, about = "Contextual biasing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Subword model training and segmentation.
    #[command(subcommand)]
    Bpe(BpeCommand),
    /// Bias transducer construction.
    #[command(subcommand)]
    Bias(BiasCommand),
    /// Rewrite words or phrases as in-vocabulary words with the same sound.
    Map(commands::MapArgs),
    /// Insert class tags into references using tagged recognizer output.
    Relabel(commands::RelabelArgs),
    /// Beam search with optional class transducers.
    Decode(commands::DecodeArgs),
    /// Word error rate report, overall and by bias-phrase count.
    Eval(commands::EvalArgs),
    /// Transducer debugging tools over AT&T text files.
    #[command(subcommand)]
    Fst(fst_cmd::FstCommand),
}

#[derive(Debug, Subcommand)]
enum BpeCommand {
    /// Learn merges from a text corpus.
    Learn(commands::BpeLearnArgs),
    /// Segment a corpus with a learned model.
    Apply(commands::BpeApplyArgs),
}

#[derive(Debug, Subcommand)]
enum BiasCommand {
    /// Compile a phrase list into a bias transducer.
    Build(commands::BiasBuildArgs),
}

/// Output destination shared by most subcommands.
#[derive(Debug, Args)]
pub struct OutArg {
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub out: Option<std::path::PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bpe(BpeCommand::Learn(a)) => commands::bpe_learn(a),
        Command::Bpe(BpeCommand::Apply(a)) => commands::bpe_apply(a),
        Command::Bias(BiasCommand::Build(a)) => commands::bias_build(a),
        Command::Map(a) => commands::map(a),
        Command::Relabel(a) => commands::relabel(a),
        Command::Decode(a) => commands::decode(a),
        Command::Eval(a) => commands::eval(a),
        Command::Fst(c) => fst_cmd::run(c),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
