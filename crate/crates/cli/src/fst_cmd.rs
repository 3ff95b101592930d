use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use ctxbias_wfst::text::{read_fst, read_symbols, write_fst};
use ctxbias_wfst::{compose, determinize, minimize, shortest_path, Fst, SymbolTable};

use crate::io::{open, output, CliResult};
use crate::OutArg;

#[derive(Debug, Subcommand)]
pub enum FstCommand {
    /// Parse and print a transducer in canonical form.
    Print(Single),
    /// Compose two transducers; the first one's output table is the
    /// second one's input table.
    Compose(ComposeArgs),
    /// Determinize an acyclic transducer.
    Determinize(Single),
    /// Minimize a deterministic acyclic transducer.
    Minimize(Single),
    /// Extract the single best path.
    ShortestPath(Single),
}

#[derive(Debug, Args)]
pub struct Tables {
    /// Input symbol table, `symbol<TAB>id`.
    #[arg(long)]
    pub isymbols: PathBuf,
    /// Output symbol table; defaults to the input table.
    #[arg(long)]
    pub osymbols: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Single {
    /// AT&T text transducer.
    pub fst: PathBuf,
    #[command(flatten)]
    pub tables: Tables,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Input symbols of the first transducer.
    #[arg(long)]
    pub isymbols: PathBuf,
    /// Symbols between the two transducers.
    #[arg(long)]
    pub midsymbols: PathBuf,
    /// Output symbols of the second transducer.
    #[arg(long)]
    pub osymbols: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

fn symbols(path: &PathBuf) -> CliResult<SymbolTable> {
    Ok(read_symbols(open(path)?)?)
}

fn load(path: &PathBuf, isyms: &SymbolTable, osyms: &SymbolTable) -> CliResult<Fst> {
    Ok(read_fst(open(path)?, isyms, osyms)?)
}

fn load_single(a: &Single) -> CliResult<Fst> {
    let isyms = symbols(&a.tables.isymbols)?;
    let osyms = match &a.tables.osymbols {
        Some(p) => symbols(p)?,
        None => isyms.clone(),
    };
    load(&a.fst, &isyms, &osyms)
}

fn emit(fst: &Fst, out: &OutArg) -> CliResult<()> {
    let mut w = output(out.out.as_deref())?;
    write_fst(fst, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn run(cmd: FstCommand) -> CliResult<()> {
    match cmd {
        FstCommand::Print(a) => emit(&load_single(&a)?, &a.out),
        FstCommand::Determinize(a) => emit(&determinize(&load_single(&a)?)?, &a.out),
        FstCommand::Minimize(a) => emit(&minimize(&load_single(&a)?)?, &a.out),
        FstCommand::ShortestPath(a) => emit(&shortest_path(&load_single(&a)?)?.to_fst(), &a.out),
        FstCommand::Compose(a) => {
            let (i, m, o) = (symbols(&a.isymbols)?, symbols(&a.midsymbols)?, symbols(&a.osymbols)?);
            let first = load(&a.first, &i, &m)?;
            let second = load(&a.second, &m, &o)?;
            emit(&compose(&first, &second)?, &a.out)
        }
    }
}
