//! AT&T-style text serialization.
//!
//! Arcs are written one per line as `src\tdst\tisym\tosym\tweight`, final
//! states as `state\tweight`, weights with six decimals. The start state's
//! lines come first. Symbol tables are written as `symbol\tid` lines with
//! `<eps>\t0` first.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{FstError, Result};
use crate::fst::{Arc, Fst, FstBuilder, StateId};
use crate::symbols::{SymbolTable, EPSILON_SYMBOL};
use crate::weight::Weight;

pub fn format_weight(w: Weight) -> String {
    if w.is_zero() {
        return "Infinity".to_string();
    }
    let s = format!("{:.6}", w.value());
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn parse_weight(s: &str, line: usize) -> Result<Weight> {
    let v = match s {
        "Infinity" | "inf" | "Inf" => f64::INFINITY,
        _ => s.parse::<f64>().map_err(|_| FstError::Parse {
            line,
            msg: format!("bad weight {s:?}"),
        })?,
    };
    Weight::try_new(v).ok_or_else(|| FstError::Parse {
        line,
        msg: format!("invalid weight {s:?}"),
    })
}

pub fn write_fst<W: Write>(fst: &Fst, mut w: W) -> Result<()> {
    let Some(start) = fst.start() else {
        return Ok(());
    };
    let order = std::iter::once(start).chain(fst.states().filter(|&q| q != start));
    for q in order {
        for arc in fst.arcs(q) {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                q,
                arc.nextstate,
                fst.isymbols().symbol(arc.ilabel).unwrap_or("<?>"),
                fst.osymbols().symbol(arc.olabel).unwrap_or("<?>"),
                format_weight(arc.weight)
            )?;
        }
        if fst.is_final(q) {
            writeln!(w, "{}\t{}", q, format_weight(fst.final_weight(q)))?;
        }
    }
    Ok(())
}

pub fn fst_to_string(fst: &Fst) -> String {
    let mut buf = Vec::new();
    write_fst(fst, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 symbols")
}

/// Parses the text format. The first line's source state is the start
/// state. Arc lines may omit the weight (defaults to 0) and final lines may
/// omit it too.
pub fn read_fst<R: BufRead>(r: R, isymbols: &SymbolTable, osymbols: &SymbolTable) -> Result<Fst> {
    let mut b = FstBuilder::new(isymbols.clone(), osymbols.clone());
    let mut start: Option<StateId> = None;
    let ensure = |b: &mut FstBuilder, q: StateId| {
        while b.num_states() <= q {
            b.add_state();
        }
    };
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let state = |s: &str| -> Result<StateId> {
            s.trim().parse::<StateId>().map_err(|_| FstError::Parse {
                line: lineno,
                msg: format!("bad state id {s:?}"),
            })
        };
        match fields.len() {
            1 | 2 => {
                let q = state(fields[0])?;
                ensure(&mut b, q);
                start.get_or_insert(q);
                let w = match fields.get(1) {
                    Some(s) => parse_weight(s.trim(), lineno)?,
                    None => Weight::ONE,
                };
                b.set_final(q, w);
            }
            4 | 5 => {
                let src = state(fields[0])?;
                let dst = state(fields[1])?;
                ensure(&mut b, src.max(dst));
                start.get_or_insert(src);
                let ilabel = isymbols.id(fields[2]).ok_or_else(|| FstError::Parse {
                    line: lineno,
                    msg: format!("unknown input symbol {:?}", fields[2]),
                })?;
                let olabel = osymbols.id(fields[3]).ok_or_else(|| FstError::Parse {
                    line: lineno,
                    msg: format!("unknown output symbol {:?}", fields[3]),
                })?;
                let w = match fields.get(4) {
                    Some(s) => parse_weight(s.trim(), lineno)?,
                    None => Weight::ONE,
                };
                b.add_arc(src, Arc::new(ilabel, olabel, w, dst));
            }
            n => {
                return Err(FstError::Parse {
                    line: lineno,
                    msg: format!("expected 1, 2, 4 or 5 fields, got {n}"),
                })
            }
        }
    }
    if let Some(s) = start {
        b.set_start(s);
    }
    b.build()
}

pub fn write_symbols<W: Write>(table: &SymbolTable, mut w: W) -> Result<()> {
    for (id, sym) in table.iter() {
        writeln!(w, "{sym}\t{id}")?;
    }
    Ok(())
}

/// Parses `symbol\tid` lines. Ids must be dense from 0 and `<eps>` must be
/// 0; lines may appear in any order.
pub fn read_symbols<R: BufRead>(r: R) -> Result<SymbolTable> {
    let mut by_id: HashMap<u32, String> = HashMap::new();
    let mut seen: HashMap<String, u32> = HashMap::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.rsplitn(2, |c: char| c == '\t' || c == ' ');
        let id = parts.next().unwrap_or("");
        let sym = parts.next().ok_or_else(|| FstError::Parse {
            line: lineno,
            msg: "expected `symbol<TAB>id`".into(),
        })?;
        let id: u32 = id.trim().parse().map_err(|_| FstError::Parse {
            line: lineno,
            msg: format!("bad symbol id {id:?}"),
        })?;
        if by_id.insert(id, sym.to_string()).is_some() || seen.insert(sym.to_string(), id).is_some() {
            return Err(FstError::Parse {
                line: lineno,
                msg: format!("duplicate symbol or id: {sym:?} {id}"),
            });
        }
    }
    if by_id.get(&0).map(String::as_str) != Some(EPSILON_SYMBOL) {
        return Err(FstError::Parse {
            line: 0,
            msg: "symbol table must map <eps> to 0".into(),
        });
    }
    let mut table = SymbolTable::new();
    for id in 1..by_id.len() as u32 {
        let sym = by_id.get(&id).ok_or_else(|| FstError::Parse {
            line: 0,
            msg: format!("symbol ids are not dense: missing {id}"),
        })?;
        table.add(sym);
    }
    Ok(table)
}

pub fn symbols_to_string(table: &SymbolTable) -> String {
    let mut buf = Vec::new();
    write_symbols(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 symbols")
}
