//! `utt_id<TAB>text` corpora.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    pub words: Vec<String>,
}

impl Utterance {
    pub fn new(id: impl Into<String>, text: &str) -> Self {
        Utterance {
            id: id.into(),
            words: text.split_whitespace().map(str::to_string).collect(),
        }
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

pub fn read_corpus<R: BufRead>(r: R, source_name: &str) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(source_name, i + 1, "expected `utt_id<TAB>text`"))?;
        out.push(Utterance::new(id.trim(), text));
    }
    Ok(out)
}

pub fn write_corpus<W: Write>(utts: &[Utterance], mut w: W) -> Result<()> {
    for u in utts {
        writeln!(w, "{}\t{}", u.id, u.text())?;
    }
    Ok(())
}

pub fn index_corpus(utts: &[Utterance]) -> BTreeMap<&str, &Utterance> {
    utts.iter().map(|u| (u.id.as_str(), u)).collect()
}
