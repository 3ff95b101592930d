use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::scorer::{Scorer, TokenId, Vocab, EOS};
use crate::error::{Error, Result};

/// Exact lookup scorer. Histories without a row get the uniform
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TableScorer {
    vocab: Vocab,
    rows: BTreeMap<Vec<TokenId>, Vec<f64>>,
}

const ROW_TOLERANCE: f64 = 1e-6;

impl TableScorer {
    /// Rows map a history to `(token, log prob)` entries; unlisted tokens
    /// get probability 0.
    pub fn new(vocab: Vocab, rows: BTreeMap<Vec<String>, Vec<(String, f64)>>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (history, entries) in rows {
            let key = vocab.ids(&history)?;
            let mut dist = vec![f64::NEG_INFINITY; vocab.len()];
            for (tok, lp) in entries {
                let id = vocab.ids(&[tok])?[0];
                if lp.is_nan() || lp > 0.0 {
                    return Err(Error::Config(format!("invalid log probability {lp}")));
                }
                dist[id as usize] = lp;
            }
            let mass: f64 = dist.iter().map(|x| x.exp()).sum();
            if (mass - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Config(format!(
                    "row for history {:?} sums to {mass}",
                    history.join(" ")
                )));
            }
            out.insert(key, dist);
        }
        Ok(TableScorer { vocab, rows: out })
    }

    /// Reads `history<TAB>token<TAB>logprob` lines; the history is a
    /// space-separated token list, empty at the sequence start. Without an
    /// explicit vocabulary, every token in the file plus `</s>` is used.
    pub fn read<R: BufRead>(r: R, source_name: &str, vocab: Option<Vocab>) -> Result<Self> {
        let mut rows: BTreeMap<Vec<String>, Vec<(String, f64)>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::format(source_name, i + 1, msg);
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad("expected `history<TAB>token<TAB>logprob`"));
            }
            let history: Vec<String> = f[0].split_whitespace().map(str::to_string).collect();
            let token = f[1].trim().to_string();
            let lp: f64 = f[2].trim().parse().map_err(|_| bad("bad log probability"))?;
            seen.extend(history.iter().cloned());
            seen.insert(token.clone());
            rows.entry(history).or_default().push((token, lp));
        }
        let vocab = match vocab {
            Some(v) => v,
            None => {
                seen.insert(EOS.to_string());
                Vocab::new(seen)?
            }
        };
        Self::new(vocab, rows).map_err(|e| match e {
            Error::Config(msg) => Error::format(source_name, 0, msg),
            e => e,
        })
    }

    /// Writes every row; reading the output back gives identical scores.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (history, dist) in &self.rows {
            let h: Vec<&str> = history.iter().map(|&t| self.vocab.token(t)).collect();
            for (id, lp) in dist.iter().enumerate() {
                if *lp > f64::NEG_INFINITY {
                    writeln!(w, "{}\t{}\t{}", h.join(" "), self.vocab.token(id as TokenId), lp)?;
                }
            }
        }
        Ok(())
    }
}

impl Scorer for TableScorer {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn log_probs(&self, _utt: &str, history: &[TokenId]) -> Result<Vec<f64>> {
        Ok(match self.rows.get(history) {
            Some(d) => d.clone(),
            None => vec![-(self.vocab.len() as f64).ln(); self.vocab.len()],
        })
    }
}
