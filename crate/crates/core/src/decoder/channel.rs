use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scorer::{normalize_log, Scorer, TokenId, Vocab, EOS};
use crate::error::{Error, Result};
use crate::tags::is_tag;

/// Intended row for tokens emitted without acoustic content (class tags).
/// Its entries are per-tag emission probabilities and need not sum to one.
pub const SKIP_ROW: &str = "<eps>";

const ROW_TOLERANCE: f64 = 1e-6;

/// `intended → emitted → probability`. Intended tokens without a row are
/// transmitted unchanged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfusionTable {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ConfusionTable {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(rows: BTreeMap<String, BTreeMap<String, f64>>) -> Result<Self> {
        for (intended, row) in &rows {
            if row.values().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::Config(format!("negative probability in row {intended:?}")));
            }
            if intended == SKIP_ROW {
                if row.values().any(|p| *p > 1.0) {
                    return Err(Error::Config(format!("tag emission above 1 in row {SKIP_ROW:?}")));
                }
                continue;
            }
            let mass: f64 = row.values().sum();
            if (mass - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Config(format!("confusion row {intended:?} sums to {mass}")));
            }
        }
        Ok(ConfusionTable { rows })
    }

    pub fn row(&self, intended: &str) -> Option<&BTreeMap<String, f64>> {
        self.rows.get(intended)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, f64>)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Reads `intended<TAB>emitted<TAB>prob` lines.
    pub fn read<R: BufRead>(r: R, source_name: &str) -> Result<Self> {
        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::format(source_name, i + 1, "expected `intended<TAB>emitted<TAB>prob`");
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 3 {
                return Err(bad());
            }
            let p: f64 = f[2].parse().map_err(|_| bad())?;
            *rows.entry(f[0].to_string()).or_default().entry(f[1].to_string()).or_insert(0.0) += p;
        }
        Self::new(rows).map_err(|e| match e {
            Error::Config(msg) => Error::format(source_name, 0, msg),
            e => e,
        })
    }
}

const BOS: TokenId = TokenId::MAX;

/// Add-one smoothed n-gram over token ids. A history whose longest context
/// was never seen backs off to the longest seen one.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    vocab_size: usize,
    counts: HashMap<Vec<TokenId>, (u64, HashMap<TokenId, u64>)>,
}

impl NgramModel {
    /// Each sequence is padded with a start symbol and closed with `eos`.
    pub fn train(sequences: &[Vec<TokenId>], order: usize, vocab_size: usize, eos: TokenId) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("n-gram order must be at least 1".into()));
        }
        if sequences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut counts: HashMap<Vec<TokenId>, (u64, HashMap<TokenId, u64>)> = HashMap::new();
        for seq in sequences {
            let mut padded = vec![BOS];
            padded.extend(seq);
            padded.push(eos);
            for i in 1..padded.len() {
                for k in 0..order.min(i + 1) {
                    let ctx = padded[i - k..i].to_vec();
                    let e = counts.entry(ctx).or_default();
                    e.0 += 1;
                    *e.1.entry(padded[i]).or_default() += 1;
                }
            }
        }
        Ok(NgramModel {
            order,
            vocab_size,
            counts,
        })
    }

    /// Natural-log distribution over the vocabulary after `history`.
    pub fn log_probs(&self, history: &[TokenId]) -> Vec<f64> {
        let mut padded = Vec::with_capacity(self.order);
        let keep = (self.order - 1).min(history.len() + 1);
        if keep > history.len() {
            padded.push(BOS);
            padded.extend(history);
        } else {
            padded.extend(&history[history.len() - keep..]);
        }
        let v = self.vocab_size as f64;
        for start in 0..=padded.len() {
            if let Some((total, row)) = self.counts.get(&padded[start..]) {
                let denom = (*total as f64 + v).ln();
                let mut out = vec![-denom; self.vocab_size];
                for (&tok, &c) in row {
                    out[tok as usize] = ((c + 1) as f64).ln() - denom;
                }
                return out;
            }
        }
        vec![-v.ln(); self.vocab_size]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub order: usize,
    /// Exponent on the n-gram probability; 0 makes the prior flat.
    pub lm_weight: f64,
    /// Emission probability of anything the confusion table does not list.
    pub floor: f64,
    /// Standard deviation of the per-position Gaussian added to log
    /// emissions.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            order: 3,
            lm_weight: 1.0,
            floor: 1e-4,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

/// Simulated recognizer: `P_b(y | h, utt) ∝ emission(y | r_pos) · P_lm(y | h)^w`
/// where `r_pos` is the utterance's intended token at the position reached
/// by the non-tag tokens of `h` (end of sequence once past the reference).
/// Tags are emitted through the [`SKIP_ROW`] of the confusion table and do
/// not advance the position.
#[derive(Debug, Clone)]
pub struct NoisyChannelScorer {
    vocab: Vocab,
    eos: TokenId,
    tag: Vec<bool>,
    ngram: NgramModel,
    references: HashMap<String, Vec<TokenId>>,
    emissions: HashMap<TokenId, Vec<f64>>,
    skip: Vec<f64>,
    log_floor: f64,
    cfg: ChannelConfig,
}

impl NoisyChannelScorer {
    /// `training` holds tagged token sequences for the n-gram prior;
    /// `references` holds each utterance's intended, untagged tokens.
    pub fn new(
        vocab: Vocab,
        training: &[Vec<String>],
        references: &BTreeMap<String, Vec<String>>,
        confusion: &ConfusionTable,
        cfg: ChannelConfig,
    ) -> Result<Self> {
        if !(cfg.floor > 0.0 && cfg.floor < 1.0) {
            return Err(Error::Config("emission floor must lie in (0, 1)".into()));
        }
        if !cfg.lm_weight.is_finite() || !(cfg.noise_std >= 0.0) || !cfg.noise_std.is_finite() {
            return Err(Error::Config("invalid channel configuration".into()));
        }
        let eos = vocab.eos()?;
        let tag: Vec<bool> = vocab.tokens().iter().map(|t| is_tag(t)).collect();
        let seqs = training
            .iter()
            .map(|s| vocab.ids(s))
            .collect::<Result<Vec<_>>>()?;
        let ngram = NgramModel::train(&seqs, cfg.order, vocab.len(), eos)?;

        let mut refs = HashMap::new();
        for (utt, toks) in references {
            if let Some(t) = toks.iter().find(|t| is_tag(t) || *t == EOS) {
                return Err(Error::Config(format!("reference of {utt:?} contains {t:?}")));
            }
            refs.insert(utt.clone(), vocab.ids(toks)?);
        }

        let log_floor = cfg.floor.ln();
        let row_to_logs = |row: &BTreeMap<String, f64>| -> Result<Vec<f64>> {
            let mut out = vec![log_floor; vocab.len()];
            for (tok, p) in row {
                let id = vocab.ids(&[tok])?[0];
                out[id as usize] = p.max(cfg.floor).ln();
            }
            Ok(out)
        };
        let mut emissions = HashMap::new();
        let mut skip = vec![log_floor; vocab.len()];
        for (intended, row) in confusion.rows() {
            if intended == SKIP_ROW {
                skip = row_to_logs(row)?;
            } else {
                emissions.insert(vocab.ids(&[intended])?[0], row_to_logs(row)?);
            }
        }
        Ok(NoisyChannelScorer {
            vocab,
            eos,
            tag,
            ngram,
            references: refs,
            emissions,
            skip,
            log_floor,
            cfg,
        })
    }

    pub fn ngram(&self) -> &NgramModel {
        &self.ngram
    }

    /// Intended token at the position reached by `history`.
    pub fn intended(&self, utt: &str, history: &[TokenId]) -> Result<TokenId> {
        let reference = self
            .references
            .get(utt)
            .ok_or_else(|| Error::MissingReference(utt.to_string()))?;
        let pos = history.iter().filter(|&&t| !self.tag[t as usize]).count();
        Ok(reference.get(pos).copied().unwrap_or(self.eos))
    }

    fn noise(&self, utt: &str, pos: usize) -> Vec<f64> {
        let mut h = fnv1a(&self.cfg.seed.to_le_bytes(), FNV_OFFSET);
        h = fnv1a(utt.as_bytes(), h);
        h = fnv1a(&(pos as u64).to_le_bytes(), h);
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let normal = Normal::new(0.0, self.cfg.noise_std).expect("finite std");
        (0..self.vocab.len()).map(|_| normal.sample(&mut rng)).collect()
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Scorer for NoisyChannelScorer {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn log_probs(&self, utt: &str, history: &[TokenId]) -> Result<Vec<f64>> {
        let intended = self.intended(utt, history)?;
        let pos = history.iter().filter(|&&t| !self.tag[t as usize]).count();
        let row = self.emissions.get(&intended);
        let lm = (self.cfg.lm_weight != 0.0).then(|| self.ngram.log_probs(history));
        let noise = (self.cfg.noise_std > 0.0).then(|| self.noise(utt, pos));
        let mut out: Vec<f64> = (0..self.vocab.len())
            .map(|y| {
                let mut s = if self.tag[y] {
                    self.skip[y]
                } else {
                    match row {
                        Some(r) => r[y],
                        None if y as TokenId == intended => 0.0,
                        None => self.log_floor,
                    }
                };
                if let Some(lm) = &lm {
                    s += self.cfg.lm_weight * lm[y];
                }
                if let Some(n) = &noise {
                    s += n[y];
                }
                s
            })
            .collect();
        normalize_log(&mut out);
        Ok(out)
    }
}
