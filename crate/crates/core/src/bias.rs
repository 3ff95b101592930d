//! Contextual bias transducers.
//!
//! A class's phrase list becomes one weighted transducer from subword
//! sequences to word sequences. Phrase `i` with frequency `f_i` costs
//! `C_i = -ln(f_i / Σ f_j)`, spread evenly over the `M` arcs of its path,
//! and the union of all paths is determinized and minimized.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use ctxbias_wfst::{determinize, minimize, Arc, Fst, FstBuilder, SymbolTable, Weight, EPSILON};

use crate::bpe::BpeModel;
use crate::error::{Error, Result};
use crate::tags::{enter_tag, exit_tag, is_tag};

/// `-ln(f_i / Σ f_j)`.
pub fn phrase_cost(frequencies: &[f64], i: usize) -> Result<Weight> {
    if let Some(&bad) = frequencies.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
        return Err(Error::NonPositiveFrequency(bad));
    }
    let total: f64 = frequencies.iter().sum();
    let f = *frequencies
        .get(i)
        .ok_or_else(|| Error::Config(format!("phrase index {i} out of range")))?;
    Ok(Weight::new(-(f / total).ln()))
}

/// Per-arc share of a phrase cost: `C / M`.
pub fn split_cost(cost: Weight, arcs: usize) -> Result<Weight> {
    if arcs == 0 {
        return Err(Error::ZeroArcCount);
    }
    Ok(Weight::new(cost.value() / arcs as f64))
}

/// Subword realization of a phrase, one token segment per phrase word.
/// Segment `k` spells word `k` itself or, for a mapped alternative, the
/// words it was mapped to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubwordPath {
    pub segments: Vec<Vec<String>>,
}

impl SubwordPath {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().flatten().map(String::as_str)
    }

    pub fn num_tokens(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasPhrase {
    pub words: Vec<String>,
    pub frequency: f64,
    /// Empty means "segment the words with the model at build time".
    pub subword_paths: Vec<SubwordPath>,
}

impl BiasPhrase {
    pub fn new(text: &str, frequency: f64) -> Self {
        BiasPhrase {
            words: text.split_whitespace().map(str::to_string).collect(),
            frequency,
            subword_paths: Vec::new(),
        }
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    /// The path spelling the phrase's own words.
    pub fn original_path(&self, bpe: &BpeModel) -> SubwordPath {
        SubwordPath {
            segments: self.words.iter().map(|w| bpe.segment_word(w)).collect(),
        }
    }

    /// Explicit paths, or the original spelling when none were set.
    pub fn paths(&self, bpe: &BpeModel) -> Vec<SubwordPath> {
        if self.subword_paths.is_empty() {
            vec![self.original_path(bpe)]
        } else {
            self.subword_paths.clone()
        }
    }
}

/// Gives every phrase containing a mapped word one extra path in which the
/// mapped words are spelled by their mapping's subwords. Output words stay
/// the original ones.
pub fn attach_mapped_alternatives(
    phrases: &[BiasPhrase],
    mapping: &BTreeMap<String, Vec<String>>,
    bpe: &BpeModel,
) -> Vec<BiasPhrase> {
    phrases
        .iter()
        .map(|p| {
            let mut out = p.clone();
            if let Some(alt) = mapped_path(p, mapping, bpe) {
                let mut paths = p.paths(bpe);
                if !paths.contains(&alt) {
                    paths.push(alt);
                }
                out.subword_paths = paths;
            }
            out
        })
        .collect()
}

/// Like [`attach_mapped_alternatives`] but the mapped spelling replaces the
/// original one.
pub fn replace_with_mapped(
    phrases: &[BiasPhrase],
    mapping: &BTreeMap<String, Vec<String>>,
    bpe: &BpeModel,
) -> Vec<BiasPhrase> {
    phrases
        .iter()
        .map(|p| {
            let mut out = p.clone();
            if let Some(alt) = mapped_path(p, mapping, bpe) {
                out.subword_paths = vec![alt];
            }
            out
        })
        .collect()
}

fn mapped_path(
    phrase: &BiasPhrase,
    mapping: &BTreeMap<String, Vec<String>>,
    bpe: &BpeModel,
) -> Option<SubwordPath> {
    let mut changed = false;
    let segments = phrase
        .words
        .iter()
        .map(|w| match mapping.get(w) {
            Some(seq) if !seq.is_empty() && (seq.len() != 1 || &seq[0] != w) => {
                changed = true;
                bpe.apply_words(seq)
            }
            _ => bpe.segment_word(w),
        })
        .collect();
    changed.then_some(SubwordPath { segments })
}

/// Phrases with identical words are merged (frequencies summed, paths
/// unioned) and every path is checked against the model.
fn normalize_phrases(phrases: &[BiasPhrase], bpe: &BpeModel) -> Result<Vec<(Vec<String>, f64, Vec<SubwordPath>)>> {
    if phrases.is_empty() {
        return Err(Error::EmptyPhraseList);
    }
    let mut merged: BTreeMap<Vec<String>, (f64, BTreeSet<SubwordPath>)> = BTreeMap::new();
    let mut order = Vec::new();
    for p in phrases {
        let text = p.text();
        let fail = |reason: String| Error::Untokenizable {
            phrase: text.clone(),
            reason,
        };
        if p.words.is_empty() {
            return Err(fail("no words".into()));
        }
        if !(p.frequency > 0.0) || !p.frequency.is_finite() {
            return Err(Error::NonPositiveFrequency(p.frequency));
        }
        if let Some(w) = p.words.iter().find(|w| is_tag(w) || bpe.is_reserved(w)) {
            return Err(fail(format!("{w:?} is a reserved tag")));
        }
        let paths = p.paths(bpe);
        for path in &paths {
            if path.segments.len() != p.words.len() || path.segments.iter().any(Vec::is_empty) {
                return Err(fail("subword path does not cover every word".into()));
            }
            if let Some(t) = path.tokens().find(|t| !bpe.knows_token(t) || bpe.is_reserved(t)) {
                return Err(fail(format!("token {t:?} is not in the subword vocabulary")));
            }
        }
        let entry = merged.entry(p.words.clone()).or_insert_with(|| {
            order.push(p.words.clone());
            (0.0, BTreeSet::new())
        });
        entry.0 += p.frequency;
        entry.1.extend(paths);
    }
    Ok(order
        .into_iter()
        .map(|words| {
            let (f, paths) = merged.remove(&words).expect("merged phrase");
            (words, f, paths.into_iter().collect())
        })
        .collect())
}

/// The union of one linear path per (phrase, subword path), before
/// determinization. Each word is emitted on the first arc of its segment.
pub fn build_phrase_union(phrases: &[BiasPhrase], bpe: &BpeModel) -> Result<Fst> {
    let phrases = normalize_phrases(phrases, bpe)?;
    let isyms = SymbolTable::from_symbols(bpe.token_inventory());
    let words: BTreeSet<&String> = phrases.iter().flat_map(|(w, _, _)| w).collect();
    let osyms = SymbolTable::from_symbols(words);
    let freqs: Vec<f64> = phrases.iter().map(|(_, f, _)| *f).collect();

    let mut b = FstBuilder::new(isyms.clone(), osyms.clone());
    let start = b.add_state();
    b.set_start(start);
    for (i, (words, _, paths)) in phrases.iter().enumerate() {
        let cost = phrase_cost(&freqs, i)?;
        for path in paths {
            let per_arc = split_cost(cost, path.num_tokens())?;
            let mut q = start;
            for (word, segment) in words.iter().zip(&path.segments) {
                for (k, tok) in segment.iter().enumerate() {
                    let next = b.add_state();
                    let ilabel = isyms.id(tok).expect("validated token");
                    let olabel = if k == 0 {
                        osyms.id(word).expect("collected word")
                    } else {
                        EPSILON
                    };
                    b.add_arc(q, Arc::new(ilabel, olabel, per_arc, next));
                    q = next;
                }
            }
            b.set_final(q, Weight::ONE);
        }
    }
    Ok(b.build()?)
}

/// `Min(Det(T))` for the phrase union `T`.
pub fn build_bias_fst(phrases: &[BiasPhrase], bpe: &BpeModel) -> Result<Fst> {
    let union = build_phrase_union(phrases, bpe)?;
    Ok(minimize(&determinize(&union)?)?)
}

/// A compiled context class.
#[derive(Debug, Clone)]
pub struct BiasClass {
    pub name: String,
    pub enter_tag: String,
    pub exit_tag: String,
    pub phrases: Vec<BiasPhrase>,
    pub fst: Fst,
}

impl BiasClass {
    /// Compiles with the default `@name#` / `#name@` tags.
    pub fn compile(name: &str, phrases: Vec<BiasPhrase>, bpe: &BpeModel) -> Result<Self> {
        Self::compile_with_tags(name, &enter_tag(name), &exit_tag(name), phrases, bpe)
    }

    pub fn compile_with_tags(
        name: &str,
        enter: &str,
        exit: &str,
        phrases: Vec<BiasPhrase>,
        bpe: &BpeModel,
    ) -> Result<Self> {
        for tag in [enter, exit] {
            if !bpe.is_reserved(tag) {
                return Err(Error::Config(format!(
                    "class tag {tag:?} is not a reserved token of the subword model"
                )));
            }
        }
        let fst = build_bias_fst(&phrases, bpe)?;
        Ok(BiasClass {
            name: name.to_string(),
            enter_tag: enter.to_string(),
            exit_tag: exit.to_string(),
            phrases,
            fst,
        })
    }

    /// Number of distinct phrases.
    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

/// Reads `phrase<TAB>frequency` lines; the frequency defaults to 1.
pub fn read_phrase_list<R: BufRead>(r: R, source_name: &str) -> Result<Vec<BiasPhrase>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (text, freq) = match line.split_once('\t') {
            Some((t, f)) => {
                let f: f64 = f.trim().parse().map_err(|_| {
                    Error::format(source_name, i + 1, format!("bad frequency {f:?}"))
                })?;
                (t, f)
            }
            None => (line.as_str(), 1.0),
        };
        if !(freq > 0.0) {
            return Err(Error::format(source_name, i + 1, "frequency must be positive"));
        }
        let phrase = BiasPhrase::new(text, freq);
        if phrase.words.is_empty() {
            return Err(Error::format(source_name, i + 1, "empty phrase"));
        }
        out.push(phrase);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub class_name: String,
    pub enter_tag: String,
    pub exit_tag: String,
    pub phrase_file: String,
}

/// Reads `class_name<TAB>enter_tag<TAB>exit_tag<TAB>phrase_file` lines.
pub fn read_manifest<R: BufRead>(r: R, source_name: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 4 || f.iter().any(|s| s.is_empty()) {
            return Err(Error::format(
                source_name,
                i + 1,
                "expected `class_name<TAB>enter_tag<TAB>exit_tag<TAB>phrase_file`",
            ));
        }
        out.push(ManifestEntry {
            class_name: f[0].to_string(),
            enter_tag: f[1].to_string(),
            exit_tag: f[2].to_string(),
            phrase_file: f[3].to_string(),
        });
    }
    Ok(out)
}
