//! Byte-pair-encoding subword segmentation.
//!
//! Merges are learned over the characters of whole words. When a word is
//! segmented, its last subword carries the [`END_OF_WORD`] marker, so
//! `ja in</w>` is one word and `ja</w> in</w>` two. Class tags registered as
//! reserved tokens are never split.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const END_OF_WORD: &str = "</w>";

#[derive(Debug, Clone, PartialEq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
    vocab: BTreeSet<String>,
    reserved: BTreeSet<String>,
}

impl BpeModel {
    /// Learns merges from word frequencies until the vocabulary reaches
    /// `target_vocab` symbols or no adjacent pair occurs at least twice.
    /// The most frequent pair wins; ties go to the lexicographically
    /// smallest pair. Reserved tokens found in the corpus are skipped.
    pub fn learn<I, S>(corpus: I, target_vocab: usize, reserved: &[String]) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let reserved: BTreeSet<String> = reserved.iter().cloned().collect();
        let mut counts: HashMap<String, u64> = HashMap::new();
        for (word, freq) in corpus {
            let word = word.as_ref();
            if word.is_empty() || freq == 0 || reserved.contains(word) {
                continue;
            }
            *counts.entry(word.to_string()).or_default() += freq;
        }
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut words: Vec<(Vec<String>, u64)> = counts
            .into_iter()
            .map(|(w, f)| (w.chars().map(String::from).collect(), f))
            .collect();
        words.sort();

        let mut vocab: BTreeSet<String> = words
            .iter()
            .flat_map(|(syms, _)| syms.iter().cloned())
            .collect();
        let mut merges = Vec::new();

        while vocab.len() < target_vocab {
            let mut pairs: HashMap<(&str, &str), u64> = HashMap::new();
            for (syms, f) in &words {
                for w in syms.windows(2) {
                    *pairs.entry((&w[0], &w[1])).or_default() += f;
                }
            }
            let best = pairs
                .into_iter()
                .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
            let Some(((left, right), count)) = best else { break };
            if count < 2 {
                break;
            }
            let pair = (left.to_string(), right.to_string());
            for (syms, _) in &mut words {
                merge_pair(syms, &pair.0, &pair.1);
            }
            vocab.insert(format!("{}{}", pair.0, pair.1));
            merges.push(pair);
        }
        Ok(Self::from_parts(merges, vocab, reserved))
    }

    pub fn from_parts(
        merges: Vec<(String, String)>,
        vocab: BTreeSet<String>,
        reserved: BTreeSet<String>,
    ) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        BpeModel {
            merges,
            ranks,
            vocab,
            reserved,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Subword symbols without the end-of-word marker.
    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn reserved(&self) -> &BTreeSet<String> {
        &self.reserved
    }

    pub fn is_reserved(&self, token: &str) -> bool {
        self.reserved.contains(token)
    }

    /// Adds reserved tokens (e.g. class tags) after learning.
    pub fn with_reserved<I: IntoIterator<Item = String>>(mut self, tags: I) -> Self {
        self.reserved.extend(tags);
        self
    }

    /// Every token the model can emit: reserved tags, then each vocabulary
    /// symbol in its word-internal and word-final form.
    pub fn token_inventory(&self) -> Vec<String> {
        let mut out: Vec<String> = self.reserved.iter().cloned().collect();
        for sym in &self.vocab {
            out.push(sym.clone());
            out.push(format!("{sym}{END_OF_WORD}"));
        }
        out
    }

    /// Whether `token` is a reserved tag or a vocabulary symbol (in either
    /// form).
    pub fn knows_token(&self, token: &str) -> bool {
        self.reserved.contains(token)
            || self
                .vocab
                .contains(token.strip_suffix(END_OF_WORD).unwrap_or(token))
    }

    /// Splits one word into subwords; the last one carries the end marker.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        if self.reserved.contains(word) {
            return vec![word.to_string()];
        }
        let mut syms: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = syms
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            merge_pair(&mut syms, l, r);
        }
        if let Some(last) = syms.last_mut() {
            last.push_str(END_OF_WORD);
        }
        syms
    }

    /// Segments whitespace-separated text. Reserved tokens stay atomic.
    pub fn apply(&self, text: &str) -> Vec<String> {
        self.apply_words(text.split_whitespace())
    }

    pub fn apply_words<I, S>(&self, words: I) -> Vec<String>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        words
            .into_iter()
            .flat_map(|w| self.segment_word(w.as_ref()))
            .collect()
    }

    /// Inverse of [`apply`](Self::apply): joins subwords back into words.
    pub fn detokenize<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<String>> {
        let mut words = Vec::new();
        let mut pending = String::new();
        for tok in tokens.iter().map(AsRef::as_ref) {
            if self.reserved.contains(tok) {
                if !pending.is_empty() {
                    return Err(Error::MalformedTokens(format!(
                        "reserved token {tok:?} inside word {pending:?}"
                    )));
                }
                words.push(tok.to_string());
            } else if let Some(piece) = tok.strip_suffix(END_OF_WORD) {
                pending.push_str(piece);
                if pending.is_empty() {
                    return Err(Error::MalformedTokens("empty word".into()));
                }
                words.push(std::mem::take(&mut pending));
            } else {
                if tok.is_empty() {
                    return Err(Error::MalformedTokens("empty token".into()));
                }
                pending.push_str(tok);
            }
        }
        if !pending.is_empty() {
            return Err(Error::MalformedTokens(format!(
                "unterminated word {pending:?}"
            )));
        }
        Ok(words)
    }

    pub fn detokenize_text<S: AsRef<str>>(&self, tokens: &[S]) -> Result<String> {
        Ok(self.detokenize(tokens)?.join(" "))
    }

    pub fn write_merges<W: Write>(&self, mut w: W) -> Result<()> {
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
        }
        Ok(())
    }

    pub fn write_vocab<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.vocab {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn write_reserved<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.reserved {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    /// Reads the three model files. Merged symbols missing from the vocab
    /// file are a format error.
    pub fn read<M: BufRead, V: BufRead, R: BufRead>(merges: M, vocab: V, reserved: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in merges.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    pairs.push((l.to_string(), r.to_string()))
                }
                _ => return Err(Error::format("merges", i + 1, "expected `left right`")),
            }
        }
        let vocab = read_lines(vocab)?;
        let reserved = read_lines(reserved)?;
        for (i, (l, r)) in pairs.iter().enumerate() {
            if !vocab.contains(&format!("{l}{r}")) {
                return Err(Error::format(
                    "merges",
                    i + 1,
                    format!("merged symbol {l}{r} missing from vocab"),
                ));
            }
        }
        Ok(Self::from_parts(pairs, vocab, reserved))
    }

    /// Writes `merges.txt`, `vocab.txt` and `reserved.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_merges(BufWriter::new(File::create(dir.join("merges.txt"))?))?;
        self.write_vocab(BufWriter::new(File::create(dir.join("vocab.txt"))?))?;
        self.write_reserved(BufWriter::new(File::create(dir.join("reserved.txt"))?))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let open = |name: &str| -> Result<BufReader<File>> {
            Ok(BufReader::new(File::open(dir.join(name))?))
        };
        let reserved: Box<dyn BufRead> = match File::open(dir.join("reserved.txt")) {
            Ok(f) => Box::new(BufReader::new(f)),
            Err(_) => Box::new(std::io::empty()),
        };
        Self::read(open("merges.txt")?, open("vocab.txt")?, reserved)
    }
}

/// Word counts from whitespace-tokenized text lines, skipping class tags.
pub fn word_counts<I, S>(lines: I) -> Vec<(String, u64)>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for line in lines {
        for w in line.as_ref().split_whitespace() {
            if !crate::tags::is_tag(w) {
                *counts.entry(w.to_string()).or_default() += 1;
            }
        }
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort();
    out
}

fn read_lines<R: BufRead>(r: R) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            out.insert(t.to_string());
        }
    }
    Ok(out)
}

/// Replaces every non-overlapping occurrence of `left right`, scanning left
/// to right.
fn merge_pair(syms: &mut Vec<String>, left: &str, right: &str) {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(std::mem::take(&mut syms[i]));
            i += 1;
        }
    }
    *syms = out;
}
