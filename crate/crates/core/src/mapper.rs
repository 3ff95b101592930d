//! Rare-word mapping through pronunciation.
//!
//! `D = L ∘ G` maps phoneme strings to word sequences weighted by a unigram
//! model; a word is mapped by composing its pronunciation acceptor with `D`
//! and reading the output of the shortest path.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use ctxbias_wfst::{
    compose, connect, shortest_path, top_sort, Arc, Fst, FstBuilder, FstError, StateId, SymbolTable,
    Weight, EPSILON,
};

use crate::error::{Error, Result};

pub type Pronunciation = Vec<String>;

/// Word to pronunciation variants, in file order.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Pronunciation>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, pron: Pronunciation) {
        let prons = self.entries.entry(word.to_string()).or_default();
        if !prons.contains(&pron) {
            prons.push(pron);
        }
    }

    pub fn get(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// Exact lookup, then lowercase.
    pub fn lookup(&self, word: &str) -> Option<&[Pronunciation]> {
        self.get(word).or_else(|| self.get(&word.to_lowercase()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Pronunciation])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    pub fn phones(&self) -> BTreeSet<&str> {
        self.entries.values().flatten().flatten().map(String::as_str).collect()
    }

    /// `word<TAB>phone phone ...`, one line per variant.
    pub fn read<R: BufRead>(r: R, source_name: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, phones) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(source_name, i + 1, "expected `word<TAB>phones`"))?;
            let pron: Pronunciation = phones.split_whitespace().map(str::to_string).collect();
            if word.trim().is_empty() || pron.is_empty() {
                return Err(Error::format(source_name, i + 1, "empty word or pronunciation"));
            }
            lex.add(word.trim(), pron);
        }
        Ok(lex)
    }
}

#[derive(Debug, Clone, Default)]
pub struct UnigramModel {
    counts: BTreeMap<String, f64>,
}

impl UnigramModel {
    pub fn from_counts<I, S>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut out = BTreeMap::new();
        for (w, c) in counts {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::NonPositiveFrequency(c));
            }
            *out.entry(w.into()).or_insert(0.0) += c;
        }
        if out.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(UnigramModel { counts: out })
    }

    pub fn count(&self, word: &str) -> Option<f64> {
        self.counts.get(word).copied()
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    /// `-ln p(w)`, or `None` outside the vocabulary.
    pub fn cost(&self, word: &str) -> Option<f64> {
        self.count(word).map(|c| -(c / self.total()).ln())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.counts.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// `word<TAB>count`.
    pub fn read<R: BufRead>(r: R, source_name: &str) -> Result<Self> {
        let mut counts = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::format(source_name, i + 1, "expected `word<TAB>positive count`");
            let (w, c) = line.split_once('\t').ok_or_else(bad)?;
            let c: f64 = c.trim().parse().map_err(|_| bad())?;
            if !(c > 0.0) {
                return Err(bad());
            }
            counts.push((w.trim().to_string(), c));
        }
        Self::from_counts(counts)
    }
}

/// Greedy longest-match grapheme rules for words missing from the lexicon.
#[derive(Debug, Clone, Default)]
pub struct LetterRules {
    rules: BTreeMap<String, Vec<String>>,
    longest: usize,
}

impl LetterRules {
    pub fn new<I>(rules: I) -> Self
    where
        I: IntoIterator<Item = (String, Vec<String>)>,
    {
        let rules: BTreeMap<_, _> = rules.into_iter().collect();
        let longest = rules.keys().map(|g| g.chars().count()).max().unwrap_or(0);
        LetterRules { rules, longest }
    }

    /// `None` when some letter has no rule.
    pub fn pronounce(&self, word: &str) -> Option<Pronunciation> {
        let chars: Vec<char> = word.to_lowercase().chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let max = self.longest.min(chars.len() - i);
            let (len, phones) = (1..=max).rev().find_map(|n| {
                let g: String = chars[i..i + n].iter().collect();
                self.rules.get(&g).map(|p| (n, p))
            })?;
            out.extend(phones.iter().cloned());
            i += len;
        }
        (!out.is_empty()).then_some(out)
    }

    pub fn phones(&self) -> BTreeSet<&str> {
        self.rules.values().flatten().map(String::as_str).collect()
    }

    /// `grapheme<TAB>phone phone ...`; the phone list may be empty.
    pub fn read<R: BufRead>(r: R, source_name: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (g, p) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(source_name, i + 1, "expected `grapheme<TAB>phones`"))?;
            if g.trim().is_empty() {
                return Err(Error::format(source_name, i + 1, "empty grapheme"));
            }
            rules.push((
                g.trim().to_lowercase(),
                p.split_whitespace().map(str::to_string).collect(),
            ));
        }
        Ok(Self::new(rules))
    }
}

/// Builds `D = L ∘ G`. `L` is the closure of the lexicon's pronunciation
/// paths (each path emits its word on the first arc); `G` is a single-state
/// loop with weight `-ln p(w) + word_penalty` per unigram word.
pub fn build_mapping_transducer(
    lex: &Lexicon,
    uni: &UnigramModel,
    phones: &SymbolTable,
    word_penalty: f64,
) -> Result<Fst> {
    if let Some((w, _)) = uni.iter().find(|(w, _)| !lex.contains(w)) {
        return Err(Error::MissingFromLexicon(w.to_string()));
    }
    let words = SymbolTable::from_symbols(lex.words());

    let mut l = FstBuilder::new(phones.clone(), words.clone());
    let hub = l.add_state();
    l.set_start(hub);
    l.set_final(hub, Weight::ONE);
    for (word, prons) in lex.iter() {
        let wl = words.id(word).expect("lexicon word");
        for pron in prons {
            let mut q = hub;
            for (k, phone) in pron.iter().enumerate() {
                let pl = phones
                    .id(phone)
                    .ok_or_else(|| Error::Config(format!("phone {phone:?} missing from phone table")))?;
                let next = if k + 1 == pron.len() { hub } else { l.add_state() };
                let ol = if k == 0 { wl } else { EPSILON };
                l.add_arc(q, Arc::new(pl, ol, Weight::ONE, next));
                q = next;
            }
        }
    }
    let l = l.build()?;

    let mut g = FstBuilder::new(words.clone(), words.clone());
    let s = g.add_state();
    g.set_start(s);
    g.set_final(s, Weight::ONE);
    for (word, _) in uni.iter() {
        let wl = words.id(word).expect("checked above");
        let cost = uni.cost(word).expect("unigram word") + word_penalty;
        g.add_arc(s, Arc::new(wl, wl, Weight::new(cost), s));
    }
    let g = g.build()?;
    Ok(connect(&compose(&l, &g)?))
}

/// Acceptor for the union of `prons`, weight 0 each.
pub fn pron_to_fst(prons: &[Pronunciation], phones: &SymbolTable) -> Result<Fst> {
    pron_chain_fst(std::slice::from_ref(&prons.to_vec()), phones)
}

/// Acceptor for the concatenation of per-word pronunciation unions.
fn pron_chain_fst(words: &[Vec<Pronunciation>], phones: &SymbolTable) -> Result<Fst> {
    if words.is_empty() || words.iter().any(|p| p.is_empty() || p.iter().any(Vec::is_empty)) {
        return Err(Error::EmptyPronunciations);
    }
    let mut b = FstBuilder::new(phones.clone(), phones.clone());
    let mut junction = b.add_state();
    b.set_start(junction);
    for prons in words {
        let end = b.add_state();
        let mut trie: HashMap<(StateId, u32), StateId> = HashMap::new();
        let mut last: BTreeSet<(StateId, u32)> = BTreeSet::new();
        for pron in prons {
            let mut q = junction;
            for (k, phone) in pron.iter().enumerate() {
                let pl = phones
                    .id(phone)
                    .ok_or_else(|| Error::Config(format!("phone {phone:?} missing from phone table")))?;
                if k + 1 == pron.len() {
                    if last.insert((q, pl)) {
                        b.add_arc(q, Arc::new(pl, pl, Weight::ONE, end));
                    }
                } else {
                    q = match trie.get(&(q, pl)) {
                        Some(&n) => n,
                        None => {
                            let n = b.add_state();
                            b.add_arc(q, Arc::new(pl, pl, Weight::ONE, n));
                            trie.insert((q, pl), n);
                            n
                        }
                    };
                }
            }
        }
        junction = end;
    }
    b.set_final(junction, Weight::ONE);
    Ok(b.build()?)
}

/// A mapped word sequence and its cost `Σ -ln p(w)` (plus penalties).
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub words: Vec<String>,
    pub cost: f64,
}

/// Lexicon, unigram model, optional letter rules and the compiled `D`.
#[derive(Debug, Clone)]
pub struct WordMapper {
    lexicon: Lexicon,
    rules: Option<LetterRules>,
    phones: SymbolTable,
    d: Fst,
}

impl WordMapper {
    pub fn new(lexicon: Lexicon, unigram: &UnigramModel, rules: Option<LetterRules>, word_penalty: f64) -> Result<Self> {
        let mut inventory: BTreeSet<&str> = lexicon.phones();
        if let Some(r) = &rules {
            inventory.extend(r.phones());
        }
        let phones = SymbolTable::from_symbols(inventory);
        let d = build_mapping_transducer(&lexicon, unigram, &phones, word_penalty)?;
        Ok(WordMapper {
            lexicon,
            rules,
            phones,
            d,
        })
    }

    pub fn transducer(&self) -> &Fst {
        &self.d
    }

    pub fn phones(&self) -> &SymbolTable {
        &self.phones
    }

    /// Lexicon pronunciations, else the letter-rule pronunciation.
    pub fn pronunciations(&self, word: &str) -> Result<Vec<Pronunciation>> {
        if let Some(p) = self.lexicon.lookup(word) {
            return Ok(p.to_vec());
        }
        self.rules
            .as_ref()
            .and_then(|r| r.pronounce(word))
            .map(|p| vec![p])
            .ok_or_else(|| Error::NoPronunciationMatch(word.to_string()))
    }

    pub fn map_word(&self, word: &str) -> Result<Mapping> {
        self.map_phrase(&[word])
    }

    /// Maps a whole phrase through the concatenation of its words'
    /// pronunciations, so word boundaries may move.
    pub fn map_phrase<S: AsRef<str>>(&self, words: &[S]) -> Result<Mapping> {
        let name = words.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        let mut per_word = Vec::with_capacity(words.len());
        for w in words {
            per_word.push(self.pronunciations(w.as_ref())?);
        }
        self.map_pronunciations(&name, per_word)
    }

    /// Maps explicit per-word pronunciation sets. Variants using phones
    /// unknown to `D` are dropped.
    pub fn map_pronunciations(&self, name: &str, per_word: Vec<Vec<Pronunciation>>) -> Result<Mapping> {
        let no_match = || Error::NoPronunciationMatch(name.to_string());
        let per_word: Vec<Vec<Pronunciation>> = per_word
            .into_iter()
            .map(|prons| {
                prons
                    .into_iter()
                    .filter(|p| !p.is_empty() && p.iter().all(|ph| self.phones.id(ph).is_some()))
                    .collect::<Vec<_>>()
            })
            .collect();
        if per_word.is_empty() || per_word.iter().any(Vec::is_empty) {
            return Err(no_match());
        }
        let p = pron_chain_fst(&per_word, &self.phones)?;
        let path = match shortest_path(&compose(&p, &self.d)?) {
            Ok(path) => path,
            Err(FstError::EmptyLanguage) => return Err(no_match()),
            Err(e) => return Err(e.into()),
        };
        let chain = top_sort(&path.to_fst())?;
        let mut words = Vec::new();
        let mut q = chain.start().ok_or_else(no_match)?;
        while let Some(arc) = chain.arcs(q).first() {
            if arc.olabel != EPSILON {
                words.push(chain.osymbols().symbol(arc.olabel).expect("output label").to_string());
            }
            q = arc.nextstate;
        }
        Ok(Mapping {
            words,
            cost: path.total_weight.value(),
        })
    }

    /// Word-level mappings for `words`, skipping identities and words that
    /// cannot be mapped.
    pub fn mapping_table<'a, I>(&self, words: I) -> BTreeMap<String, Vec<String>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = BTreeMap::new();
        for w in words {
            if out.contains_key(w) {
                continue;
            }
            if let Ok(m) = self.map_word(w) {
                if m.words.len() != 1 || m.words[0] != w {
                    out.insert(w.to_string(), m.words);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctxbias_wfst::enumerate_relation;

    fn pron(s: &str) -> Pronunciation {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn lex(entries: &[(&str, &str)]) -> Lexicon {
        let mut l = Lexicon::new();
        for (w, p) in entries {
            l.add(w, pron(p));
        }
        l
    }

    /// The closure also accepts the empty string.
    fn nonempty(rel: Vec<(String, String, f64)>) -> Vec<(String, String, f64)> {
        rel.into_iter().filter(|(i, _, _)| !i.is_empty()).collect()
    }

    fn phones(l: &Lexicon) -> SymbolTable {
        SymbolTable::from_symbols(l.phones())
    }

    #[test]
    fn single_word_transducer() {
        let l = lex(&[("cat", "K AE T")]);
        let u = UnigramModel::from_counts([("cat", 1.0)]).unwrap();
        let d = build_mapping_transducer(&l, &u, &phones(&l), 0.0).unwrap();
        let rel = nonempty(enumerate_relation(&d, 3).to_strings(&d));
        assert_eq!(rel, vec![("K AE T".to_string(), "cat".to_string(), 0.0)]);
    }

    #[test]
    fn homophones_weighted_by_unigram() {
        let l = lex(&[("a", "AH"), ("b", "AH")]);
        let u = UnigramModel::from_counts([("a", 3.0), ("b", 1.0)]).unwrap();
        let d = build_mapping_transducer(&l, &u, &phones(&l), 0.0).unwrap();
        let rel = nonempty(enumerate_relation(&d, 1).to_strings(&d));
        assert_eq!(rel.len(), 2);
        assert!((rel[0].2 - 0.287682).abs() < 1e-6);
        assert!((rel[1].2 - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn closure_repeats_words() {
        let l = lex(&[("cat", "K AE T"), ("dog", "D AO G")]);
        let u = UnigramModel::from_counts([("cat", 1.0), ("dog", 3.0)]).unwrap();
        let d = build_mapping_transducer(&l, &u, &phones(&l), 0.0).unwrap();
        let rel = enumerate_relation(&d, 6).to_strings(&d);
        let cc = rel.iter().find(|(i, _, _)| i == "K AE T K AE T").unwrap();
        assert_eq!(cc.1, "cat cat");
        assert!((cc.2 - 2.0 * 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn missing_lexicon_word() {
        let l = lex(&[("cat", "K AE T")]);
        let u = UnigramModel::from_counts([("cat", 1.0), ("dog", 1.0)]).unwrap();
        assert!(matches!(
            build_mapping_transducer(&l, &u, &phones(&l), 0.0),
            Err(Error::MissingFromLexicon(w)) if w == "dog"
        ));
    }

    #[test]
    fn pron_acceptor() {
        let l = lex(&[("sister", "S IH S T AH"), ("x", "S IH")]);
        let ph = phones(&l);
        let one = pron_to_fst(&[pron("S IH S T AH")], &ph).unwrap();
        assert_eq!(enumerate_relation(&one, 10).len(), 1);
        assert_eq!(one.num_arcs(), 5);
        let two = pron_to_fst(&[pron("S IH S T AH"), pron("S IH")], &ph).unwrap();
        assert_eq!(enumerate_relation(&two, 10).len(), 2);
        let dup = pron_to_fst(&[pron("S IH"), pron("S IH")], &ph).unwrap();
        assert_eq!(enumerate_relation(&dup, 10).len(), 1);
        assert!(matches!(pron_to_fst(&[], &ph), Err(Error::EmptyPronunciations)));
    }

    #[test]
    fn sista_maps_to_sister() {
        let l = lex(&[("sista", "S IH S T AH"), ("sister", "S IH S T AH")]);
        let u = UnigramModel::from_counts([("sister", 1000.0), ("sista", 1.0)]).unwrap();
        let m = WordMapper::new(l, &u, None, 0.0).unwrap();
        assert_eq!(m.map_word("sista").unwrap().words, vec!["sister"]);
        assert_eq!(m.map_word("sister").unwrap().words, vec!["sister"]);
    }

    #[test]
    fn letter_rules_fallback() {
        let rules = LetterRules::new([
            ("c".to_string(), pron("K")),
            ("a".to_string(), pron("AE")),
            ("t".to_string(), pron("T")),
            ("ck".to_string(), pron("K")),
            ("h".to_string(), vec![]),
        ]);
        assert_eq!(rules.pronounce("Cat").unwrap(), pron("K AE T"));
        assert_eq!(rules.pronounce("tack").unwrap(), pron("T AE K"));
        assert_eq!(rules.pronounce("chat").unwrap(), pron("K AE T"));
        assert!(rules.pronounce("dog").is_none());

        let l = lex(&[("cat", "K AE T")]);
        let u = UnigramModel::from_counts([("cat", 2.0)]).unwrap();
        let m = WordMapper::new(l, &u, Some(rules), 0.0).unwrap();
        assert_eq!(m.map_word("chat").unwrap().words, vec!["cat"]);
        assert!(matches!(m.map_word("dog"), Err(Error::NoPronunciationMatch(_))));
        assert!(matches!(m.map_word("tack"), Err(Error::NoPronunciationMatch(_))));
    }

    #[test]
    fn mapping_table_skips_identity_and_failures() {
        let l = lex(&[("sista", "S IH S T AH"), ("sister", "S IH S T AH"), ("zz", "Z")]);
        let u = UnigramModel::from_counts([("sister", 10.0), ("sista", 1.0)]).unwrap();
        let m = WordMapper::new(l, &u, None, 0.0).unwrap();
        let t = m.mapping_table(["sista", "sister", "zz", "unknown"]);
        assert_eq!(t.len(), 1);
        assert_eq!(t["sista"], vec!["sister"]);
    }

    #[test]
    fn file_formats() {
        let l = Lexicon::read("a\tAH\na\tEY\nb\tB IY\n".as_bytes(), "lex").unwrap();
        assert_eq!(l.get("a").unwrap().len(), 2);
        assert!(Lexicon::read("a\n".as_bytes(), "lex").is_err());
        let u = UnigramModel::read("a\t3\nb\t1\n".as_bytes(), "uni").unwrap();
        assert!((u.cost("a").unwrap() + 0.75f64.ln()).abs() < 1e-12);
        assert!(UnigramModel::read("a\t0\n".as_bytes(), "uni").is_err());
        let r = LetterRules::read("ph\tF\ne\t\n".as_bytes(), "rules").unwrap();
        assert_eq!(r.pronounce("phe").unwrap(), pron("F"));
    }
}
