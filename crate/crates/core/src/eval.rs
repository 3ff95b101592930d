//! Word error rate and reports bucketed by bias-phrase count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::corpus::Utterance;
use crate::decoder::DecodeLine;
use crate::error::{Error, Result};
use crate::relabel::{align, EditOp};
use crate::tags::{parse_tag, strip_tags, TagKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_words: usize,
}

impl ErrorCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    fn add(&mut self, other: ErrorCounts) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.ref_words += other.ref_words;
    }
}

/// Edit operations between untagged word sequences.
pub fn error_counts<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hyp: &[T]) -> ErrorCounts {
    let a = align(reference, hyp);
    ErrorCounts {
        substitutions: a.count(EditOp::Substitute),
        insertions: a.count(EditOp::Insert),
        deletions: a.count(EditOp::Delete),
        ref_words: reference.len(),
    }
}

/// `(S + I + D) / |ref|`.
pub fn wer<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hyp: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference(String::new()));
    }
    let c = error_counts(reference, hyp);
    Ok(c.errors() as f64 / c.ref_words as f64)
}

/// Bucket lower edges; the last bucket is open-ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buckets {
    edges: Vec<usize>,
}

impl Default for Buckets {
    fn default() -> Self {
        Buckets {
            edges: vec![0, 1, 2, 3],
        }
    }
}

impl Buckets {
    /// Edges must start at 0 and increase strictly.
    pub fn new(edges: Vec<usize>) -> Result<Self> {
        if edges.first() != Some(&0) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "bucket edges must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Buckets { edges })
    }

    /// Parses a comma-separated edge list such as `0,1,2,3`.
    pub fn parse(list: &str) -> Result<Self> {
        let edges = list
            .split(',')
            .map(|e| {
                e.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad bucket edge {e:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Self::new(edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn index(&self, count: usize) -> usize {
        self.edges.partition_point(|&e| e <= count) - 1
    }

    pub fn label(&self, i: usize) -> String {
        let lo = self.edges[i];
        match self.edges.get(i + 1) {
            None => format!("{lo}+"),
            Some(&hi) if hi == lo + 1 => lo.to_string(),
            Some(&hi) => format!("{lo}-{}", hi - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketStats {
    pub label: String,
    pub utterances: usize,
    pub counts: ErrorCounts,
}

impl BucketStats {
    /// `None` for an empty bucket.
    pub fn wer(&self) -> Option<f64> {
        (self.counts.ref_words > 0).then(|| self.counts.errors() as f64 / self.counts.ref_words as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall: ErrorCounts,
    pub utterances: usize,
    pub per_bucket: Vec<BucketStats>,
    pub config: Vec<(String, String)>,
}

impl EvalReport {
    pub fn overall_wer(&self) -> f64 {
        self.overall.errors() as f64 / self.overall.ref_words as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.config {
            let _ = writeln!(s, "config\t{k}\t{v}");
        }
        let o = &self.overall;
        let _ = writeln!(s, "overall\tutterances\t{}", self.utterances);
        let _ = writeln!(s, "overall\tref_words\t{}", o.ref_words);
        let _ = writeln!(s, "overall\tsubstitutions\t{}", o.substitutions);
        let _ = writeln!(s, "overall\tinsertions\t{}", o.insertions);
        let _ = writeln!(s, "overall\tdeletions\t{}", o.deletions);
        let _ = writeln!(s, "overall\twer\t{:.6}", self.overall_wer());
        let _ = writeln!(s, "bucket\tutterances\tref_words\terrors\twer");
        for b in &self.per_bucket {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                b.label,
                b.utterances,
                b.counts.ref_words,
                b.counts.errors(),
                fmt_rate(b.wer())
            );
        }
        s
    }

    /// `bucket,count,wer`, one row per bucket.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bucket,count,wer\n");
        for b in &self.per_bucket {
            let _ = writeln!(s, "{},{},{}", b.label, b.utterances, fmt_rate(b.wer()));
        }
        s
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".to_string(), |r| format!("{r:.6}"))
}

/// Number of class spans in a tagged word sequence.
pub fn count_bias_phrases<S: AsRef<str>>(tagged: &[S]) -> usize {
    tagged
        .iter()
        .filter(|t| matches!(parse_tag(t.as_ref()), Some((_, TagKind::Enter))))
        .count()
}

/// Reads `utt_id<TAB>count` lines.
pub fn read_bias_counts<R: BufRead>(r: R, source_name: &str) -> Result<BTreeMap<String, usize>> {
    let mut out = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::format(source_name, i + 1, "expected `utt_id<TAB>count`");
        let (id, n) = line.split_once('\t').ok_or_else(bad)?;
        out.insert(id.trim().to_string(), n.trim().parse().map_err(|_| bad())?);
    }
    Ok(out)
}

/// Scores the rank-1 line of every decoded utterance against `references`
/// (tags stripped on both sides). References with no decode count as empty
/// hypotheses. Bias counts default to the number of class spans in each
/// tagged reference.
pub fn evaluate(
    decodes: &[DecodeLine],
    references: &[Utterance],
    bias_counts: Option<&BTreeMap<String, usize>>,
    buckets: &Buckets,
) -> Result<EvalReport> {
    let refs: BTreeMap<&str, &Utterance> = references.iter().map(|u| (u.id.as_str(), u)).collect();
    let mut best: BTreeMap<&str, &DecodeLine> = BTreeMap::new();
    for d in decodes {
        if !refs.contains_key(d.utt.as_str()) {
            return Err(Error::MissingReference(d.utt.clone()));
        }
        let slot = best.entry(d.utt.as_str()).or_insert(d);
        if d.rank < slot.rank {
            *slot = d;
        }
    }
    let mut per_bucket: Vec<BucketStats> = (0..buckets.len())
        .map(|i| BucketStats {
            label: buckets.label(i),
            utterances: 0,
            counts: ErrorCounts::default(),
        })
        .collect();
    let mut overall = ErrorCounts::default();
    for u in references {
        let reference = strip_tags(&u.words);
        if reference.is_empty() {
            return Err(Error::EmptyReference(u.id.clone()));
        }
        let hyp: Vec<String> = best
            .get(u.id.as_str())
            .map(|d| strip_tags(&d.text.split_whitespace().collect::<Vec<_>>()))
            .unwrap_or_default();
        let c = error_counts(&reference, &hyp);
        let n = match bias_counts {
            Some(m) => *m
                .get(&u.id)
                .ok_or_else(|| Error::Config(format!("no bias count for utterance {:?}", u.id)))?,
            None => count_bias_phrases(&u.words),
        };
        let b = &mut per_bucket[buckets.index(n)];
        b.utterances += 1;
        b.counts.add(c);
        overall.add(c);
    }
    Ok(EvalReport {
        overall,
        utterances: references.len(),
        per_bucket,
        config: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    fn line(utt: &str, rank: usize, text: &str) -> DecodeLine {
        DecodeLine {
            utt: utt.into(),
            rank,
            score: 0.0,
            text: text.into(),
        }
    }

    #[test]
    fn wer_examples() {
        assert_eq!(wer(&w("a b c"), &w("a b c")).unwrap(), 0.0);
        assert!((wer(&w("call jain smith"), &w("call jane smith")).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(wer(&w("a"), &w("b c d")).unwrap(), 3.0);
        assert!(matches!(wer::<&str, &str>(&[], &w("a")), Err(Error::EmptyReference(_))));
    }

    #[test]
    fn buckets() {
        let b = Buckets::default();
        assert_eq!((0..4).map(|i| b.label(i)).collect::<Vec<_>>(), ["0", "1", "2", "3+"]);
        assert_eq!(b.index(0), 0);
        assert_eq!(b.index(7), 3);
        let b = Buckets::parse("0,2,5").unwrap();
        assert_eq!(b.label(0), "0-1");
        assert_eq!(b.index(4), 1);
        assert!(Buckets::parse("1,2").is_err());
        assert!(Buckets::parse("0,2,2").is_err());
    }

    #[test]
    fn overall_and_buckets() {
        let refs = vec![
            Utterance::new("u1", "call @contact# jain smith #contact@"),
            Utterance::new("u2", "open the door"),
        ];
        let decodes = vec![
            line("u1", 1, "call @contact# jane smith #contact@"),
            line("u1", 2, "call jain smith"),
            line("u2", 1, "open the door"),
        ];
        let r = evaluate(&decodes, &refs, None, &Buckets::default()).unwrap();
        assert!((r.overall_wer() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.per_bucket[0].wer(), Some(0.0));
        assert!((r.per_bucket[1].wer().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_bucket[2].wer(), None);
        assert_eq!(r.per_bucket.iter().map(|b| b.utterances).sum::<usize>(), 2);
        assert!(r.to_csv().contains("2,0,NA\n"));
        assert!(r.to_csv().starts_with("bucket,count,wer\n0,1,0.000000\n"));

        let missing = evaluate(&[line("u9", 1, "x")], &refs, None, &Buckets::default());
        assert!(matches!(missing, Err(Error::MissingReference(u)) if u == "u9"));
    }

    #[test]
    fn explicit_bias_counts() {
        let refs = vec![Utterance::new("u1", "a b")];
        let counts = read_bias_counts("u1\t5\n".as_bytes(), "c").unwrap();
        let r = evaluate(&[line("u1", 1, "a b")], &refs, Some(&counts), &Buckets::default()).unwrap();
        assert_eq!(r.per_bucket[3].utterances, 1);
    }

    fn dp(a: &[String], b: &[String]) -> usize {
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 0..=a.len() {
            for j in 0..=b.len() {
                d[i][j] = if i == 0 {
                    j
                } else if j == 0 {
                    i
                } else {
                    let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                    sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1)
                };
            }
        }
        d[a.len()][b.len()]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn wer_matches_dp(
            a in prop::collection::vec(prop::sample::select(vec!["x", "y", "z"]).prop_map(String::from), 1..9),
            b in prop::collection::vec(prop::sample::select(vec!["x", "y", "z"]).prop_map(String::from), 0..9),
        ) {
            let expected = dp(&a, &b) as f64 / a.len() as f64;
            prop_assert_eq!(wer(&a, &b).unwrap(), expected);
        }
    }
}
