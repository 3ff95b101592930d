//! Class-tag insertion into plain transcriptions.
//!
//! The tagged recognizer output is stripped of tags and aligned to the
//! reference transcription; each tagged span is then carried over to the
//! reference words aligned with it.

use crate::error::{Error, Result};
use crate::tags::{parse_tag, TagKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match,
    Substitute,
    /// A reference word with no hypothesis counterpart.
    Delete,
    /// A hypothesis word with no reference counterpart.
    Insert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedPair {
    pub ref_index: Option<usize>,
    pub hyp_index: Option<usize>,
    pub op: EditOp,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
}

impl Alignment {
    pub fn cost(&self) -> usize {
        self.pairs.iter().filter(|p| p.op != EditOp::Match).count()
    }

    pub fn count(&self, op: EditOp) -> usize {
        self.pairs.iter().filter(|p| p.op == op).count()
    }
}

/// Minimal word-level Levenshtein alignment with exact comparison. On ties
/// the backtrace prefers match, then substitution, deletion, insertion.
pub fn align<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hyp: &[T]) -> Alignment {
    align_by(reference, hyp, |a, b| a == b)
}

/// [`align`] with case folding. Tag insertion aligns this way.
pub fn align_ignore_case<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hyp: &[T]) -> Alignment {
    align_by(reference, hyp, |a, b| a.to_lowercase() == b.to_lowercase())
}

fn align_by<S: AsRef<str>, T: AsRef<str>>(
    reference: &[S],
    hyp: &[T],
    eq: impl Fn(&str, &str) -> bool,
) -> Alignment {
    let (n, m) = (reference.len(), hyp.len());
    let same = |i: usize, j: usize| eq(reference[i].as_ref(), hyp[j].as_ref());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(!same(i - 1, j - 1));
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }

    let mut pairs = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let cur = d[i][j];
        if i > 0 && j > 0 && same(i - 1, j - 1) && cur == d[i - 1][j - 1] {
            pairs.push(AlignedPair { ref_index: Some(i - 1), hyp_index: Some(j - 1), op: EditOp::Match });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && !same(i - 1, j - 1) && cur == d[i - 1][j - 1] + 1 {
            pairs.push(AlignedPair { ref_index: Some(i - 1), hyp_index: Some(j - 1), op: EditOp::Substitute });
            i -= 1;
            j -= 1;
        } else if i > 0 && cur == d[i - 1][j] + 1 {
            pairs.push(AlignedPair { ref_index: Some(i - 1), hyp_index: None, op: EditOp::Delete });
            i -= 1;
        } else {
            pairs.push(AlignedPair { ref_index: None, hyp_index: Some(j - 1), op: EditOp::Insert });
            j -= 1;
        }
    }
    pairs.reverse();
    Alignment { pairs }
}

/// A tagged span over the untagged word positions `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSpan {
    pub enter: String,
    pub exit: String,
    pub start: usize,
    pub end: usize,
}

/// Splits a tagged sequence into its words and tag spans. Tags must pair up
/// by class and must not nest.
pub fn parse_spans<S: AsRef<str>>(tagged: &[S]) -> Result<(Vec<String>, Vec<TagSpan>)> {
    let mut words = Vec::new();
    let mut spans = Vec::new();
    let mut open: Option<(String, &str, usize)> = None;
    for tok in tagged.iter().map(AsRef::as_ref) {
        match parse_tag(tok) {
            None => words.push(tok.to_string()),
            Some((name, TagKind::Enter)) => {
                if let Some((outer, _, _)) = &open {
                    return Err(Error::UnbalancedTags(format!("{tok} opened inside {outer}")));
                }
                open = Some((tok.to_string(), name, words.len()));
            }
            Some((name, TagKind::Exit)) => match open.take() {
                Some((enter, open_name, start)) if open_name == name => spans.push(TagSpan {
                    enter,
                    exit: tok.to_string(),
                    start,
                    end: words.len(),
                }),
                Some((enter, _, _)) => {
                    return Err(Error::UnbalancedTags(format!("{tok} closes {enter}")))
                }
                None => return Err(Error::UnbalancedTags(format!("{tok} without a matching enter tag"))),
            },
        }
    }
    if let Some((enter, _, _)) = open {
        return Err(Error::UnbalancedTags(format!("{enter} is never closed")));
    }
    Ok((words, spans))
}

/// Copies the class tags of `tagged_hyp` onto `reference`.
///
/// The enter tag lands before the first reference word aligned (matched or
/// substituted) to a word of the span, the exit tag after the last one. A
/// span with no such reference word is dropped.
pub fn insert_tags<S: AsRef<str>, T: AsRef<str>>(reference: &[S], tagged_hyp: &[T]) -> Result<Vec<String>> {
    let (hyp, spans) = parse_spans(tagged_hyp)?;
    let alignment = align_ignore_case(reference, &hyp);
    let mut before: Vec<Option<&str>> = vec![None; reference.len()];
    let mut after: Vec<Option<&str>> = vec![None; reference.len()];
    for span in &spans {
        let covered: Vec<usize> = alignment
            .pairs
            .iter()
            .filter_map(|p| match (p.ref_index, p.hyp_index) {
                (Some(r), Some(h)) if (span.start..span.end).contains(&h) => Some(r),
                _ => None,
            })
            .collect();
        if let (Some(&first), Some(&last)) = (covered.first(), covered.last()) {
            before[first] = Some(&span.enter);
            after[last] = Some(&span.exit);
        }
    }
    let mut out = Vec::with_capacity(reference.len() + 2 * spans.len());
    for (i, w) in reference.iter().enumerate() {
        out.extend(before[i].map(str::to_string));
        out.push(w.as_ref().to_string());
        out.extend(after[i].map(str::to_string));
    }
    Ok(out)
}
