use std::collections::BTreeMap;

use crate::fst::{Fst, Label, StateId, EPSILON};
use crate::weight::Weight;

/// A weighted string relation: each `(input, output)` pair (epsilons
/// removed) maps to the minimum weight over all paths realizing it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Relation {
    entries: BTreeMap<(Vec<Label>, Vec<Label>), Weight>,
}

impl Relation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a path, keeping the minimum weight per pair.
    pub fn insert(&mut self, input: Vec<Label>, output: Vec<Label>, weight: Weight) {
        self.entries
            .entry((input, output))
            .and_modify(|w| *w = w.plus(weight))
            .or_insert(weight);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, input: &[Label], output: &[Label]) -> Option<Weight> {
        self.entries
            .get(&(input.to_vec(), output.to_vec()))
            .copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Label], &[Label], Weight)> {
        self.entries
            .iter()
            .map(|((i, o), w)| (i.as_slice(), o.as_slice(), *w))
    }

    /// Same pairs and weights within `tol`.
    pub fn approx_eq(&self, other: &Relation, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|((ka, wa), (kb, wb))| ka == kb && wa.approx_eq(*wb, tol))
    }

    /// Renders entries as `(input, output, weight)` strings using the
    /// machine's symbol tables.
    pub fn to_strings(&self, fst: &Fst) -> Vec<(String, String, f64)> {
        self.iter()
            .map(|(i, o, w)| {
                (
                    fst.isymbols().render(i),
                    fst.osymbols().render(o),
                    w.value(),
                )
            })
            .collect()
    }
}

/// Enumerates every accepting path of at most `max_len` arcs.
///
/// Exponential in the worst case; meant for small machines and as a test
/// oracle.
pub fn enumerate_relation(fst: &Fst, max_len: usize) -> Relation {
    let mut rel = Relation::new();
    let Some(start) = fst.start() else {
        return rel;
    };
    let mut input = Vec::new();
    let mut output = Vec::new();
    walk(fst, start, Weight::ONE, max_len, &mut input, &mut output, &mut rel);
    rel
}

fn walk(
    fst: &Fst,
    q: StateId,
    acc: Weight,
    budget: usize,
    input: &mut Vec<Label>,
    output: &mut Vec<Label>,
    rel: &mut Relation,
) {
    if fst.is_final(q) {
        rel.insert(input.clone(), output.clone(), acc.times(fst.final_weight(q)));
    }
    if budget == 0 {
        return;
    }
    for arc in fst.arcs(q) {
        if arc.weight.is_zero() {
            continue;
        }
        if arc.ilabel != EPSILON {
            input.push(arc.ilabel);
        }
        if arc.olabel != EPSILON {
            output.push(arc.olabel);
        }
        walk(
            fst,
            arc.nextstate,
            acc.times(arc.weight),
            budget - 1,
            input,
            output,
            rel,
        );
        if arc.olabel != EPSILON {
            output.pop();
        }
        if arc.ilabel != EPSILON {
            input.pop();
        }
    }
}
