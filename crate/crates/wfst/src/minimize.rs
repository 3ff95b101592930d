use std::collections::{HashMap, VecDeque};

use crate::determinize::is_deterministic;
use crate::error::{FstError, Result};
use crate::fst::{connect, Arc, Fst, FstBuilder, Label, StateId};
use crate::topsort::topological_order;
use crate::weight::Weight;

/// Weights in state signatures are compared on this grid.
const QUANTUM: f64 = 1e-12;

/// Signature of a state after pushing: final weight plus the sorted list of
/// `(ilabel, olabel, weight, class of target)`.
type Signature = (i64, Vec<(Label, Label, i64, usize)>);

/// Minimizes an acyclic machine that is deterministic over `(ilabel,
/// olabel)` pairs, such as the output of [`determinize`](crate::determinize).
///
/// Weights are first pushed toward the start state so equivalent futures
/// get identical arc weights, then states with equal signatures are merged
/// bottom-up. The result never has more states than the input.
pub fn minimize(fst: &Fst) -> Result<Fst> {
    if !is_deterministic(fst) {
        return Err(FstError::Precondition(
            "minimize requires a deterministic machine".into(),
        ));
    }
    if topological_order(fst).is_none() {
        return Err(FstError::Unsupported(
            "minimize requires an acyclic machine".into(),
        ));
    }
    let fst = connect(fst);
    let Some(start) = fst.start() else {
        return Ok(fst);
    };
    let order = topological_order(&fst).expect("still acyclic");
    let n = fst.num_states();

    // Shortest distance from each state to a final state.
    let mut potential = vec![f64::INFINITY; n];
    for &q in order.iter().rev() {
        let mut d = fst.final_weight(q).value();
        for arc in fst.arcs(q) {
            d = d.min(arc.weight.value() + potential[arc.nextstate]);
        }
        potential[q] = d;
    }

    let pushed_arc = |q: StateId, arc: &Arc| -> f64 {
        let w = arc.weight.value() + potential[arc.nextstate] - potential[q];
        if q == start {
            w + potential[start]
        } else {
            w
        }
    };
    let pushed_final = |q: StateId| -> Weight {
        let f = fst.final_weight(q);
        if f.is_zero() {
            return Weight::ZERO;
        }
        let w = f.value() - potential[q];
        Weight::new(if q == start { w + potential[start] } else { w })
    };

    let mut class = vec![usize::MAX; n];
    let mut classes: HashMap<Signature, usize> = HashMap::new();
    for &q in order.iter().rev() {
        let fw = pushed_final(q);
        let fkey = if fw.is_zero() { i64::MAX } else { quantize(fw.value()) };
        let mut arcs: Vec<_> = fst
            .arcs(q)
            .iter()
            .map(|a| (a.ilabel, a.olabel, quantize(pushed_arc(q, a)), class[a.nextstate]))
            .collect();
        arcs.sort_unstable();
        let next = classes.len();
        class[q] = *classes.entry((fkey, arcs)).or_insert(next);
    }

    // Emit one state per class, numbered in breadth-first order from start.
    let mut out = FstBuilder::new(fst.isymbols().clone(), fst.osymbols().clone());
    let mut new_id: HashMap<usize, StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    new_id.insert(class[start], out.add_state());
    out.set_start(0);
    queue.push_back(start);
    while let Some(q) = queue.pop_front() {
        let id = new_id[&class[q]];
        out.set_final(id, pushed_final(q));
        for arc in fst.arcs(q) {
            let c = class[arc.nextstate];
            let target = match new_id.get(&c) {
                Some(&t) => t,
                None => {
                    let t = out.add_state();
                    new_id.insert(c, t);
                    queue.push_back(arc.nextstate);
                    t
                }
            };
            out.add_arc(
                id,
                Arc::new(arc.ilabel, arc.olabel, Weight::new(pushed_arc(q, arc)), target),
            );
        }
    }
    out.build()
}

fn quantize(w: f64) -> i64 {
    (w / QUANTUM).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{determinize, enumerate_relation, SymbolTable};

    #[test]
    fn merges_equivalent_suffix_states() {
        // "a b" and "a c" as a non-shared trie with separate final states.
        let syms = SymbolTable::from_symbols(["a", "b", "c"]);
        let mut b = FstBuilder::new(syms.clone(), syms);
        let s: Vec<_> = (0..5).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(0.5), s[1]));
        b.add_arc(s[1], Arc::new(2, 2, Weight::new(0.5), s[2]));
        b.add_arc(s[1], Arc::new(3, 3, Weight::new(0.5), s[3]));
        b.set_final(s[2], Weight::ONE);
        b.set_final(s[3], Weight::ONE);
        let fst = b.build().unwrap();
        let m = minimize(&fst).unwrap();
        assert_eq!(m.num_states(), 3);
        assert!(enumerate_relation(&m, 5).approx_eq(&enumerate_relation(&fst, 5), 1e-12));
    }

    #[test]
    fn pushing_exposes_equivalence_hidden_by_weight_placement() {
        // x:x/1 y:y/0  vs  z:z/0 y:y/1 lead into states whose futures only
        // differ by a constant.
        let syms = SymbolTable::from_symbols(["x", "y", "z"]);
        let mut b = FstBuilder::new(syms.clone(), syms);
        let s: Vec<_> = (0..5).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(1.0), s[1]));
        b.add_arc(s[0], Arc::new(3, 3, Weight::new(0.0), s[2]));
        b.add_arc(s[1], Arc::new(2, 2, Weight::new(0.0), s[3]));
        b.add_arc(s[2], Arc::new(2, 2, Weight::new(1.0), s[4]));
        b.set_final(s[3], Weight::ONE);
        b.set_final(s[4], Weight::ONE);
        let fst = b.build().unwrap();
        let m = minimize(&fst).unwrap();
        assert_eq!(m.num_states(), 3);
        assert!(enumerate_relation(&m, 5).approx_eq(&enumerate_relation(&fst, 5), 1e-12));
    }

    #[test]
    fn minimal_chain_is_fixed_point() {
        let syms = SymbolTable::from_symbols(["a"]);
        let mut b = FstBuilder::new(syms.clone(), syms);
        let s: Vec<_> = (0..3).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(1.0), s[1]));
        b.add_arc(s[1], Arc::new(1, 1, Weight::new(1.0), s[2]));
        b.set_final(s[2], Weight::ONE);
        let m = minimize(&b.build().unwrap()).unwrap();
        assert_eq!(m.num_states(), 3);
    }

    #[test]
    fn rejects_nondeterministic_input() {
        let syms = SymbolTable::from_symbols(["a"]);
        let mut b = FstBuilder::new(syms.clone(), syms);
        let s: Vec<_> = (0..2).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(1.0), s[1]));
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(2.0), s[1]));
        b.set_final(s[1], Weight::ONE);
        let fst = b.build().unwrap();
        assert!(matches!(minimize(&fst), Err(FstError::Precondition(_))));
        assert!(minimize(&determinize(&fst).unwrap()).is_ok());
    }
}
