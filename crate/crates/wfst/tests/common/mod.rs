//! Random acyclic machines and brute-force oracles that share no code with
//! the algorithms under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ctxbias_wfst::{Arc, Fst, FstBuilder, StateId, SymbolTable, Weight};
use rand::seq::SliceRandom;
use rand::Rng;

pub type Strings = (Vec<u32>, Vec<u32>);

pub fn alphabet(size: usize) -> SymbolTable {
    SymbolTable::from_symbols((0..size).map(|i| ((b'a' + i as u8) as char).to_string()))
}

/// A random acyclic transducer with at most `max_states` states. State ids
/// are shuffled so the topological order is not the id order.
pub fn random_acyclic<R: Rng>(rng: &mut R, max_states: usize, syms: &SymbolTable) -> Fst {
    let n = rng.random_range(1..=max_states);
    let alpha = syms.len() as u32 - 1;
    let mut ids: Vec<StateId> = (0..n).collect();
    ids.shuffle(rng);
    let mut b = FstBuilder::new(syms.clone(), syms.clone());
    for _ in 0..n {
        b.add_state();
    }
    b.set_start(ids[0]);
    let label = |rng: &mut R| -> u32 {
        if rng.random_bool(0.2) {
            0
        } else {
            rng.random_range(1..=alpha)
        }
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let k = rng.random_range(0..3usize);
            for _ in 0..k {
                let w = rng.random_range(-0.5..3.0);
                let arc = Arc::new(label(rng), label(rng), Weight::new(w), ids[j]);
                b.add_arc(ids[i], arc);
            }
        }
        if rng.random_bool(0.4) || i == n - 1 {
            b.set_final(ids[i], Weight::new(rng.random_range(-0.5..2.0)));
        }
    }
    b.build().unwrap()
}

/// Every accepting path from `from`, folded to the minimum weight per
/// string pair.
pub fn paths_from(fst: &Fst, from: StateId) -> BTreeMap<Strings, f64> {
    fn go(
        fst: &Fst,
        q: StateId,
        acc: f64,
        i: &mut Vec<u32>,
        o: &mut Vec<u32>,
        out: &mut BTreeMap<Strings, f64>,
    ) {
        if fst.is_final(q) {
            let w = acc + fst.final_weight(q).value();
            let e = out.entry((i.clone(), o.clone())).or_insert(f64::INFINITY);
            *e = e.min(w);
        }
        for arc in fst.arcs(q) {
            if arc.ilabel != 0 {
                i.push(arc.ilabel);
            }
            if arc.olabel != 0 {
                o.push(arc.olabel);
            }
            go(fst, arc.nextstate, acc + arc.weight.value(), i, o, out);
            if arc.olabel != 0 {
                o.pop();
            }
            if arc.ilabel != 0 {
                i.pop();
            }
        }
    }
    let mut out = BTreeMap::new();
    go(fst, from, 0.0, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

pub fn relation(fst: &Fst) -> BTreeMap<Strings, f64> {
    match fst.start() {
        Some(s) => paths_from(fst, s),
        None => BTreeMap::new(),
    }
}

/// `min over y of a(x, y) + b(y, z)`.
pub fn compose_oracle(a: &Fst, b: &Fst) -> BTreeMap<Strings, f64> {
    let ra = relation(a);
    let rb = relation(b);
    let mut out = BTreeMap::new();
    for ((x, y1), wa) in &ra {
        for ((y2, z), wb) in &rb {
            if y1 == y2 {
                let e = out.entry((x.clone(), z.clone())).or_insert(f64::INFINITY);
                *e = f64::min(*e, wa + wb);
            }
        }
    }
    out
}

pub fn same_relation(a: &BTreeMap<Strings, f64>, b: &BTreeMap<Strings, f64>, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|((ka, wa), (kb, wb))| ka == kb && (wa - wb).abs() <= tol)
}

/// Number of states of the minimal machine equivalent to a trimmed,
/// deterministic acyclic machine: the number of distinct future relations
/// up to an additive constant, taken over its states.
pub fn minimal_state_count(fst: &Fst, tol: f64) -> usize {
    let mut reps: Vec<BTreeMap<Strings, f64>> = Vec::new();
    for q in fst.states() {
        let mut future = paths_from(fst, q);
        let shift = future.values().copied().fold(f64::INFINITY, f64::min);
        for w in future.values_mut() {
            *w -= shift;
        }
        if !reps.iter().any(|r| same_relation(r, &future, tol)) {
            reps.push(future);
        }
    }
    reps.len()
}

/// Rejects machines whose paths are too long for exhaustive enumeration
/// bounds used by callers.
pub fn max_path_len(fst: &Fst) -> usize {
    fn go(fst: &Fst, q: StateId, memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(v) = memo[q] {
            return v;
        }
        let v = fst
            .arcs(q)
            .iter()
            .map(|a| 1 + go(fst, a.nextstate, memo))
            .max()
            .unwrap_or(0);
        memo[q] = Some(v);
        v
    }
    let mut memo = vec![None; fst.num_states()];
    fst.start().map(|s| go(fst, s, &mut memo)).unwrap_or(0)
}
