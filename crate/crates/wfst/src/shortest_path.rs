use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{FstError, Result};
use crate::fst::{Arc, Fst, FstBuilder, Label, StateId, EPSILON};
use crate::symbols::SymbolTable;
use crate::topsort::topological_order;
use crate::weight::Weight;

/// Relative tolerance used when deciding whether an arc lies on an optimal
/// path.
const TIE_TOL: f64 = 1e-12;

/// A single accepting path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Visited states; one more than the number of arcs.
    pub states: Vec<StateId>,
    pub arcs: Vec<Arc>,
    /// Sum of the arc weights plus the final weight of the last state.
    pub total_weight: Weight,
    /// Input labels with epsilons removed.
    pub input: Vec<Label>,
    /// Output labels with epsilons removed.
    pub output: Vec<Label>,
    isymbols: SymbolTable,
    osymbols: SymbolTable,
}

impl Path {
    /// The path as a linear machine with the same symbol tables.
    pub fn to_fst(&self) -> Fst {
        let mut b = FstBuilder::new(self.isymbols.clone(), self.osymbols.clone());
        let mut q = b.add_state();
        b.set_start(q);
        for arc in &self.arcs {
            let next = b.add_state();
            b.add_arc(q, Arc { nextstate: next, ..*arc });
            q = next;
        }
        let consumed: Weight = self.arcs.iter().fold(Weight::ONE, |acc, a| acc.times(a.weight));
        let final_weight = Weight::new(self.total_weight.value() - consumed.value());
        b.set_final(q, final_weight);
        b.build().expect("linear path is valid")
    }

    pub fn input_symbols(&self) -> Vec<&str> {
        self.input
            .iter()
            .map(|&l| self.isymbols.symbol(l).unwrap_or("<?>"))
            .collect()
    }

    pub fn output_symbols(&self) -> Vec<&str> {
        self.output
            .iter()
            .map(|&l| self.osymbols.symbol(l).unwrap_or("<?>"))
            .collect()
    }
}

/// Finds the minimum-weight accepting path.
///
/// The machine must be acyclic or have only non-negative weights. Among
/// paths of equal weight the one with the lexicographically smallest output
/// label sequence wins, then the smallest state-id sequence. On cyclic
/// machines, ties are first restricted to paths with the fewest arcs.
pub fn shortest_path(fst: &Fst) -> Result<Path> {
    let start = fst.start().ok_or(FstError::EmptyLanguage)?;
    let n = fst.num_states();
    let topo = topological_order(fst);

    let dist = match &topo {
        Some(order) => distance_to_final_acyclic(fst, order),
        None => distance_to_final_dijkstra(fst)?,
    };
    if dist[start].is_infinite() {
        return Err(FstError::EmptyLanguage);
    }

    let tight = |q: StateId, arc: &Arc| -> bool {
        !arc.weight.is_zero()
            && !dist[arc.nextstate].is_infinite()
            && close(arc.weight.value() + dist[arc.nextstate], dist[q])
    };
    let tight_final =
        |q: StateId| -> bool { fst.is_final(q) && close(fst.final_weight(q).value(), dist[q]) };

    // Order in which each state's successors are resolved before it.
    let (order, hops): (Vec<StateId>, Option<Vec<usize>>) = match topo {
        Some(order) => (order.into_iter().rev().collect(), None),
        None => {
            let hops = hops_to_final(fst, &tight, &tight_final);
            let mut order: Vec<StateId> = (0..n).filter(|&q| hops[q] != usize::MAX).collect();
            order.sort_by_key(|&q| (hops[q], q));
            (order, Some(hops))
        }
    };

    // best[q] = (output suffix, state suffix, choice); choice None = stop.
    let mut best: Vec<Option<(Vec<Label>, Vec<StateId>, Option<usize>)>> = vec![None; n];
    for &q in &order {
        let mut cand: Option<(Vec<Label>, Vec<StateId>, Option<usize>)> = None;
        if tight_final(q) {
            cand = Some((Vec::new(), vec![q], None));
        }
        for (i, arc) in fst.arcs(q).iter().enumerate() {
            if !tight(q, arc) {
                continue;
            }
            if let Some(h) = &hops {
                if h[arc.nextstate] >= h[q] {
                    continue;
                }
            }
            let Some((out, states, _)) = &best[arc.nextstate] else {
                continue;
            };
            let mut o = Vec::with_capacity(out.len() + 1);
            if arc.olabel != EPSILON {
                o.push(arc.olabel);
            }
            o.extend_from_slice(out);
            let mut s = Vec::with_capacity(states.len() + 1);
            s.push(q);
            s.extend_from_slice(states);
            let better = match &cand {
                None => true,
                Some((co, cs, _)) => (o.as_slice(), s.as_slice()).cmp(&(co, cs)) == Ordering::Less,
            };
            if better {
                cand = Some((o, s, Some(i)));
            }
        }
        best[q] = cand;
    }

    let mut states = vec![start];
    let mut arcs = Vec::new();
    let mut q = start;
    loop {
        let (_, _, choice) = best[q]
            .as_ref()
            .ok_or_else(|| FstError::Invalid("no optimal continuation".into()))?;
        match choice {
            None => break,
            Some(i) => {
                let arc = fst.arcs(q)[*i];
                arcs.push(arc);
                q = arc.nextstate;
                states.push(q);
            }
        }
    }
    let total_weight = arcs
        .iter()
        .fold(Weight::ONE, |acc, a| acc.times(a.weight))
        .times(fst.final_weight(q));
    Ok(Path {
        input: arcs.iter().map(|a| a.ilabel).filter(|&l| l != EPSILON).collect(),
        output: arcs.iter().map(|a| a.olabel).filter(|&l| l != EPSILON).collect(),
        states,
        arcs,
        total_weight,
        isymbols: fst.isymbols().clone(),
        osymbols: fst.osymbols().clone(),
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn distance_to_final_acyclic(fst: &Fst, order: &[StateId]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; fst.num_states()];
    for &q in order.iter().rev() {
        let mut d = fst.final_weight(q).value();
        for arc in fst.arcs(q) {
            if !arc.weight.is_zero() {
                d = d.min(arc.weight.value() + dist[arc.nextstate]);
            }
        }
        dist[q] = d;
    }
    dist
}

#[derive(PartialEq)]
struct Entry(f64, StateId);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn distance_to_final_dijkstra(fst: &Fst) -> Result<Vec<f64>> {
    let n = fst.num_states();
    let mut reverse: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); n];
    for q in fst.states() {
        for arc in fst.arcs(q) {
            if arc.weight.value() < 0.0 {
                return Err(FstError::Unsupported(
                    "shortest_path on a cyclic machine requires non-negative weights".into(),
                ));
            }
            if !arc.weight.is_zero() {
                reverse[arc.nextstate].push((q, arc.weight.value()));
            }
        }
        if fst.is_final(q) && fst.final_weight(q).value() < 0.0 {
            return Err(FstError::Unsupported(
                "shortest_path on a cyclic machine requires non-negative weights".into(),
            ));
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for q in fst.states() {
        if fst.is_final(q) {
            dist[q] = fst.final_weight(q).value();
            heap.push(Entry(dist[q], q));
        }
    }
    while let Some(Entry(d, q)) = heap.pop() {
        if d > dist[q] {
            continue;
        }
        for &(p, w) in &reverse[q] {
            let nd = d + w;
            if nd < dist[p] {
                dist[p] = nd;
                heap.push(Entry(nd, p));
            }
        }
    }
    Ok(dist)
}

fn hops_to_final(
    fst: &Fst,
    tight: &dyn Fn(StateId, &Arc) -> bool,
    tight_final: &dyn Fn(StateId) -> bool,
) -> Vec<usize> {
    let n = fst.num_states();
    let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for q in fst.states() {
        for arc in fst.arcs(q) {
            if tight(q, arc) {
                reverse[arc.nextstate].push(q);
            }
        }
    }
    let mut hops = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for q in fst.states() {
        if tight_final(q) {
            hops[q] = 0;
            queue.push_back(q);
        }
    }
    while let Some(q) = queue.pop_front() {
        for &p in &reverse[q] {
            if hops[p] == usize::MAX {
                hops[p] = hops[q] + 1;
                queue.push_back(p);
            }
        }
    }
    hops
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms() -> SymbolTable {
        SymbolTable::from_symbols(["a", "b", "c"])
    }

    #[test]
    fn picks_cheaper_of_two_paths() {
        let mut b = FstBuilder::new(syms(), syms());
        let s: Vec<_> = (0..3).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(5.0), s[1]));
        b.add_arc(s[0], Arc::new(2, 2, Weight::new(2.0), s[2]));
        b.set_final(s[1], Weight::ONE);
        b.set_final(s[2], Weight::ONE);
        let p = shortest_path(&b.build().unwrap()).unwrap();
        assert_eq!(p.total_weight, Weight::new(2.0));
        assert_eq!(p.output, vec![2]);
        assert_eq!(p.output_symbols(), vec!["b"]);
    }

    #[test]
    fn single_path_is_returned() {
        let mut b = FstBuilder::new(syms(), syms());
        let s: Vec<_> = (0..3).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 0, Weight::new(1.0), s[1]));
        b.add_arc(s[1], Arc::new(2, 3, Weight::new(1.0), s[2]));
        b.set_final(s[2], Weight::new(0.5));
        let fst = b.build().unwrap();
        let p = shortest_path(&fst).unwrap();
        assert_eq!(p.states, vec![0, 1, 2]);
        assert_eq!(p.input, vec![1, 2]);
        assert_eq!(p.output, vec![3]);
        assert_eq!(p.total_weight, Weight::new(2.5));
        let linear = p.to_fst();
        assert_eq!(linear.num_states(), 3);
        assert_eq!(linear.final_weight(2), Weight::new(0.5));
    }

    #[test]
    fn ties_prefer_smaller_output() {
        let mut b = FstBuilder::new(syms(), syms());
        let s: Vec<_> = (0..3).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 3, Weight::new(1.0), s[1]));
        b.add_arc(s[0], Arc::new(1, 2, Weight::new(1.0), s[2]));
        b.set_final(s[1], Weight::ONE);
        b.set_final(s[2], Weight::ONE);
        let p = shortest_path(&b.build().unwrap()).unwrap();
        assert_eq!(p.output, vec![2]);
    }

    #[test]
    fn cyclic_nonnegative() {
        let mut b = FstBuilder::new(syms(), syms());
        let s: Vec<_> = (0..2).map(|_| b.add_state()).collect();
        b.set_start(s[0]);
        b.add_arc(s[0], Arc::new(1, 1, Weight::new(0.0), s[0]));
        b.add_arc(s[0], Arc::new(2, 2, Weight::new(1.0), s[1]));
        b.set_final(s[1], Weight::ONE);
        let p = shortest_path(&b.build().unwrap()).unwrap();
        assert_eq!(p.output, vec![2]);
        assert_eq!(p.total_weight, Weight::new(1.0));
    }

    #[test]
    fn cyclic_negative_is_rejected() {
        let mut b = FstBuilder::new(syms(), syms());
        let s = b.add_state();
        b.set_start(s);
        b.set_final(s, Weight::ONE);
        b.add_arc(s, Arc::new(1, 1, Weight::new(-1.0), s));
        assert!(matches!(
            shortest_path(&b.build().unwrap()),
            Err(FstError::Unsupported(_))
        ));
    }

    #[test]
    fn empty_language() {
        let mut b = FstBuilder::new(syms(), syms());
        let s = b.add_state();
        b.set_start(s);
        assert!(matches!(
            shortest_path(&b.build().unwrap()),
            Err(FstError::EmptyLanguage)
        ));
        assert!(matches!(
            shortest_path(&Fst::empty(syms(), syms())),
            Err(FstError::EmptyLanguage)
        ));
    }
}
