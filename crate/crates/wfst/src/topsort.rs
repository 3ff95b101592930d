use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{FstError, Result};
use crate::fst::{Arc, Fst, FstBuilder, StateId};

/// Kahn's algorithm, always releasing the smallest available state id first.
/// Returns `None` if the machine has a cycle. Unreachable states are ordered
/// too, so the result is a permutation of all states.
pub fn topological_order(fst: &Fst) -> Option<Vec<StateId>> {
    let n = fst.num_states();
    let mut indegree = vec![0usize; n];
    for q in fst.states() {
        for arc in fst.arcs(q) {
            indegree[arc.nextstate] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<StateId>> = (0..n)
        .filter(|&q| indegree[q] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(q)) = ready.pop() {
        order.push(q);
        for arc in fst.arcs(q) {
            indegree[arc.nextstate] -= 1;
            if indegree[arc.nextstate] == 0 {
                ready.push(Reverse(arc.nextstate));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Renumbers states so that every arc goes from a lower to a higher id.
pub fn top_sort(fst: &Fst) -> Result<Fst> {
    let order = topological_order(fst)
        .ok_or_else(|| FstError::Unsupported("top_sort requires an acyclic machine".into()))?;
    let mut rank = vec![0; fst.num_states()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let mut b = FstBuilder::new(fst.isymbols().clone(), fst.osymbols().clone());
    for _ in 0..order.len() {
        b.add_state();
    }
    for &old in &order {
        b.set_final(rank[old], fst.final_weight(old));
        for arc in fst.arcs(old) {
            b.add_arc(
                rank[old],
                Arc {
                    nextstate: rank[arc.nextstate],
                    ..*arc
                },
            );
        }
    }
    if let Some(s) = fst.start() {
        b.set_start(rank[s]);
    }
    b.build()
}
