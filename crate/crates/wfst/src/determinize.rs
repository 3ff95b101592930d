use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::error::{FstError, Result};
use crate::fst::{Arc, Fst, FstBuilder, Label, StateId, EPSILON};
use crate::topsort::topological_order;
use crate::weight::Weight;

/// Residual weights are compared after rounding to this grid when deciding
/// whether two subsets are the same determinized state.
const QUANTUM: f64 = 1e-12;

/// A composite `(ilabel, olabel)` symbol. `(0, 0)` is the only epsilon.
type PairLabel = (Label, Label);

type Subset = Vec<(StateId, f64)>;
type SubsetKey = Vec<(StateId, i64)>;

/// Determinizes an acyclic transducer over the tropical semiring.
///
/// Each arc's `(ilabel, olabel)` pair is treated as one composite symbol and
/// the resulting weighted acceptor is determinized by the subset
/// construction with residual weights. The output therefore has at most one
/// arc per `(ilabel, olabel)` pair leaving any state and no `ε:ε` arcs, and
/// it realizes the same weighted relation as the input, where each string
/// pair keeps its minimum path weight.
pub fn determinize(fst: &Fst) -> Result<Fst> {
    let order = topological_order(fst)
        .ok_or_else(|| FstError::Unsupported("determinize requires an acyclic machine".into()))?;
    let Some(start) = fst.start() else {
        return Ok(fst.clone());
    };
    let mut rank = vec![0usize; fst.num_states()];
    for (r, &q) in order.iter().enumerate() {
        rank[q] = r;
    }

    let mut out = FstBuilder::new(fst.isymbols().clone(), fst.osymbols().clone());
    let mut ids: HashMap<SubsetKey, StateId> = HashMap::new();
    let mut queue: VecDeque<(Subset, StateId)> = VecDeque::new();

    let initial = epsilon_closure(fst, &rank, vec![(start, 0.0)]);
    let s0 = out.add_state();
    ids.insert(key(&initial), s0);
    out.set_start(s0);
    queue.push_back((initial, s0));

    while let Some((subset, id)) = queue.pop_front() {
        let mut final_weight = Weight::ZERO;
        let mut by_label: BTreeMap<PairLabel, Vec<(StateId, f64)>> = BTreeMap::new();
        for &(q, residual) in &subset {
            let fw = fst.final_weight(q);
            if !fw.is_zero() {
                final_weight = final_weight.plus(Weight::new(residual + fw.value()));
            }
            for arc in fst.arcs(q) {
                if arc.weight.is_zero() || (arc.ilabel == EPSILON && arc.olabel == EPSILON) {
                    continue;
                }
                by_label
                    .entry((arc.ilabel, arc.olabel))
                    .or_default()
                    .push((arc.nextstate, residual + arc.weight.value()));
            }
        }
        out.set_final(id, final_weight);

        for ((ilabel, olabel), targets) in by_label {
            let best = targets
                .iter()
                .map(|&(_, w)| w)
                .fold(f64::INFINITY, f64::min);
            let mut next: BTreeMap<StateId, f64> = BTreeMap::new();
            for (q, w) in targets {
                let r = w - best;
                next.entry(q)
                    .and_modify(|old| *old = old.min(r))
                    .or_insert(r);
            }
            let next = epsilon_closure(fst, &rank, next.into_iter().collect());
            let k = key(&next);
            let target = match ids.get(&k) {
                Some(&t) => t,
                None => {
                    let t = out.add_state();
                    ids.insert(k, t);
                    queue.push_back((next, t));
                    t
                }
            };
            out.add_arc(id, Arc::new(ilabel, olabel, Weight::new(best), target));
        }
    }
    out.build()
}

/// Extends a subset along `ε:ε` arcs, keeping the minimum residual per
/// state. States are relaxed in topological order, which is exact for
/// acyclic machines.
fn epsilon_closure(fst: &Fst, rank: &[usize], seed: Subset) -> Subset {
    let mut dist: HashMap<StateId, f64> = seed.iter().copied().collect();
    let mut reached: HashSet<StateId> = dist.keys().copied().collect();
    let mut stack: Vec<StateId> = dist.keys().copied().collect();
    while let Some(q) = stack.pop() {
        for arc in fst.arcs(q) {
            if arc.ilabel == EPSILON
                && arc.olabel == EPSILON
                && !arc.weight.is_zero()
                && reached.insert(arc.nextstate)
            {
                stack.push(arc.nextstate);
            }
        }
    }
    let mut ordered: Vec<StateId> = reached.into_iter().collect();
    ordered.sort_by_key(|&q| rank[q]);
    for &q in &ordered {
        let Some(&dq) = dist.get(&q) else { continue };
        for arc in fst.arcs(q) {
            if arc.ilabel == EPSILON && arc.olabel == EPSILON && !arc.weight.is_zero() {
                let w = dq + arc.weight.value();
                dist.entry(arc.nextstate)
                    .and_modify(|d| *d = d.min(w))
                    .or_insert(w);
            }
        }
    }
    let mut subset: Subset = dist.into_iter().collect();
    subset.sort_by_key(|&(q, _)| q);
    subset
}

fn key(subset: &Subset) -> SubsetKey {
    subset
        .iter()
        .map(|&(q, r)| (q, (r / QUANTUM).round() as i64))
        .collect()
}

/// True when no state has two arcs with the same `(ilabel, olabel)` pair and
/// there are no `ε:ε` arcs; the shape produced by [`determinize`].
pub fn is_deterministic(fst: &Fst) -> bool {
    fst.states().all(|q| {
        let mut seen = HashSet::new();
        fst.arcs(q).iter().all(|a| {
            !(a.ilabel == EPSILON && a.olabel == EPSILON) && seen.insert((a.ilabel, a.olabel))
        })
    })
}

/// True when no state has two arcs with the same input label and no arc has
/// an epsilon input. Stricter than [`is_deterministic`]; it holds for the
/// output of [`determinize`] whenever the input relation is a function of
/// the input string with outputs aligned to inputs.
pub fn is_input_deterministic(fst: &Fst) -> bool {
    fst.states().all(|q| {
        let mut seen = HashSet::new();
        fst.arcs(q)
            .iter()
            .all(|a| a.ilabel != EPSILON && seen.insert(a.ilabel))
    })
}
