use std::collections::{HashMap, VecDeque};

use crate::error::{FstError, Result};
use crate::fst::{connect, Arc, Fst, FstBuilder, StateId, EPSILON};

/// Epsilon filter state. `Both` is the initial state; `LeftOnly` is entered
/// after the left machine moved alone on an output epsilon, `RightOnly`
/// after the right machine moved alone on an input epsilon. The filter
/// forbids switching directly between the two solo modes, so each epsilon
/// interleaving is counted once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Filter {
    Both,
    LeftOnly,
    RightOnly,
}

/// Weighted composition `a ∘ b` over the tropical semiring.
///
/// The output alphabet of `a` must match the input alphabet of `b`. The
/// result is trimmed.
pub fn compose(a: &Fst, b: &Fst) -> Result<Fst> {
    if !a.osymbols().compatible(b.isymbols()) {
        return Err(FstError::AlphabetMismatch(
            "left output symbols differ from right input symbols".into(),
        ));
    }
    let isyms = a.isymbols().clone();
    let osyms = b.osymbols().clone();
    let (Some(sa), Some(sb)) = (a.start(), b.start()) else {
        return Ok(Fst::empty(isyms, osyms));
    };

    let mut out = FstBuilder::new(isyms, osyms);
    let mut ids: HashMap<(StateId, StateId, Filter), StateId> = HashMap::new();
    let mut queue = VecDeque::new();

    let mut intern = |key: (StateId, StateId, Filter),
                      out: &mut FstBuilder,
                      queue: &mut VecDeque<(StateId, StateId, Filter, StateId)>|
     -> StateId {
        *ids.entry(key).or_insert_with(|| {
            let id = out.add_state();
            queue.push_back((key.0, key.1, key.2, id));
            id
        })
    };

    let start = intern((sa, sb, Filter::Both), &mut out, &mut queue);
    out.set_start(start);

    while let Some((qa, qb, filter, id)) = queue.pop_front() {
        let fa = a.final_weight(qa);
        let fb = b.final_weight(qb);
        if !fa.is_zero() && !fb.is_zero() {
            out.set_final(id, fa.times(fb));
        }

        for ea in a.arcs(qa) {
            if ea.olabel == EPSILON {
                if filter != Filter::RightOnly {
                    let next = intern((ea.nextstate, qb, Filter::LeftOnly), &mut out, &mut queue);
                    out.add_arc(id, Arc::new(ea.ilabel, EPSILON, ea.weight, next));
                }
                if filter == Filter::Both {
                    for eb in b.arcs(qb).iter().filter(|e| e.ilabel == EPSILON) {
                        let next =
                            intern((ea.nextstate, eb.nextstate, Filter::Both), &mut out, &mut queue);
                        out.add_arc(
                            id,
                            Arc::new(ea.ilabel, eb.olabel, ea.weight.times(eb.weight), next),
                        );
                    }
                }
            } else {
                for eb in b.arcs(qb).iter().filter(|e| e.ilabel == ea.olabel) {
                    let next =
                        intern((ea.nextstate, eb.nextstate, Filter::Both), &mut out, &mut queue);
                    out.add_arc(
                        id,
                        Arc::new(ea.ilabel, eb.olabel, ea.weight.times(eb.weight), next),
                    );
                }
            }
        }
        if filter != Filter::LeftOnly {
            for eb in b.arcs(qb).iter().filter(|e| e.ilabel == EPSILON) {
                let next = intern((qa, eb.nextstate, Filter::RightOnly), &mut out, &mut queue);
                out.add_arc(id, Arc::new(EPSILON, eb.olabel, eb.weight, next));
            }
        }
    }

    Ok(connect(&out.build()?))
}
