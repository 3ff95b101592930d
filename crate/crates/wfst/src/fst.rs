use crate::error::{FstError, Result};
use crate::symbols::SymbolTable;
use crate::weight::Weight;

pub type StateId = usize;
pub type Label = u32;

pub const EPSILON: Label = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: Weight,
    pub nextstate: StateId,
}

impl Arc {
    pub fn new(ilabel: Label, olabel: Label, weight: Weight, nextstate: StateId) -> Self {
        Arc {
            ilabel,
            olabel,
            weight,
            nextstate,
        }
    }
}

/// An immutable weighted transducer. Build one with [`FstBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fst {
    arcs: Vec<Vec<Arc>>,
    finals: Vec<Weight>,
    start: Option<StateId>,
    isymbols: SymbolTable,
    osymbols: SymbolTable,
}

impl Fst {
    /// The canonical empty machine: no states, no start.
    pub fn empty(isymbols: SymbolTable, osymbols: SymbolTable) -> Self {
        Fst {
            arcs: Vec::new(),
            finals: Vec::new(),
            start: None,
            isymbols,
            osymbols,
        }
    }

    pub fn start(&self) -> Option<StateId> {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn states(&self) -> std::ops::Range<StateId> {
        0..self.arcs.len()
    }

    pub fn arcs(&self, state: StateId) -> &[Arc] {
        &self.arcs[state]
    }

    /// Final weight of `state`; [`Weight::ZERO`] for non-final states.
    pub fn final_weight(&self, state: StateId) -> Weight {
        self.finals[state]
    }

    pub fn is_final(&self, state: StateId) -> bool {
        !self.finals[state].is_zero()
    }

    pub fn isymbols(&self) -> &SymbolTable {
        &self.isymbols
    }

    pub fn osymbols(&self) -> &SymbolTable {
        &self.osymbols
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_none()
    }

    /// Reopens the machine as a builder (copying it).
    pub fn to_builder(&self) -> FstBuilder {
        FstBuilder {
            arcs: self.arcs.clone(),
            finals: self.finals.clone(),
            start: self.start,
            isymbols: self.isymbols.clone(),
            osymbols: self.osymbols.clone(),
        }
    }
}

/// Single-owner mutable construction surface for [`Fst`].
#[derive(Debug, Clone)]
pub struct FstBuilder {
    arcs: Vec<Vec<Arc>>,
    finals: Vec<Weight>,
    start: Option<StateId>,
    isymbols: SymbolTable,
    osymbols: SymbolTable,
}

impl FstBuilder {
    pub fn new(isymbols: SymbolTable, osymbols: SymbolTable) -> Self {
        FstBuilder {
            arcs: Vec::new(),
            finals: Vec::new(),
            start: None,
            isymbols,
            osymbols,
        }
    }

    pub fn add_state(&mut self) -> StateId {
        self.arcs.push(Vec::new());
        self.finals.push(Weight::ZERO);
        self.arcs.len() - 1
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn set_start(&mut self, state: StateId) {
        self.start = Some(state);
    }

    pub fn set_final(&mut self, state: StateId, weight: Weight) {
        self.finals[state] = weight;
    }

    pub fn add_arc(&mut self, src: StateId, arc: Arc) {
        self.arcs[src].push(arc);
    }

    pub fn isymbols_mut(&mut self) -> &mut SymbolTable {
        &mut self.isymbols
    }

    pub fn osymbols_mut(&mut self) -> &mut SymbolTable {
        &mut self.osymbols
    }

    /// Validates state and label references and freezes the machine.
    pub fn build(self) -> Result<Fst> {
        let n = self.arcs.len();
        match self.start {
            Some(s) if s >= n => {
                return Err(FstError::Invalid(format!("start state {s} out of range")))
            }
            None if n > 0 => return Err(FstError::Invalid("states but no start state".into())),
            _ => {}
        }
        for (src, arcs) in self.arcs.iter().enumerate() {
            for arc in arcs {
                if arc.nextstate >= n {
                    return Err(FstError::Invalid(format!(
                        "arc from {src} targets missing state {}",
                        arc.nextstate
                    )));
                }
                if !self.isymbols.contains_id(arc.ilabel) {
                    return Err(FstError::Invalid(format!(
                        "input label {} not in symbol table",
                        arc.ilabel
                    )));
                }
                if !self.osymbols.contains_id(arc.olabel) {
                    return Err(FstError::Invalid(format!(
                        "output label {} not in symbol table",
                        arc.olabel
                    )));
                }
                if arc.weight.value().is_nan() {
                    return Err(FstError::Invalid("NaN arc weight".into()));
                }
            }
        }
        Ok(Fst {
            arcs: self.arcs,
            finals: self.finals,
            start: self.start,
            isymbols: self.isymbols,
            osymbols: self.osymbols,
        })
    }
}

/// Removes states that are not both accessible from the start and
/// co-accessible to a final state, as well as arcs with zero weight.
/// Surviving states keep their relative order.
pub fn connect(fst: &Fst) -> Fst {
    let Some(start) = fst.start() else {
        return fst.clone();
    };
    let n = fst.num_states();
    let mut access = vec![false; n];
    let mut stack = vec![start];
    access[start] = true;
    while let Some(q) = stack.pop() {
        for arc in fst.arcs(q) {
            if !arc.weight.is_zero() && !access[arc.nextstate] {
                access[arc.nextstate] = true;
                stack.push(arc.nextstate);
            }
        }
    }
    let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for q in fst.states() {
        for arc in fst.arcs(q) {
            if !arc.weight.is_zero() {
                reverse[arc.nextstate].push(q);
            }
        }
    }
    let mut coaccess = vec![false; n];
    let mut stack: Vec<StateId> = fst.states().filter(|&q| fst.is_final(q)).collect();
    for &q in &stack {
        coaccess[q] = true;
    }
    while let Some(q) = stack.pop() {
        for &p in &reverse[q] {
            if !coaccess[p] {
                coaccess[p] = true;
                stack.push(p);
            }
        }
    }

    let keep: Vec<bool> = (0..n).map(|q| access[q] && coaccess[q]).collect();
    if !keep[start] {
        return Fst::empty(fst.isymbols().clone(), fst.osymbols().clone());
    }
    let mut map = vec![usize::MAX; n];
    let mut b = FstBuilder::new(fst.isymbols().clone(), fst.osymbols().clone());
    for q in 0..n {
        if keep[q] {
            map[q] = b.add_state();
        }
    }
    for q in 0..n {
        if !keep[q] {
            continue;
        }
        b.set_final(map[q], fst.final_weight(q));
        for arc in fst.arcs(q) {
            if keep[arc.nextstate] && !arc.weight.is_zero() {
                b.add_arc(map[q], Arc { nextstate: map[arc.nextstate], ..*arc });
            }
        }
    }
    b.set_start(map[start]);
    b.build().expect("connect preserves validity")
}
