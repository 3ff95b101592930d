//! Weighted finite-state transducers over the tropical semiring.
//!
//! Machines are immutable once built. Every algorithm takes its input by
//! reference and returns a fresh [`Fst`], so a compiled machine can be shared
//! freely between threads.
//!
//! The supported algebra is deliberately small: composition with an
//! epsilon filter, determinization and minimization of acyclic machines,
//! single shortest path, topological sorting, and exhaustive relation
//! enumeration for testing.

mod compose;
mod determinize;
mod error;
mod fst;
mod minimize;
mod relation;
mod shortest_path;
mod symbols;
pub mod text;
mod topsort;
mod weight;

pub use compose::compose;
pub use determinize::{determinize, is_deterministic, is_input_deterministic};
pub use error::{FstError, Result};
pub use fst::{connect, Arc, Fst, FstBuilder, Label, StateId, EPSILON};
pub use minimize::minimize;
pub use relation::{enumerate_relation, Relation};
pub use shortest_path::{shortest_path, Path};
pub use symbols::{SymbolTable, EPSILON_SYMBOL};
pub use topsort::{top_sort, topological_order};
pub use weight::Weight;
