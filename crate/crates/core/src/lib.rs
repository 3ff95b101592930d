//! Contextual biasing for subword-level sequence decoders.
//!
//! The pieces, roughly in pipeline order:
//!
//! - [`bpe`]: subword segmentation that keeps class tags atomic.
//! - [`relabel`]: inserting class tags into transcriptions by alignment
//!   against tagged recognizer output.
//! - [`mapper`]: rewriting rare words as common word sequences with the
//!   same pronunciation.
//! - [`bias`]: compiling a class's phrase list into a weighted
//!   subword-to-word transducer.
//! - [`decoder`]: beam search that enters a class transducer when a class
//!   tag is emitted, with score normalization between the two search spaces.
//! - [`eval`]: word error rate and bucketed reports.

pub mod bias;
pub mod bpe;
pub mod corpus;
pub mod decoder;
mod error;
pub mod eval;
pub mod mapper;
pub mod relabel;
pub mod tags;

pub use error::{Error, Result};
