//! Core algorithms for large-vocabulary chord recognition.
//!
//! Everything here is pure computation over in-memory data and builds without
//! `std`: the structured chord codec, constant-Q features, the conformer
//! network with hand-written gradients, class-reweighted loss, CRF decoding,
//! evaluation metrics and the training harness. File formats, audio IO and the
//! command line live in the `chordkit` crate.

#![no_std]
// `!(x >= lo)` is used on purpose so NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chord;
pub mod conformer;
pub mod decoder;
pub mod features;
pub mod harness;
pub mod metrics;
pub mod objective;
pub mod tensor;
pub mod vocab;

pub use chord::{
    compare, format_chord_symbol, parse_chord_symbol, MetricKind, PitchClass, PitchClassSet,
    StructuredChord, COMPONENT_SIZES, NUM_COMPONENTS,
};
pub use vocab::ChordVocabulary;
