//! Dictionary-based data augmentation for low-resource translation, with a
//! desk-scale neural translation harness to measure what the synthetic data
//! buys.
//!
//! The crate covers the full loop:
//!
//! - [`corpus`]: tokenization, corpus and parallel-file loading, vocabularies;
//! - [`lexicon`]: bilingual word-translation dictionaries;
//! - [`augment`]: word-on-word translation of monolingual text, verbatim
//!   copying, back-translation, and deterministic mixing of the results;
//! - [`nmt`]: a GRU encoder-decoder with additive attention, trained with
//!   exact hand-derived gradients and decoded by beam search;
//! - [`metrics`]: corpus-level BLEU and vocabulary coverage;
//! - [`experiment`]: toy-language generation and the end-to-end runner that
//!   turns configs into report tables.
//!
//! Determinism is a design goal throughout: every random choice is driven
//! by an explicit seed, training is single-threaded, and the few
//! transcendental functions involved ([`fmath`]) are computed in portable
//! arithmetic, so a run reproduces byte-identical checkpoints and reports
//! anywhere.

pub mod augment;
pub mod corpus;
pub mod experiment;
pub mod fmath;
pub mod lexicon;
pub mod metrics;
pub mod nmt;
