//! Weighted finite-state toolkit and CTC decoder for personalized speech
//! recognition: class-based contextual biasing, wordpiece prior
//! normalization and pronunciation-driven wordpiece tokenization.

pub mod biasing;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod jointseq;
pub mod ngram;
pub mod pipeline;
pub mod simulate;
pub mod tokenize;
pub mod wfst;

pub use error::{Error, Result};
