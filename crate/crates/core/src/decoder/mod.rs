//! CTC beam-search decoding over T∘L∘G_uni with on-the-fly LM rescoring
//! and class-based contextual biasing.

mod emission;
mod graph;
mod search;

pub use emission::EmissionMatrix;
pub use graph::{build_decoding_graph, DecodingGraph};
pub use search::{decode, DecodeConfig, Decoder, Hypothesis};
