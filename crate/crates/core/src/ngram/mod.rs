//! Backoff n-gram language models: Witten–Bell training, evaluation, ARPA
//! I/O, relative-entropy pruning, FST conversion and wordpiece priors.

mod arpa;
mod fst;
mod model;
mod prior;
mod prune;
mod train;

pub use arpa::{read_arpa, write_arpa};
pub use fst::{LmAutomaton, LmState};
pub use model::{vocabulary, Entry, NgramModel, BOS, BOS_ID, EOS, EOS_ID, UNK, UNK_ID};
pub use prior::{histogram_tsv, prior_histogram, prior_table, PriorTable};
pub use prune::{entropy_prune, history_prob, prune_delta};
pub use train::{apply_class_spans, train_ngram, train_weighted, ClassSpan, TrainConfig};
