use std::collections::{BTreeSet, HashMap};

use crate::wfst::{Arc, Label, SymbolTable, Weight, Wfst, EPSILON};

use super::model::{NgramModel, BOS_ID, EOS_ID, UNK_ID};

pub type LmState = u32;

#[derive(Clone, Debug)]
struct Node {
    history: Vec<Label>,
    /// token -> (cost, next state)
    arcs: HashMap<Label, (f64, LmState)>,
    backoff: Option<(f64, LmState)>,
    final_cost: Option<f64>,
}

/// The backoff automaton of a model: one state per history that has
/// stored continuations. Costs are negated natural logs.
#[derive(Clone, Debug)]
pub struct LmAutomaton {
    nodes: Vec<Node>,
    start: LmState,
    vocab_len: usize,
}

impl LmAutomaton {
    pub fn new(model: &NgramModel) -> Self {
        let mut hs: BTreeSet<Vec<Label>> = BTreeSet::new();
        hs.insert(Vec::new());
        for n in 2..=model.order {
            for (k, _) in model.ngrams(n) {
                hs.insert(k[..n - 1].to_vec());
            }
        }
        // Shorter histories first so backoff targets precede their sources.
        let mut order: Vec<Vec<Label>> = hs.into_iter().collect();
        order.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let index: HashMap<Vec<Label>, LmState> = order
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i as LmState))
            .collect();
        let lookup = |seq: &[Label]| -> LmState {
            let keep = seq.len().min(model.order - 1);
            let mut s = &seq[seq.len() - keep..];
            loop {
                if let Some(&id) = index.get(s) {
                    return id;
                }
                s = &s[1..];
            }
        };
        let mut nodes: Vec<Node> = order
            .iter()
            .map(|h| Node {
                history: h.clone(),
                arcs: HashMap::new(),
                backoff: None,
                final_cost: None,
            })
            .collect();
        for (i, h) in order.iter().enumerate() {
            if !h.is_empty() {
                nodes[i].backoff = Some((-model.backoff_of(h), lookup(&h[1..])));
            }
            let n = h.len() + 1;
            if n > model.order {
                continue;
            }
            let lo = h.clone();
            for (k, e) in model.entries[n - 1].range(lo..) {
                if k[..h.len()] != h[..] {
                    break;
                }
                let w = k[h.len()];
                if w == EOS_ID {
                    nodes[i].final_cost = Some(-e.logp);
                } else if w != BOS_ID {
                    nodes[i].arcs.insert(w, (-e.logp, lookup(k)));
                }
            }
        }
        let start = if model.order > 1 { lookup(&[BOS_ID]) } else { 0 };
        LmAutomaton {
            nodes,
            start,
            vocab_len: model.vocab.len(),
        }
    }

    pub fn start(&self) -> LmState {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.nodes.len()
    }

    pub fn history(&self, s: LmState) -> &[Label] {
        &self.nodes[s as usize].history
    }

    /// Cost of `token` from state `s` following backoff arcs as needed, and
    /// the resulting state. `</s>` returns the state unchanged.
    pub fn score(&self, mut s: LmState, token: Label) -> (f64, LmState) {
        let token = if token == EPSILON || token as usize >= self.vocab_len {
            UNK_ID
        } else {
            token
        };
        let mut acc = 0.0;
        loop {
            let node = &self.nodes[s as usize];
            if token == EOS_ID {
                if let Some(c) = node.final_cost {
                    return (acc + c, s);
                }
            } else if let Some(&(c, next)) = node.arcs.get(&token) {
                return (acc + c, next);
            }
            match node.backoff {
                Some((b, lower)) => {
                    acc += b;
                    s = lower;
                }
                None => {
                    // Only the empty history lacks a backoff arc; a token
                    // pruned from it scores as <unk>.
                    let c = match node.arcs.get(&UNK_ID) {
                        Some(&(c, _)) if token != UNK_ID => c,
                        _ => f64::INFINITY,
                    };
                    return (acc + c, s);
                }
            }
        }
    }

    /// The backoff FST. Arcs are labelled through `map`; tokens it rejects
    /// are omitted.
    pub fn to_fst_mapped(&self, map: impl Fn(Label) -> Option<Label>) -> Wfst {
        let mut fst = Wfst::new();
        for _ in &self.nodes {
            fst.add_state();
        }
        fst.set_start(self.start);
        for (i, node) in self.nodes.iter().enumerate() {
            let s = i as u32;
            let mut arcs: Vec<(&Label, &(f64, LmState))> = node.arcs.iter().collect();
            arcs.sort_by_key(|(l, _)| **l);
            for (&w, &(c, next)) in arcs {
                if let Some(l) = map(w) {
                    fst.add_arc(s, Arc::new(l, l, Weight::new(c), next));
                }
            }
            if let Some((b, lower)) = node.backoff {
                fst.add_arc(s, Arc::new(EPSILON, EPSILON, Weight::new(b), lower));
            }
            if let Some(c) = node.final_cost {
                fst.set_final(s, Weight::new(c));
            }
        }
        fst
    }
}

impl NgramModel {
    /// G as an acceptor over the model vocabulary: one state per history,
    /// epsilon backoff arcs, and `</s>` as final weight.
    pub fn to_fst(&self) -> Wfst {
        let mut fst = LmAutomaton::new(self).to_fst_mapped(Some);
        fst.set_input_symbols(Some(self.vocab.clone()));
        fst.set_output_symbols(Some(self.vocab.clone()));
        fst
    }

    /// Like [`NgramModel::to_fst`] but labelled with ids from `table`
    /// (matched by symbol string). Tokens absent from `table` are dropped.
    pub fn to_fst_with_table(&self, table: &std::sync::Arc<SymbolTable>) -> Wfst {
        let vocab = self.vocab.clone();
        let mut fst = LmAutomaton::new(self).to_fst_mapped(|w| table.id(vocab.symbol(w)?));
        fst.set_input_symbols(Some(table.clone()));
        fst.set_output_symbols(Some(table.clone()));
        fst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::{train_ngram, TrainConfig};

    #[test]
    fn unigram_model_is_single_state() {
        let corpus = vec![vec!["a", "b"], vec!["b"]];
        let m = train_ngram(&corpus, &TrainConfig::new(1)).unwrap();
        let fst = m.to_fst();
        assert_eq!(fst.num_states(), 1);
        // <unk>, a, b
        assert_eq!(fst.num_arcs(), 3);
        assert!(fst.is_final(0));
    }

    #[test]
    fn automaton_matches_evaluator() {
        let corpus = vec![vec!["a", "b", "c"], vec!["b", "a"], vec!["c", "b", "a", "b"]];
        let m = train_ngram(&corpus, &TrainConfig::new(3)).unwrap();
        let lm = LmAutomaton::new(&m);
        let sent: Vec<Label> = ["a", "b", "a", "c", "zz"].iter().map(|t| m.token_id(t)).collect();
        let mut s = lm.start();
        let mut cost = 0.0;
        for &t in &sent {
            let (c, n) = lm.score(s, t);
            cost += c;
            s = n;
        }
        cost += lm.score(s, EOS_ID).0;
        assert!((cost + m.sentence_logprob(&sent)).abs() < 1e-9);
    }
}
