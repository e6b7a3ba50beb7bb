use std::collections::HashMap;

use super::{Arc, Label, Wfst, EPSILON};

/// Maps `(ilabel, olabel)` pairs to fresh acceptor labels and back.
///
/// The pair `(ε, ε)` always encodes to ε.
#[derive(Clone, Debug, Default)]
pub struct EncodeTable {
    pairs: Vec<(Label, Label)>,
    index: HashMap<(Label, Label), Label>,
}

impl EncodeTable {
    pub fn new() -> Self {
        EncodeTable {
            pairs: vec![(EPSILON, EPSILON)],
            index: HashMap::from([((EPSILON, EPSILON), EPSILON)]),
        }
    }

    pub fn encode_pair(&mut self, ilabel: Label, olabel: Label) -> Label {
        if let Some(&l) = self.index.get(&(ilabel, olabel)) {
            return l;
        }
        let l = self.pairs.len() as Label;
        self.pairs.push((ilabel, olabel));
        self.index.insert((ilabel, olabel), l);
        l
    }

    pub fn decode_label(&self, label: Label) -> (Label, Label) {
        self.pairs[label as usize]
    }

    /// Encodes every arc of `fst`. Pairs are registered in sorted order so
    /// the code assignment does not depend on arc order.
    pub fn encode(&mut self, fst: &Wfst) -> Wfst {
        let mut pairs: Vec<(Label, Label)> = fst
            .states()
            .flat_map(|s| fst.arcs(s).iter().map(|a| (a.ilabel, a.olabel)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        for (i, o) in pairs {
            self.encode_pair(i, o);
        }
        let mut out = fst.clone();
        for s in fst.states() {
            for a in out.arcs_mut(s) {
                let l = self.index[&(a.ilabel, a.olabel)];
                a.ilabel = l;
                a.olabel = l;
            }
        }
        out.set_input_symbols(None);
        out.set_output_symbols(None);
        out
    }

    pub fn decode(&self, fst: &Wfst) -> Wfst {
        let mut out = fst.clone();
        for s in fst.states() {
            for a in out.arcs_mut(s) {
                let (i, o) = self.pairs[a.ilabel as usize];
                *a = Arc {
                    ilabel: i,
                    olabel: o,
                    ..*a
                };
            }
        }
        out
    }
}
