use crate::error::{Error, Result};
use crate::ngram::{NgramModel, EOS_ID};
use crate::tokenize::{Lexicon, OutputKind};
use crate::wfst::{compose, shortest_distance_to_final, Arc, StateId, Weight, Wfst};

/// The offline graph T∘L∘G_uni with what the decoder needs to interpret
/// its output labels.
#[derive(Clone, Debug)]
pub struct DecodingGraph {
    pub fst: Wfst,
    pub lexicon: Lexicon,
    /// Unigram cost of each lexicon output label as charged by the graph
    /// (zero for class exits and passthrough pieces).
    pub(crate) uni_costs: Vec<f64>,
    /// Unigram cost of `</s>`.
    pub(crate) uni_final: f64,
}

/// Single-state unigram acceptor over the lexicon outputs. Class exit
/// markers and passthrough pieces loop at no cost.
fn unigram_acceptor(lex: &Lexicon, g_uni: &NgramModel) -> (Wfst, Vec<f64>, f64) {
    let mut costs = vec![0.0; lex.outputs.len()];
    let mut g = Wfst::new();
    let s = g.add_state();
    g.set_start(s);
    for (label, sym) in lex.outputs.iter().skip(1) {
        let c = match lex.kind(label) {
            OutputKind::Word | OutputKind::ClassEntry(_) => -g_uni.prob(&[], g_uni.token_id(sym)),
            _ => 0.0,
        };
        costs[label as usize] = c;
        g.add_arc(s, Arc::new(label, label, Weight::new(c), s));
    }
    let fin = -g_uni.prob(&[], EOS_ID);
    g.set_final(s, Weight::new(fin));
    g.set_input_symbols(Some(lex.outputs.clone()));
    g.set_output_symbols(Some(lex.outputs.clone()));
    (g, costs, fin)
}

/// Moves costs toward the start with the potential
/// φ(q) = d(q) − d(start), d being the distance to a final state. Every
/// complete path keeps its cost, and a word's unigram cost is charged as
/// soon as its first pieces narrow the candidates, so the beam compares
/// word ends against word prefixes fairly.
fn push_weights(fst: &Wfst) -> Result<Wfst> {
    let d = shortest_distance_to_final(fst)?;
    let Some(start) = fst.start() else {
        return Ok(fst.clone());
    };
    let base = d[start as usize].value();
    let phi = |s: StateId| {
        let w = d[s as usize];
        if w.is_zero() { 0.0 } else { w.value() - base }
    };
    let mut out = fst.empty_like();
    for s in fst.states() {
        out.add_state();
        if fst.is_final(s) {
            out.set_final(s, Weight::new(fst.final_weight(s).value() - phi(s)));
        }
    }
    out.set_start(start);
    for s in fst.states() {
        for a in fst.arcs(s) {
            let w = a.weight.value() + phi(a.nextstate) - phi(s);
            out.add_arc(s, Arc::new(a.ilabel, a.olabel, Weight::new(w), a.nextstate));
        }
    }
    Ok(out)
}

/// Composes T, L and the unigram G_uni offline. Only unigram
/// probabilities of `g_uni` are used.
pub fn build_decoding_graph(t: &Wfst, lexicon: &Lexicon, g_uni: &NgramModel) -> Result<DecodingGraph> {
    let (g, uni_costs, uni_final) = unigram_acceptor(lexicon, g_uni);
    if uni_costs.iter().any(|c| !c.is_finite()) || !uni_final.is_finite() {
        return Err(Error::Config("unigram model assigns zero probability to a graph output".into()));
    }
    let lg = push_weights(&compose(&lexicon.fst, &g)?.connect())?;
    let mut fst = compose(t, &lg)?;
    if fst.is_empty() {
        return Err(Error::Config("decoding graph is empty".into()));
    }
    fst.arc_sort();
    Ok(DecodingGraph {
        fst,
        lexicon: lexicon.clone(),
        uni_costs,
        uni_final,
    })
}
