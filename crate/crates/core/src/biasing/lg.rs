use std::collections::{BTreeSet, HashSet};
use std::sync::Arc as Shared;

use crate::error::{Error, Result};
use crate::ngram::NgramModel;
use crate::tokenize::WordpieceModel;
use crate::wfst::{compose, shortest_paths, Arc, SymbolTable, Weight, Wfst, EPSILON};

use super::{PronLexicon, PronTokenizer};

/// Phone-sequence to wordpiece-sequence transducer through whole lexicon
/// words: a pronunciation-to-word loop composed with a word-to-spelling
/// loop.
#[derive(Clone, Debug)]
pub struct LgBaseline {
    pub fst: Wfst,
    pub phones: Shared<SymbolTable>,
    pieces: Shared<SymbolTable>,
}

impl LgBaseline {
    pub fn num_arcs(&self) -> usize {
        self.fst.num_arcs()
    }
}

/// Builds the baseline. Word arcs carry the word's unigram cost when
/// `unigram` is given.
pub fn build_lg_baseline(
    lexicon: &PronLexicon,
    wp: &WordpieceModel,
    unigram: Option<&NgramModel>,
) -> Result<LgBaseline> {
    if lexicon.is_empty() {
        return Err(Error::Config("empty pronunciation lexicon".into()));
    }
    let mut phones = SymbolTable::new();
    let set: BTreeSet<&str> = lexicon
        .values()
        .flatten()
        .flatten()
        .map(String::as_str)
        .collect();
    for p in set {
        phones.add(p);
    }
    let mut words = SymbolTable::new();
    for w in lexicon.keys() {
        words.add(w);
    }
    let phones = Shared::new(phones);
    let words = Shared::new(words);

    let mut l = Wfst::new();
    let hub = l.add_state();
    l.set_start(hub);
    l.set_final(hub, Weight::ONE);
    for (w, prons) in lexicon {
        let wl = words.id(w).expect("word registered");
        for pron in prons {
            let mut s = hub;
            for (i, p) in pron.iter().enumerate() {
                let next = if i + 1 == pron.len() { hub } else { l.add_state() };
                let pl = phones.id(p).expect("phone registered");
                let out = if i == 0 { wl } else { EPSILON };
                l.add_arc(s, Arc::new(pl, out, Weight::ONE, next));
                s = next;
            }
        }
    }
    l.set_input_symbols(Some(phones.clone()));
    l.set_output_symbols(Some(words.clone()));

    let mut g = Wfst::new();
    let hub = g.add_state();
    g.set_start(hub);
    g.set_final(hub, Weight::ONE);
    for (w, _) in lexicon {
        let wl = words.id(w).expect("word registered");
        let pieces = wp.tokenize_word(w)?;
        let cost = unigram.map_or(0.0, |m| -m.prob(&[], m.token_id(w)));
        let mut s = hub;
        for (i, &p) in pieces.iter().enumerate() {
            let next = if i + 1 == pieces.len() { hub } else { g.add_state() };
            let (inp, wt) = if i == 0 { (wl, cost) } else { (EPSILON, 0.0) };
            g.add_arc(s, Arc::new(inp, p, Weight::new(wt), next));
            s = next;
        }
    }
    g.set_input_symbols(Some(words));
    g.set_output_symbols(Some(wp.table().clone()));
    let fst = compose(&l, &g)?;
    Ok(LgBaseline {
        fst,
        phones,
        pieces: wp.table().clone(),
    })
}

impl PronTokenizer for LgBaseline {
    fn tokenizations(&self, pron: &[String], n: usize) -> Vec<Vec<String>> {
        let Some(ids) = pron.iter().map(|p| self.phones.id(p)).collect::<Option<Vec<_>>>() else {
            return Vec::new();
        };
        let mut input = Wfst::linear(&ids, &ids, Weight::ONE);
        input.set_output_symbols(Some(self.phones.clone()));
        let Ok(c) = compose(&input, &self.fst) else {
            return Vec::new();
        };
        let Ok(paths) = shortest_paths(&c, n.saturating_mul(4).max(n)) else {
            return Vec::new();
        };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for p in paths {
            let seq: Vec<String> = p
                .olabels
                .iter()
                .map(|&l| self.pieces.symbol(l).unwrap_or_default().to_string())
                .collect();
            if seen.insert(seq.clone()) {
                out.push(seq);
                if out.len() == n {
                    break;
                }
            }
        }
        out
    }
}
