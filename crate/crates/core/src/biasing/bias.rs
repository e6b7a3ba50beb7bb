use std::collections::{BTreeMap, HashMap};
use std::sync::Arc as Shared;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jointseq::{nbest, JointModel};
use crate::tokenize::{WordpieceModel, BOUNDARY};
use crate::wfst::{
    compose, determinize, minimize, read_text, remove_epsilons, write_text, Arc, EncodeTable,
    Label, StateId, SymbolTable, Weight, Wfst, EPSILON,
};

use super::{EntityList, PronLexicon, PronTokenizer};

/// Where a tokenization came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokSource {
    Orthographic,
    Pronunciation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenization {
    pub pieces: Vec<String>,
    pub source: TokSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcConfig {
    /// Pronunciations requested from the G2P model for words missing from
    /// the lexicon.
    pub n_pron: usize,
    /// Wordpiece sequences requested per pronunciation.
    pub n_tok: usize,
}

impl Default for LcConfig {
    fn default() -> Self {
        LcConfig {
            n_pron: 4,
            n_tok: 10,
        }
    }
}

/// L_c together with the tokenizations it encodes.
#[derive(Clone, Debug)]
pub struct LcOutput {
    pub fst: Wfst,
    pub tokenizations: BTreeMap<String, Vec<Tokenization>>,
    /// Words with neither a lexicon entry nor a G2P model.
    pub missing_pron: usize,
    /// Proposed sequences dropped for using unknown pieces or not starting
    /// a word.
    pub rejected: usize,
}

fn word_table(list: &EntityList) -> Shared<SymbolTable> {
    let mut t = SymbolTable::new();
    for w in list.words() {
        t.add(&w);
    }
    Shared::new(t)
}

/// Acceptor over entity word sequences; every entity costs ln N.
pub fn build_gc(list: &EntityList) -> Result<Wfst> {
    if list.is_empty() {
        return Err(Error::Config("empty entity list".into()));
    }
    let table = word_table(list);
    let cost = Weight::new((list.len() as f64).ln());
    let mut fst = Wfst::new();
    let root = fst.add_state();
    fst.set_start(root);
    let mut children: HashMap<(StateId, Label), StateId> = HashMap::new();
    for e in list.entities() {
        let mut node = root;
        for w in e.split(' ') {
            let l = table.id(w).expect("entity word registered");
            node = match children.get(&(node, l)) {
                Some(&n) => n,
                None => {
                    let n = fst.add_state();
                    fst.add_arc(node, Arc::new(l, l, Weight::ONE, n));
                    children.insert((node, l), n);
                    n
                }
            };
        }
        fst.set_final(node, cost);
    }
    fst.set_input_symbols(Some(table.clone()));
    fst.set_output_symbols(Some(table));
    Ok(fst)
}

fn acceptable(pieces: &[String], wp: &WordpieceModel) -> bool {
    !pieces.is_empty()
        && pieces[0].starts_with(BOUNDARY)
        && pieces.iter().all(|p| wp.id(p).is_some())
}

/// Wordpiece-to-word transducer for the entity words. Each word maps from
/// its orthographic tokenization and from the P2WP N-best tokenizations of
/// each of its pronunciations (lexicon first, else G2P N-best). All
/// alternatives cost nothing.
pub fn build_lc(
    list: &EntityList,
    wp: &WordpieceModel,
    lexicon: &PronLexicon,
    p2wp: Option<&dyn PronTokenizer>,
    g2p: Option<&JointModel>,
    cfg: &LcConfig,
) -> Result<LcOutput> {
    let table = word_table(list);
    let mut tokenizations: BTreeMap<String, Vec<Tokenization>> = BTreeMap::new();
    let mut missing_pron = 0;
    let mut rejected = 0;
    for word in list.words() {
        let mut toks = vec![Tokenization {
            pieces: wp.tokenize_word_str(&word)?,
            source: TokSource::Orthographic,
        }];
        if let Some(p2wp) = p2wp {
            let prons: Vec<Vec<String>> = match lexicon.get(&word) {
                Some(p) => p.clone(),
                None => match g2p {
                    Some(g2p) => {
                        let letters: Vec<String> =
                            word.to_lowercase().chars().map(String::from).collect();
                        nbest(g2p, &letters, cfg.n_pron)
                            .hyps
                            .into_iter()
                            .map(|(p, _)| p)
                            .collect()
                    }
                    None => {
                        warn!("no pronunciation for {word:?}; using its spelling only");
                        missing_pron += 1;
                        Vec::new()
                    }
                },
            };
            for pron in prons {
                for pieces in p2wp.tokenizations(&pron, cfg.n_tok) {
                    if !acceptable(&pieces, wp) {
                        rejected += 1;
                        continue;
                    }
                    if toks.iter().all(|t| t.pieces != pieces) {
                        toks.push(Tokenization {
                            pieces,
                            source: TokSource::Pronunciation,
                        });
                    }
                }
            }
        }
        tokenizations.insert(word, toks);
    }

    let mut fst = Wfst::new();
    let hub = fst.add_state();
    fst.set_start(hub);
    fst.set_final(hub, Weight::ONE);
    for (word, toks) in &tokenizations {
        let wl = table.id(word).expect("entity word registered");
        for t in toks {
            let mut s = hub;
            for (i, p) in t.pieces.iter().enumerate() {
                let pl = wp.id(p).expect("validated piece");
                let next = if i + 1 == t.pieces.len() {
                    hub
                } else {
                    fst.add_state()
                };
                let out = if i == 0 { wl } else { EPSILON };
                fst.add_arc(s, Arc::new(pl, out, Weight::ONE, next));
                s = next;
            }
        }
    }
    fst.set_input_symbols(Some(wp.table().clone()));
    fst.set_output_symbols(Some(table));
    Ok(LcOutput {
        fst,
        tokenizations,
        missing_pron,
        rejected,
    })
}

/// A per-class contextual FST mapping wordpiece sequences to entities.
#[derive(Clone, Debug)]
pub struct BiasFst {
    pub class: String,
    pub fst: Wfst,
    pub n_entities: usize,
    pub tokenizations: BTreeMap<String, Vec<Tokenization>>,
}

#[derive(Serialize, Deserialize)]
struct BiasMeta {
    class: String,
    n_entities: usize,
    tokenizations: BTreeMap<String, Vec<Tokenization>>,
}

/// compose → remove epsilons → encode → determinize → minimize → decode.
pub fn build_bias(lc: &LcOutput, gc: &Wfst, list: &EntityList) -> Result<BiasFst> {
    let composed = compose(&lc.fst, gc)?;
    let noeps = remove_epsilons(&composed)?;
    let mut enc = EncodeTable::new();
    let encoded = enc.encode(&noeps);
    let det = determinize(&encoded)?;
    let min = minimize(&det)?;
    let mut fst = enc.decode(&min).canonicalize();
    fst.set_input_symbols(lc.fst.input_symbols().cloned());
    fst.set_output_symbols(gc.output_symbols().cloned());
    Ok(BiasFst {
        class: list.class().to_string(),
        fst,
        n_entities: list.len(),
        tokenizations: lc.tokenizations.clone(),
    })
}

impl BiasFst {
    pub fn words(&self) -> &Shared<SymbolTable> {
        self.fst.output_symbols().expect("bias FST carries its word table")
    }

    /// AT&T text of the machine, its word table, and a JSON header.
    pub fn to_texts(&self) -> (String, String, String) {
        let meta = BiasMeta {
            class: self.class.clone(),
            n_entities: self.n_entities,
            tokenizations: self.tokenizations.clone(),
        };
        (
            write_text(&self.fst),
            self.words().to_text(),
            serde_json::to_string_pretty(&meta).unwrap_or_default(),
        )
    }

    pub fn from_texts(fst: &str, words: &str, meta: &str, wp: &WordpieceModel) -> Result<Self> {
        let meta: BiasMeta = serde_json::from_str(meta)?;
        let words = Shared::new(SymbolTable::from_text(words)?);
        let mut f = read_text(fst)?;
        for s in f.states() {
            for a in f.arcs(s) {
                if a.ilabel as usize >= wp.table().len() || a.olabel as usize >= words.len() {
                    return Err(Error::Config("bias FST label out of range".into()));
                }
            }
        }
        f.set_input_symbols(Some(wp.table().clone()));
        f.set_output_symbols(Some(words));
        Ok(BiasFst {
            class: meta.class,
            fst: f,
            n_entities: meta.n_entities,
            tokenizations: meta.tokenizations,
        })
    }
}
