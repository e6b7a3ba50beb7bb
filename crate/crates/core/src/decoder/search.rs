use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::biasing::BiasFst;
use crate::error::{Error, Result};
use crate::ngram::{LmAutomaton, LmState, NgramModel, EOS_ID};
use crate::tokenize::OutputKind;
use crate::wfst::{Label, StateId, EPSILON};

use super::{DecodingGraph, EmissionMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Hypotheses costlier than the frame's best by more than this are
    /// dropped.
    pub beam: f64,
    pub max_active: usize,
    /// Weight of the (G − G_uni) rescoring delta.
    pub lm_scale: f64,
    pub nbest: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam: 16.0,
            max_active: 2000,
            lm_scale: 1.0,
            nbest: 1,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam.is_nan() || self.beam <= 0.0 {
            return Err(Error::Config(format!("beam {} must be > 0", self.beam)));
        }
        if self.max_active < 1 {
            return Err(Error::Config("max_active must be at least 1".into()));
        }
        if !(self.lm_scale >= 0.0 && self.lm_scale.is_finite()) {
            return Err(Error::Config(format!("lm_scale {} must be >= 0", self.lm_scale)));
        }
        if self.nbest < 1 {
            return Err(Error::Config("nbest must be at least 1".into()));
        }
        Ok(())
    }

    /// No pruning at all; for exhaustive checks on toy inputs.
    pub fn exhaustive() -> Self {
        DecodeConfig {
            beam: f64::INFINITY,
            max_active: usize::MAX,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Output words with entities spelled out.
    pub words: Vec<String>,
    /// CTC-collapsed wordpieces.
    pub pieces: Vec<String>,
    /// Tokens scored by the external LM (class regions as placeholders).
    pub lm_tokens: Vec<String>,
    pub cost: f64,
    /// Total rescoring delta applied, `lm_scale × (G − G_uni)`.
    pub lm_delta: f64,
}

impl Hypothesis {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// Small deterministic hasher for packed integer keys.
#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }

    fn write_u32(&mut self, v: u32) {
        self.write_u64(v as u64);
    }
}

type FastMap<K, V> = HashMap<K, V, BuildHasherDefault<KeyHasher>>;

const NO_BIAS: u64 = u64::MAX;
const NO_NODE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    graph: StateId,
    lm: LmState,
    bias: u64,
}

#[derive(Clone, Copy, Debug)]
struct Tok {
    key: Key,
    cost: f64,
    node: u32,
}

#[derive(Clone, Copy, Debug)]
enum Out {
    None,
    Word(Label),
    Entity(usize, Label),
    Class(usize),
}

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    frame_label: Label,
    out: Out,
    delta: f64,
}

/// How an output label of the graph affects decoder state.
#[derive(Clone, Copy, Debug)]
enum Action {
    None,
    Word { g: Label, uni: f64 },
    Enter(usize),
    Exit { class: usize, g: Label, uni: f64 },
    Piece(Label),
}

#[derive(Default)]
struct TokenSet {
    toks: Vec<Tok>,
    index: FastMap<Key, usize>,
    best: f64,
}

impl TokenSet {
    fn new() -> Self {
        TokenSet {
            best: f64::INFINITY,
            ..Default::default()
        }
    }

    /// Inserts or improves; returns the slot when something changed.
    fn offer(&mut self, key: Key, cost: f64, node: u32) -> Option<usize> {
        if cost < self.best {
            self.best = cost;
        }
        match self.index.get(&key) {
            Some(&i) => {
                if cost < self.toks[i].cost {
                    self.toks[i].cost = cost;
                    self.toks[i].node = node;
                    Some(i)
                } else {
                    None
                }
            }
            None => {
                self.index.insert(key, self.toks.len());
                self.toks.push(Tok { key, cost, node });
                Some(self.toks.len() - 1)
            }
        }
    }
}

/// Frame-synchronous beam search over a decoding graph with on-the-fly
/// LM rescoring and per-class bias FSTs.
pub struct Decoder<'a> {
    graph: &'a DecodingGraph,
    g: &'a NgramModel,
    lm: LmAutomaton,
    biases: Vec<Option<&'a BiasFst>>,
    actions: Vec<Action>,
    /// Index of the first non-epsilon-input arc per graph state.
    eps_end: Vec<u32>,
    cfg: DecodeConfig,
}

impl<'a> Decoder<'a> {
    pub fn new(
        graph: &'a DecodingGraph,
        g: &'a NgramModel,
        biases: &'a [BiasFst],
        cfg: DecodeConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let lex = &graph.lexicon;
        let mut slots: Vec<Option<&BiasFst>> = vec![None; lex.classes.len()];
        for b in biases {
            if let Some(i) = lex.classes.iter().position(|c| *c == b.class) {
                if b.fst.input_symbols().map(|t| t.len()) != graph.fst.input_symbols().map(|t| t.len()) {
                    return Err(Error::Config(format!(
                        "bias FST for {} uses a different wordpiece table",
                        b.class
                    )));
                }
                slots[i] = Some(b);
            }
        }
        let mut entry_label = vec![0; lex.classes.len()];
        let mut actions = Vec::with_capacity(lex.outputs.len());
        for (label, sym) in lex.outputs.iter() {
            let a = match lex.kind(label) {
                OutputKind::Epsilon => Action::None,
                OutputKind::Word => Action::Word {
                    g: g.token_id(sym),
                    uni: graph.uni_costs[label as usize],
                },
                OutputKind::ClassEntry(c) => {
                    entry_label[c] = label;
                    Action::Enter(c)
                }
                OutputKind::ClassExit(c) => Action::Exit {
                    class: c,
                    g: 0,
                    uni: 0.0,
                },
                OutputKind::Piece(p) => Action::Piece(p),
            };
            actions.push(a);
        }
        for a in actions.iter_mut() {
            if let Action::Exit { class, g: gl, uni } = a {
                let name = &lex.classes[*class];
                *gl = g.token_id(name);
                *uni = graph.uni_costs[entry_label[*class] as usize];
            }
        }
        // A class reachable in the graph needs a bias FST.
        let fst = &graph.fst;
        for s in fst.states() {
            for arc in fst.arcs(s) {
                if let Some(Action::Enter(c)) = actions.get(arc.olabel as usize) {
                    if slots[*c].is_none() {
                        return Err(Error::MissingBias(lex.classes[*c].clone()));
                    }
                }
            }
        }
        let eps_end = fst
            .states()
            .map(|s| fst.arcs(s).partition_point(|a| a.ilabel == EPSILON) as u32)
            .collect();
        Ok(Decoder {
            graph,
            g,
            lm: LmAutomaton::new(g),
            biases: slots,
            actions,
            eps_end,
            cfg,
        })
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.cfg
    }

    /// Applies the effect of output `olabel` to a hypothesis; pushes every
    /// resulting `(key, cost, out, delta)`.
    fn advance(&self, key: Key, cost: f64, olabel: Label, graph_next: StateId, out: &mut Vec<(Key, f64, Out, f64)>) {
        let next = Key {
            graph: graph_next,
            ..key
        };
        match self.actions[olabel as usize] {
            Action::None => out.push((next, cost, Out::None, 0.0)),
            Action::Word { g, uni } => {
                let (c, lm) = self.lm.score(key.lm, g);
                let delta = self.cfg.lm_scale * (c - uni);
                if delta.is_finite() {
                    out.push((Key { lm, ..next }, cost + delta, Out::Word(olabel), delta));
                }
            }
            Action::Enter(class) => {
                let b = self.biases[class].expect("checked at construction");
                if let Some(start) = b.fst.start() {
                    let bias = ((class as u64) << 32) | start as u64;
                    out.push((Key { bias, ..next }, cost, Out::None, 0.0));
                }
            }
            Action::Piece(p) => {
                if key.bias == NO_BIAS {
                    return;
                }
                let class = (key.bias >> 32) as usize;
                let bs = key.bias as u32;
                let b = self.biases[class].expect("active bias exists");
                let arcs = b.fst.arcs(bs);
                let lo = arcs.partition_point(|a| a.ilabel < p);
                for a in arcs[lo..].iter().take_while(|a| a.ilabel == p) {
                    let bias = ((class as u64) << 32) | a.nextstate as u64;
                    let o = if a.olabel == EPSILON {
                        Out::None
                    } else {
                        Out::Entity(class, a.olabel)
                    };
                    out.push((Key { bias, ..next }, cost + a.weight.value(), o, 0.0));
                }
            }
            Action::Exit { class, g, uni } => {
                if key.bias == NO_BIAS {
                    return;
                }
                let b = self.biases[class].expect("active bias exists");
                let fw = b.fst.final_weight(key.bias as u32);
                if fw.is_zero() {
                    return;
                }
                let (c, lm) = self.lm.score(key.lm, g);
                let delta = self.cfg.lm_scale * (c - uni);
                if delta.is_finite() {
                    out.push((
                        Key {
                            lm,
                            bias: NO_BIAS,
                            ..next
                        },
                        cost + fw.value() + delta,
                        Out::Class(class),
                        delta,
                    ));
                }
            }
        }
    }

    fn closure(&self, set: &mut TokenSet, nodes: &mut Vec<Node>, work: &mut Vec<usize>, buf: &mut Vec<(Key, f64, Out, f64)>) {
        let mut head = 0;
        while head < work.len() {
            let tok = set.toks[work[head]];
            head += 1;
            let cutoff = set.best + self.cfg.beam;
            if tok.cost > cutoff {
                continue;
            }
            let arcs = self.graph.fst.arcs(tok.key.graph);
            for arc in &arcs[..self.eps_end[tok.key.graph as usize] as usize] {
                buf.clear();
                self.advance(tok.key, tok.cost + arc.weight.value(), arc.olabel, arc.nextstate, buf);
                for &(k, c, out, delta) in buf.iter() {
                    if c > set.best + self.cfg.beam {
                        continue;
                    }
                    nodes.push(Node {
                        parent: tok.node,
                        frame_label: EPSILON,
                        out,
                        delta,
                    });
                    if let Some(i) = set.offer(k, c, nodes.len() as u32 - 1) {
                        work.push(i);
                    }
                }
            }
        }
        work.clear();
    }

    fn prune(&self, set: TokenSet) -> Vec<Tok> {
        let cutoff = set.best + self.cfg.beam;
        let mut toks: Vec<Tok> = set.toks.into_iter().filter(|t| t.cost <= cutoff).collect();
        toks.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.key.cmp(&b.key)));
        toks.truncate(self.cfg.max_active);
        toks
    }

    pub fn decode(&self, em: &EmissionMatrix) -> Result<Vec<Hypothesis>> {
        let table_len = self.graph.fst.input_symbols().map_or(0, |t| t.len());
        if em.vocab() + 1 != table_len {
            return Err(Error::Config(format!(
                "emission matrix has {} labels but the graph expects {}",
                em.vocab(),
                table_len.saturating_sub(1)
            )));
        }
        let Some(start) = self.graph.fst.start() else {
            return Ok(Vec::new());
        };
        let mut nodes: Vec<Node> = Vec::new();
        let mut work = Vec::new();
        let mut buf = Vec::new();
        let mut set = TokenSet::new();
        let init = Key {
            graph: start,
            lm: self.lm.start(),
            bias: NO_BIAS,
        };
        if let Some(i) = set.offer(init, 0.0, NO_NODE) {
            work.push(i);
        }
        self.closure(&mut set, &mut nodes, &mut work, &mut buf);
        let mut cur = self.prune(set);

        for t in 0..em.frames() {
            let mut next = TokenSet::new();
            for tok in &cur {
                let gs = tok.key.graph;
                let arcs = self.graph.fst.arcs(gs);
                for arc in &arcs[self.eps_end[gs as usize] as usize..] {
                    let c = tok.cost + em.cost(t, arc.ilabel) as f64 + arc.weight.value();
                    if c > next.best + self.cfg.beam {
                        continue;
                    }
                    buf.clear();
                    self.advance(tok.key, c, arc.olabel, arc.nextstate, &mut buf);
                    for &(k, c2, out, delta) in buf.iter() {
                        if c2 > next.best + self.cfg.beam {
                            continue;
                        }
                        nodes.push(Node {
                            parent: tok.node,
                            frame_label: arc.ilabel,
                            out,
                            delta,
                        });
                        if let Some(i) = next.offer(k, c2, nodes.len() as u32 - 1) {
                            work.push(i);
                        }
                    }
                }
            }
            self.closure(&mut next, &mut nodes, &mut work, &mut buf);
            cur = self.prune(next);
            if cur.is_empty() {
                return Ok(Vec::new());
            }
        }

        let mut finals = self.finals(&cur, true);
        if finals.is_empty() {
            // Nothing reached a final state inside the beam: fall back to
            // the surviving partial hypotheses.
            debug!("no final hypothesis survived; using partial hypotheses");
            finals = self.finals(&cur, false);
        }
        let mut seen = HashSet::new();
        let mut hyps = Vec::new();
        for (cost, delta, _, node) in finals {
            let h = self.traceback(&nodes, node, cost, delta);
            if seen.insert(h.words.clone()) {
                hyps.push(h);
                if hyps.len() == self.cfg.nbest {
                    break;
                }
            }
        }
        Ok(hyps)
    }

    /// `(total cost, final delta, key, node)` of the end-of-utterance
    /// candidates. Without `strict`, hypotheses inside a class region or
    /// at non-final graph states are accepted at no final cost.
    fn finals(&self, cur: &[Tok], strict: bool) -> Vec<(f64, f64, Key, u32)> {
        let mut finals = Vec::new();
        for tok in cur {
            let fw = self.graph.fst.final_weight(tok.key.graph);
            let fw = if strict {
                if tok.key.bias != NO_BIAS || fw.is_zero() {
                    continue;
                }
                fw.value()
            } else if fw.is_zero() {
                0.0
            } else {
                fw.value()
            };
            let (c, _) = self.lm.score(tok.key.lm, EOS_ID);
            let delta = self.cfg.lm_scale * (c - self.graph.uni_final);
            let delta = if delta.is_finite() {
                delta
            } else if strict {
                continue;
            } else {
                0.0
            };
            finals.push((tok.cost + fw + delta, delta, tok.key, tok.node));
        }
        finals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        finals
    }

    fn traceback(&self, nodes: &[Node], mut node: u32, cost: f64, final_delta: f64) -> Hypothesis {
        let mut chain = Vec::new();
        while node != NO_NODE {
            chain.push(nodes[node as usize]);
            node = nodes[node as usize].parent;
        }
        chain.reverse();
        let lex = &self.graph.lexicon;
        let wp_table = self.graph.fst.input_symbols();
        let mut words = Vec::new();
        let mut lm_tokens = Vec::new();
        let mut frames = Vec::new();
        let mut lm_delta = final_delta;
        for n in &chain {
            if n.frame_label != EPSILON {
                frames.push(n.frame_label);
            }
            lm_delta += n.delta;
            match n.out {
                Out::None => {}
                Out::Word(l) => {
                    let w = lex.outputs.symbol(l).unwrap_or_default();
                    words.push(w.to_string());
                    let g = self.g.token_id(w);
                    lm_tokens.push(self.g.vocab().symbol(g).unwrap_or_default().to_string());
                }
                Out::Entity(c, l) => {
                    let b = self.biases[c].expect("bias present");
                    words.push(b.words().symbol(l).unwrap_or_default().to_string());
                }
                Out::Class(c) => lm_tokens.push(lex.classes[c].clone()),
            }
        }
        let blank = 1;
        let mut pieces = Vec::new();
        let mut prev = None;
        for &f in &frames {
            if Some(f) != prev && f != blank {
                pieces.push(
                    wp_table
                        .and_then(|t| t.symbol(f))
                        .unwrap_or_default()
                        .to_string(),
                );
            }
            prev = Some(f);
        }
        Hypothesis {
            words,
            pieces,
            lm_tokens,
            cost,
            lm_delta,
        }
    }
}

/// One-shot convenience wrapper around [`Decoder`].
pub fn decode(
    em: &EmissionMatrix,
    graph: &DecodingGraph,
    g: &NgramModel,
    biases: &[BiasFst],
    cfg: &DecodeConfig,
) -> Result<Vec<Hypothesis>> {
    Decoder::new(graph, g, biases, *cfg)?.decode(em)
}
