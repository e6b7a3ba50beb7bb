//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ctcbias::biasing::{build_bias, build_gc, build_lc, BiasFst, EntityList, LcConfig, PronLexicon, PronTokenizer};
use ctcbias::decoder::{build_decoding_graph, DecodingGraph, EmissionMatrix};
use ctcbias::jointseq::{align, train_joint, unit_symbol, AlignConfig, JointModel, TrainingPair};
use ctcbias::ngram::{train_ngram, NgramModel, PriorTable, TrainConfig, BOS_ID, EOS_ID};
use ctcbias::tokenize::{build_l, build_t, NormConfig, WordpieceModel};
use ctcbias::wfst::{Arc, Label, Weight, Wfst, EPSILON};
use rand::Rng;

pub type StringMap = BTreeMap<(Vec<Label>, Vec<Label>), f64>;

/// Every accepting path of an acyclic machine, grouped by its
/// epsilon-free (input, output) strings, keeping the cheapest weight.
pub fn path_map(fst: &Wfst) -> StringMap {
    fn walk(fst: &Wfst, s: u32, i: &mut Vec<Label>, o: &mut Vec<Label>, w: f64, out: &mut StringMap) {
        let f = fst.final_weight(s);
        if !f.is_zero() {
            let total = w + f.value();
            let e = out.entry((i.clone(), o.clone())).or_insert(f64::INFINITY);
            if total < *e {
                *e = total;
            }
        }
        for a in fst.arcs(s) {
            if a.ilabel != EPSILON {
                i.push(a.ilabel);
            }
            if a.olabel != EPSILON {
                o.push(a.olabel);
            }
            walk(fst, a.nextstate, i, o, w + a.weight.value(), out);
            if a.olabel != EPSILON {
                o.pop();
            }
            if a.ilabel != EPSILON {
                i.pop();
            }
        }
    }
    let mut out = StringMap::new();
    if let Some(s) = fst.start() {
        walk(fst, s, &mut Vec::new(), &mut Vec::new(), 0.0, &mut out);
    }
    out
}

/// Acceptor view: input string → cheapest weight.
pub fn acceptor_map(fst: &Wfst) -> BTreeMap<Vec<Label>, f64> {
    let mut out = BTreeMap::new();
    for ((i, _), w) in path_map(fst) {
        let e = out.entry(i).or_insert(f64::INFINITY);
        if w < *e {
            *e = w;
        }
    }
    out
}

pub fn maps_equal(a: &StringMap, b: &StringMap, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|((ka, wa), (kb, wb))| ka == kb && (wa - wb).abs() <= tol)
}

pub struct RandomFst {
    pub states: usize,
    pub labels: Label,
    /// Probability that an arc label is epsilon.
    pub eps: f64,
    pub acceptor: bool,
    pub arcs_per_state: usize,
}

/// Acyclic by construction: arcs only go to higher-numbered states.
pub fn random_acyclic(rng: &mut impl Rng, p: &RandomFst) -> Wfst {
    let mut f = Wfst::new();
    for _ in 0..p.states {
        f.add_state();
    }
    f.set_start(0);
    let n = p.states as u32;
    for s in 0..n {
        if s + 1 < n {
            for _ in 0..rng.gen_range(1..=p.arcs_per_state) {
                let t = rng.gen_range(s + 1..n);
                let il = if rng.gen_bool(p.eps) { 0 } else { rng.gen_range(1..=p.labels) };
                let ol = if p.acceptor {
                    il
                } else if rng.gen_bool(p.eps) {
                    0
                } else {
                    rng.gen_range(1..=p.labels)
                };
                let w = (rng.gen_range(0..40) as f64) * 0.25 - 2.0;
                f.add_arc(s, Arc::new(il, ol, Weight::new(w), t));
            }
        }
        if s + 1 == n || rng.gen_bool(0.3) {
            f.set_final(s, Weight::new(rng.gen_range(0..8) as f64 * 0.5));
        }
    }
    f
}

/// Composition semantics on string maps.
pub fn compose_maps(a: &StringMap, b: &StringMap) -> StringMap {
    let mut out = StringMap::new();
    for ((x, y), wa) in a {
        for ((y2, z), wb) in b {
            if y == y2 {
                let e = out.entry((x.clone(), z.clone())).or_insert(f64::INFINITY);
                if wa + wb < *e {
                    *e = wa + wb;
                }
            }
        }
    }
    out
}

/// Every monotone segmentation of `input` into chunks of 1..=max_p
/// symbols, one chunk per output symbol.
pub fn all_segmentations(input: &[String], output: &[String], max_p: usize) -> Vec<Vec<(Vec<String>, String)>> {
    fn go(
        input: &[String],
        output: &[String],
        max_p: usize,
        cur: &mut Vec<(Vec<String>, String)>,
        out: &mut Vec<Vec<(Vec<String>, String)>>,
    ) {
        if input.is_empty() && output.is_empty() {
            out.push(cur.clone());
            return;
        }
        if input.is_empty() || output.is_empty() {
            return;
        }
        for k in 1..=max_p.min(input.len()) {
            cur.push((input[..k].to_vec(), output[0].clone()));
            go(&input[k..], &output[1..], max_p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(input, output, max_p, &mut Vec::new(), &mut out);
    out
}

/// Natural-log sentence probability with explicit history truncation.
pub fn sentence_cost(model: &NgramModel, tokens: &[Label]) -> f64 {
    let mut hist = vec![BOS_ID];
    let mut total = 0.0;
    for &t in tokens.iter().chain(std::iter::once(&EOS_ID)) {
        let keep = hist.len().min(model.order() - 1);
        total -= model.prob(&hist[hist.len() - keep..], t);
        hist.push(t);
    }
    total
}

/// A tiny complete recognition system for exhaustive checks.
pub struct ToySystem {
    pub wp: WordpieceModel,
    pub words: Vec<String>,
    pub g: NgramModel,
    pub g_uni: NgramModel,
    pub prior: PriorTable,
    pub norm: NormConfig,
    pub normalize: bool,
    pub class: Option<(EntityList, BiasFst)>,
    pub graph: DecodingGraph,
}

pub const TOY_CLASS: &str = "@C";

fn toy_word(rng: &mut impl Rng) -> String {
    (0..rng.gen_range(1..=3)).map(|_| if rng.gen_bool(0.5) { 'a' } else { 'b' }).collect()
}

pub fn toy_system(rng: &mut impl Rng) -> ToySystem {
    let wp = WordpieceModel::new(["▁a", "▁b", "a", "b"]).unwrap();
    let mut words: BTreeSet<String> = BTreeSet::new();
    while words.len() < rng.gen_range(2..=4) {
        words.insert(toy_word(rng));
    }
    let words: Vec<String> = words.into_iter().collect();
    let with_class = rng.gen_bool(0.5);
    let mut corpus: Vec<Vec<String>> = Vec::new();
    for _ in 0..rng.gen_range(3..=6) {
        let mut s: Vec<String> = (0..rng.gen_range(1..=3))
            .map(|_| words[rng.gen_range(0..words.len())].clone())
            .collect();
        if with_class && rng.gen_bool(0.5) {
            let at = rng.gen_range(0..=s.len());
            s.insert(at, TOY_CLASS.to_string());
        }
        corpus.push(s);
    }
    // Every lexicon word must be seen by the LM.
    corpus.push(words.clone());
    if with_class {
        corpus.push(vec![TOY_CLASS.to_string()]);
    }
    let order = rng.gen_range(1..=3);
    let g = train_ngram(&corpus, &TrainConfig::new(order)).unwrap();
    let g_uni = train_ngram(&corpus, &TrainConfig::new(1)).unwrap();
    let prior = PriorTable::from_costs(
        wp.pieces()
            .map(|(_, p)| (p.to_string(), rng.gen_range(0.5..25.0)))
            .collect(),
    )
    .unwrap();
    let normalize = rng.gen_bool(0.5);
    let norm = NormConfig {
        scale: rng.gen_range(0.0..1.0),
        clip: rng.gen_range(1.0..20.0),
        blank_cost: rng.gen_range(-3.0..3.0),
    };
    let t = build_t(&wp, Some(&prior), &norm, normalize).unwrap();
    let classes: Vec<String> = if with_class { vec![TOY_CLASS.to_string()] } else { Vec::new() };
    let l = build_l(&wp, g.vocab(), &classes).unwrap();
    let graph = build_decoding_graph(&t, &l, &g_uni).unwrap();
    let class = with_class.then(|| {
        let mut ents: BTreeSet<String> = BTreeSet::new();
        while ents.len() < rng.gen_range(1..=2) {
            let e = if rng.gen_bool(0.3) {
                format!("{} {}", toy_word(rng), toy_word(rng))
            } else {
                toy_word(rng)
            };
            ents.insert(e);
        }
        let list = EntityList::new(TOY_CLASS, &ents).unwrap();
        let lc = build_lc(&list, &wp, &PronLexicon::new(), None, None, &LcConfig::default()).unwrap();
        let gc = build_gc(&list).unwrap();
        let bias = build_bias(&lc, &gc, &list).unwrap();
        (list, bias)
    });
    ToySystem {
        wp,
        words,
        g,
        g_uni,
        prior,
        norm,
        normalize,
        class,
        graph,
    }
}

pub fn random_emissions(rng: &mut impl Rng, frames: usize, vocab: usize) -> EmissionMatrix {
    let mut costs = Vec::with_capacity(frames * vocab);
    for _ in 0..frames {
        let logits: Vec<f64> = (0..vocab).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let lse = logits.iter().map(|x| x.exp()).sum::<f64>().ln();
        costs.extend(logits.iter().map(|x| (lse - x) as f32));
    }
    EmissionMatrix::new(frames, vocab, costs).unwrap()
}

/// Cheapest total cost of any word-level reading of any frame labeling,
/// summing emission costs, T weights, bias weights and the full n-gram
/// cost. Returns (cost, words).
pub fn exhaustive_decode(sys: &ToySystem, em: &EmissionMatrix) -> (f64, Vec<String>) {
    let v = em.vocab();
    let frames = em.frames();
    let blank: Label = 1;
    let enter = |l: Label| -> f64 {
        if sys.normalize {
            sys.norm.piece_weight(sys.prior.cost(sys.wp.piece(l)).unwrap())
        } else {
            0.0
        }
    };
    let mut best = (f64::INFINITY, Vec::new());
    let total = v.pow(frames as u32);
    for code in 0..total {
        let mut c = code;
        let mut labels = Vec::with_capacity(frames);
        for _ in 0..frames {
            labels.push((c % v) as Label + 1);
            c /= v;
        }
        let mut cost = 0.0;
        let mut pieces = Vec::new();
        let mut prev: Option<Label> = None;
        for (t, &l) in labels.iter().enumerate() {
            cost += em.cost(t, l) as f64;
            if l == blank {
                cost += sys.norm.blank_cost;
            } else if prev != Some(l) {
                cost += enter(l);
                pieces.push(sys.wp.piece(l).to_string());
            }
            prev = Some(l);
        }
        if cost >= best.0 + 1e3 {
            continue;
        }
        for (lm_cost, words) in readings(sys, &pieces) {
            let total = cost + lm_cost;
            if total < best.0 {
                best = (total, words);
            }
        }
    }
    best
}

/// Every parse of a piece sequence into lexicon words and entities, with
/// the LM cost plus bias weights.
fn readings(sys: &ToySystem, pieces: &[String]) -> Vec<(f64, Vec<String>)> {
    let mut units: Vec<(Vec<String>, Vec<String>, Option<f64>)> = Vec::new();
    for w in &sys.words {
        units.push((sys.wp.tokenize_word_str(w).unwrap(), vec![w.clone()], None));
    }
    if let Some((list, _)) = &sys.class {
        let bias = (list.len() as f64).ln();
        for e in list.entities() {
            let mut p = Vec::new();
            for w in e.split(' ') {
                p.extend(sys.wp.tokenize_word_str(w).unwrap());
            }
            units.push((p, e.split(' ').map(String::from).collect(), Some(bias)));
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<Label>, Vec<String>, f64)> = vec![(0, Vec::new(), Vec::new(), 0.0)];
    while let Some((pos, toks, words, extra)) = stack.pop() {
        if pos == pieces.len() {
            out.push((extra + sentence_cost(&sys.g, &toks), words));
            continue;
        }
        for (p, ws, bias) in &units {
            if pieces[pos..].starts_with(p) {
                let mut t = toks.clone();
                t.push(match bias {
                    Some(_) => sys.g.token_id(TOY_CLASS),
                    None => sys.g.token_id(&ws[0]),
                });
                let mut w = words.clone();
                w.extend(ws.iter().cloned());
                stack.push((pos + p.len(), t, w, extra + bias.unwrap_or(0.0)));
            }
        }
    }
    out
}

/// Kullback-Leibler increase from deleting one stored n-gram, computed
/// over the whole vocabulary with the history's backoff weight
/// re-estimated from scratch.
pub fn brute_force_delta(model: &NgramModel, ngram: &[Label]) -> f64 {
    let n = ngram.len();
    let h = &ngram[..n - 1];
    let vocab: Vec<Label> = model.predictable().collect();
    let explicit: BTreeSet<Label> = model
        .ngrams(n)
        .filter(|(k, _)| &k[..n - 1] == h)
        .map(|(k, _)| k[n - 1])
        .collect();
    let removed = ngram[n - 1];
    let mut num = 1.0;
    let mut den = 1.0;
    for &w in explicit.iter().filter(|&&w| w != removed) {
        num -= model.prob(h, w).exp();
        den -= model.prob(&h[1..], w).exp();
    }
    let alpha = num / den;
    let mut kl = 0.0;
    for &w in &vocab {
        let p = model.prob(h, w).exp();
        let q = if explicit.contains(&w) && w != removed {
            p
        } else {
            alpha * model.prob(&h[1..], w).exp()
        };
        if p > 0.0 {
            kl += p * (p / q).ln();
        }
    }
    let start = usize::from(h.first() == Some(&BOS_ID));
    let mut ph = 0.0;
    for i in start..h.len() {
        ph += model.prob(&h[..i], h[i]);
    }
    (ph.exp() * kl).max(0.0)
}

/// Levenshtein distance over words, the textbook quadratic recurrence.
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Hand-labeled entity outcomes: reference, hypothesis and, per entity
/// span, whether it counts as recognized.
pub const CEER_FIXTURES: &[(&str, &str, &[(usize, usize, bool)])] = &[
    ("call john smith now", "call john smith now", &[(1, 3, true)]),
    ("call john smith now", "call jon smith now", &[(1, 3, false)]),
    ("call john smith now", "call john now", &[(1, 3, false)]),
    ("call john smith now", "call john a smith now", &[(1, 3, false)]),
    ("call john smith now", "call a john smith now", &[(1, 3, true)]),
    ("call john smith now", "call john smith a now", &[(1, 3, true)]),
    ("call john smith now", "john smith", &[(1, 3, true)]),
    ("call john smith now", "", &[(1, 3, false)]),
    ("text mary", "text mary", &[(1, 2, true)]),
    ("text mary", "text marry", &[(1, 2, false)]),
    ("text mary", "text ma ry", &[(1, 2, false)]),
    ("mary please", "a mary please", &[(0, 1, true)]),
    ("call ann lee", "call anne lee", &[(1, 3, false)]),
    ("call ann lee", "call ann lee today", &[(1, 3, true)]),
    ("meet bo and cy", "meet bo and si", &[(1, 2, true), (3, 4, false)]),
    ("meet bo and cy", "meet bo cy", &[(1, 2, true), (3, 4, true)]),
    ("call x y z", "call x y z", &[(1, 4, true)]),
    ("call x y z", "call x z", &[(1, 4, false)]),
    ("call x y z", "call x q y z", &[(1, 4, false)]),
    ("call x y z", "call w y z", &[(1, 4, false)]),
    ("ring pat", "ring", &[(1, 2, false)]),
];

/// A corpus holding the CEER fixtures, with hypotheses keyed by id.
pub fn fixture_corpus() -> (ctcbias::simulate::Corpus, BTreeMap<String, Vec<String>>) {
    use ctcbias::simulate::{Corpus, EntitySpan, Utterance};
    let mut utterances = Vec::new();
    let mut hyps = BTreeMap::new();
    for (k, (r, h, spans)) in CEER_FIXTURES.iter().enumerate() {
        let words: Vec<&str> = r.split_whitespace().collect();
        let id = format!("f{k:02}");
        utterances.push(Utterance {
            id: id.clone(),
            user: "u0".into(),
            text: r.to_string(),
            entities: spans
                .iter()
                .map(|&(s, e, _)| EntitySpan {
                    class: "@CONTACT".into(),
                    surface: words[s..e].join(" "),
                    span: [s, e],
                })
                .collect(),
            plan: Vec::new(),
        });
        hyps.insert(id, h.split_whitespace().map(String::from).collect());
    }
    let corpus = Corpus {
        utterances,
        class: "@CONTACT".into(),
        users: BTreeMap::new(),
        contacts: Vec::new(),
    };
    (corpus, hyps)
}

pub fn bias_inventory() -> WordpieceModel {
    WordpieceModel::new(["▁a", "▁b", "▁c", "▁ab", "▁ba", "a", "b", "c", "ab", "bc", "ca"]).unwrap()
}

/// Every split of the spelled pronunciation into inventory pieces.
pub struct Splitter(WordpieceModel);

impl PronTokenizer for Splitter {
    fn tokenizations(&self, pron: &[String], n: usize) -> Vec<Vec<String>> {
        fn go(wp: &WordpieceModel, rest: &str, first: bool, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            if rest.is_empty() {
                out.push(cur.clone());
                return;
            }
            for len in 1..=rest.len().min(2) {
                let piece = if first { format!("▁{}", &rest[..len]) } else { rest[..len].to_string() };
                if wp.id(&piece).is_some() {
                    cur.push(piece);
                    go(wp, &rest[len..], false, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(&self.0, &pron.concat(), true, &mut Vec::new(), &mut out);
        out.truncate(n);
        out
    }
}

fn random_word(rng: &mut impl Rng) -> String {
    (0..rng.gen_range(1..=4)).map(|_| ['a', 'b', 'c'][rng.gen_range(0..3)]).collect()
}

pub fn random_entity_list(rng: &mut impl Rng) -> EntityList {
    let mut ents = BTreeSet::new();
    let n = rng.gen_range(1..=6);
    while ents.len() < n {
        let e = if rng.gen_bool(0.3) {
            format!("{} {}", random_word(rng), random_word(rng))
        } else {
            random_word(rng)
        };
        ents.insert(e);
    }
    EntityList::new("@CONTACT", &ents).unwrap()
}

pub fn random_bias(rng: &mut impl Rng, list: &EntityList) -> BiasFst {
    let wp = bias_inventory();
    let mut lexicon = PronLexicon::new();
    for w in list.words() {
        if rng.gen_bool(0.7) {
            lexicon.insert(w.clone(), vec![w.chars().map(String::from).collect()]);
        }
    }
    let tok = Splitter(bias_inventory());
    let cfg = LcConfig {
        n_pron: 1,
        n_tok: rng.gen_range(1..=4),
    };
    let lc = build_lc(list, &wp, &lexicon, Some(&tok), None, &cfg).unwrap();
    build_bias(&lc, &build_gc(list).unwrap(), list).unwrap()
}

pub fn expected_bias_paths(b: &BiasFst, list: &EntityList) -> usize {
    list.entities()
        .iter()
        .map(|e| e.split(' ').map(|w| b.tokenizations[w].len()).product::<usize>())
        .sum()
}


pub const IN: [&str; 3] = ["p", "q", "r"];
pub const OUT: [&str; 3] = ["x", "y", "z"];

pub fn random_pair(rng: &mut impl Rng, max_in: usize) -> TrainingPair {
    let ni = rng.gen_range(1..=max_in);
    let no = rng.gen_range(1..=ni);
    TrainingPair {
        input: (0..ni).map(|_| IN[rng.gen_range(0..3)].to_string()).collect(),
        output: (0..no).map(|_| OUT[rng.gen_range(0..3)].to_string()).collect(),
        weight: rng.gen_range(0.5..2.0),
    }
}

pub fn unit_names(seg: &[(Vec<String>, String)]) -> Vec<String> {
    seg.iter().map(|(i, o)| unit_symbol(i, o)).collect()
}

pub fn tiny_model(rng: &mut impl Rng) -> JointModel {
    let pairs: Vec<TrainingPair> = (0..rng.gen_range(3..8)).map(|_| random_pair(rng, 4)).collect();
    let r = align(&pairs, &AlignConfig { max_p: 2, ..AlignConfig::default() }).unwrap();
    train_joint(&r.sequences, rng.gen_range(1..=3)).unwrap()
}

/// Output sequence → cheapest joint cost over every segmentation the
/// model's units allow.
pub fn enumerate_outputs(model: &JointModel, input: &[String]) -> Vec<(Vec<String>, f64)> {
    fn go(model: &JointModel, input: &[String], pos: usize, units: &mut Vec<u32>, out: &mut BTreeMap<Vec<String>, f64>) {
        if pos == input.len() {
            let c = sentence_cost(model.ngram(), units);
            let o: Vec<String> = units.iter().map(|&u| model.output_of(u).unwrap().to_string()).collect();
            let e = out.entry(o).or_insert(f64::INFINITY);
            *e = e.min(c);
            return;
        }
        for k in 1..=model.max_p().min(input.len() - pos) {
            for &u in model.units_for(&input[pos..pos + k]) {
                units.push(u);
                go(model, input, pos + k, units, out);
                units.pop();
            }
        }
    }
    let mut out = BTreeMap::new();
    go(model, input, 0, &mut Vec::new(), &mut out);
    let mut v: Vec<(Vec<String>, f64)> = out.into_iter().filter(|(_, c)| c.is_finite()).collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    v
}


pub fn random_prior(rng: &mut impl Rng, wp: &WordpieceModel) -> PriorTable {
    PriorTable::from_costs(
        wp.pieces()
            .map(|(_, p)| (p.to_string(), rng.gen_range(0.0..40.0)))
            .collect(),
    )
    .unwrap()
}

pub fn check_t_weights(wp: &WordpieceModel, prior: &PriorTable, cfg: &NormConfig) {
    let t = build_t(wp, Some(prior), cfg, true).unwrap();
    let blank = wp.blank();
    for s in t.states() {
        for a in t.arcs(s) {
            if a.ilabel == blank {
                assert_eq!(a.olabel, EPSILON);
                assert_eq!(a.weight.value(), cfg.blank_cost);
            } else if a.olabel == EPSILON {
                assert_eq!(a.weight.value(), 0.0, "repeat self-loop");
            } else {
                let c = prior.cost(wp.piece(a.ilabel)).unwrap();
                assert_eq!(a.weight.value(), -(cfg.scale * c.min(cfg.clip)));
            }
        }
    }
}

