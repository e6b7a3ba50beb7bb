//! End-to-end experiment driver: simulate the desk corpus, train the
//! models, build graphs and bias FSTs, decode and score each system of
//! the personalization ladder.

use std::collections::BTreeMap;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::biasing::{build_bias, build_gc, build_lc, build_lg_baseline, BiasFst, LcConfig, LgBaseline, PronLexicon, PronTokenizer};
use crate::decoder::{build_decoding_graph, DecodeConfig, Decoder, DecodingGraph, EmissionMatrix, Hypothesis};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::jointseq::{align, nbest, prune_units, train_joint, AlignConfig, JointModel, TrainingPair};
use crate::ngram::{entropy_prune, prior_table, train_weighted, NgramModel, PriorTable, TrainConfig};
use crate::simulate::{
    gen_corpus, gen_lm_text, gen_world, utterance_emissions, Corpus, CorpusConfig, EmissionContext, NoiseConfig, World,
    WorldConfig,
};
use crate::tokenize::{build_l, build_t, NormConfig, WordpieceModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct P2wpConfig {
    pub order: usize,
    pub entropy_threshold: f64,
    pub unit_beam: f64,
    pub max_p: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Pronunciations per word from G2P when the lexicon has none.
    pub n_pron: usize,
    /// Tokenizations per pronunciation for the P2WP vs LG comparison.
    pub n_tok: usize,
}

impl Default for P2wpConfig {
    fn default() -> Self {
        P2wpConfig {
            order: 5,
            entropy_threshold: 1e-7,
            unit_beam: 3.0,
            max_p: 4,
            max_iters: 10,
            tol: 1e-6,
            n_pron: 4,
            n_tok: 10,
        }
    }
}

impl P2wpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 || self.max_p < 1 || self.n_pron < 1 || self.n_tok < 1 {
            return Err(Error::Config("p2wp order, max_p, n_pron and n_tok must be positive".into()));
        }
        if !(self.entropy_threshold >= 0.0) || !(self.unit_beam >= 0.0) {
            return Err(Error::Config("p2wp entropy_threshold and unit_beam must be >= 0".into()));
        }
        Ok(())
    }

    fn align_config(&self) -> AlignConfig {
        AlignConfig {
            max_p: self.max_p,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

/// Everything the desk experiment depends on. Serializable as the JSON
/// config of the command line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub corpus: CorpusConfig,
    pub noise: NoiseConfig,
    pub lm_order: usize,
    pub p2wp: P2wpConfig,
    pub norm: NormConfig,
    /// Blank cost for systems without prior normalization.
    pub plain_blank_cost: f64,
    pub decode: DecodeConfig,
    /// Contact pronunciations come from a curated lexicon; when false they
    /// come from G2P N-best.
    pub contact_lexicon: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            world: WorldConfig::default(),
            corpus: CorpusConfig::default(),
            noise: NoiseConfig::default(),
            lm_order: 4,
            p2wp: P2wpConfig::default(),
            norm: NormConfig::default(),
            plain_blank_cost: NormConfig::unnormalized().blank_cost,
            decode: DecodeConfig::default(),
            contact_lexicon: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lm_order < 1 {
            return Err(Error::Config("lm_order must be at least 1".into()));
        }
        self.corpus.validate()?;
        self.noise.validate()?;
        self.p2wp.validate()?;
        self.norm.validate()?;
        self.decode.validate()?;
        if !self.plain_blank_cost.is_finite() {
            return Err(Error::Config("plain_blank_cost must be finite".into()));
        }
        Ok(())
    }
}

/// Simulated data and trained word-level models.
#[derive(Clone, Debug)]
pub struct Desk {
    pub cfg: ExperimentConfig,
    pub world: World,
    pub corpus: Corpus,
    pub lm_text: Vec<Vec<String>>,
    pub g: NgramModel,
    pub g_uni: NgramModel,
    pub prior: PriorTable,
    pub emissions: Vec<EmissionMatrix>,
}

fn train_word_lm(world: &World, text: &[Vec<String>], order: usize) -> Result<NgramModel> {
    let weighted: Vec<(&[String], f64)> = text.iter().map(|s| (s.as_slice(), 1.0)).collect();
    let extra: Vec<&str> = world.words.iter().map(|w| w.word.as_str()).collect();
    train_weighted(&weighted, &extra, &TrainConfig::new(order))
}

pub fn build_desk(cfg: &ExperimentConfig) -> Result<Desk> {
    cfg.validate()?;
    let world = gen_world(&cfg.world)?;
    let corpus = gen_corpus(&world, &cfg.corpus)?;
    let lm_text = gen_lm_text(&world, &cfg.corpus)?;
    let g = train_word_lm(&world, &lm_text, cfg.lm_order)?;
    let g_uni = train_word_lm(&world, &lm_text, 1)?;
    // The acoustic model's training text, tokenized, estimates its prior.
    let mut piece_text = Vec::with_capacity(lm_text.len());
    for s in &lm_text {
        let mut pieces = Vec::new();
        for w in s.iter().filter(|w| !w.starts_with('@')) {
            pieces.extend(world.wp.tokenize_word_str(w)?);
        }
        piece_text.push(pieces);
    }
    let prior = prior_table(&piece_text, &world.wp)?;
    let emissions = synth_corpus(&world, &corpus, &prior, &cfg.noise)?;
    Ok(Desk {
        cfg: cfg.clone(),
        world,
        corpus,
        lm_text,
        g,
        g_uni,
        prior,
        emissions,
    })
}

/// Prior cost per wordpiece label id (zero for epsilon and blank).
pub fn prior_costs(wp: &WordpieceModel, prior: &PriorTable) -> Vec<f64> {
    let mut costs = vec![0.0; wp.table().len()];
    for (id, p) in wp.pieces() {
        costs[id as usize] = prior.cost(p).unwrap_or(0.0);
    }
    costs
}

/// Emissions for every utterance, in corpus order.
pub fn synth_corpus(world: &World, corpus: &Corpus, prior: &PriorTable, noise: &NoiseConfig) -> Result<Vec<EmissionMatrix>> {
    let costs = prior_costs(&world.wp, prior);
    let ctx = EmissionContext {
        confusion: Some(&world.confusion),
        prior_costs: Some(&costs),
    };
    corpus
        .utterances
        .iter()
        .map(|u| utterance_emissions(u, &world.wp, ctx, noise))
        .collect()
}

/// A trained joint-sequence model with its size before pruning.
#[derive(Clone, Debug)]
pub struct TrainedJoint {
    pub model: JointModel,
    pub unpruned_entries: usize,
    pub skipped: usize,
    pub log_likelihoods: Vec<f64>,
}

/// EM alignment, n-gram training, entropy pruning and unit beam pruning.
pub fn train_joint_model(pairs: &[TrainingPair], cfg: &P2wpConfig) -> Result<TrainedJoint> {
    let aligned = align(pairs, &cfg.align_config())?;
    let model = train_joint(&aligned.sequences, cfg.order)?;
    let unpruned_entries = model.num_entries();
    let pruned = entropy_prune(model.ngram(), cfg.entropy_threshold)?;
    let model = prune_units(&JointModel::from_ngram(pruned)?, cfg.unit_beam)?;
    Ok(TrainedJoint {
        model,
        unpruned_entries,
        skipped: aligned.skipped,
        log_likelihoods: aligned.log_likelihoods,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenizerKind {
    /// Orthographic tokenizations only.
    Spelling,
    /// Plus P2WP N-best per pronunciation.
    P2wp(usize),
    /// Plus LG-baseline N-best per pronunciation.
    Lg(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub personalized: bool,
    pub tokenizer: TokenizerKind,
    pub normalize: bool,
}

impl SystemSpec {
    fn new(name: &str, personalized: bool, tokenizer: TokenizerKind, normalize: bool) -> Self {
        SystemSpec {
            name: name.to_string(),
            personalized,
            tokenizer,
            normalize,
        }
    }
}

/// The baseline plus the four rows of the personalization ladder.
pub fn ladder_systems() -> Vec<SystemSpec> {
    vec![
        SystemSpec::new("CTC+4-gram", false, TokenizerKind::Spelling, false),
        SystemSpec::new("+Personalized", true, TokenizerKind::Spelling, false),
        SystemSpec::new("+P2WP=1", true, TokenizerKind::P2wp(1), false),
        SystemSpec::new("+P2WP=4", true, TokenizerKind::P2wp(4), false),
        SystemSpec::new("+WP norm", true, TokenizerKind::P2wp(4), true),
    ]
}

/// P2WP against the LG baseline, both with `n_tok` tokenizations and
/// prior normalization.
pub fn comparison_systems(n_tok: usize) -> Vec<SystemSpec> {
    vec![
        SystemSpec::new("LG", true, TokenizerKind::Lg(n_tok), true),
        SystemSpec::new("P2WP", true, TokenizerKind::P2wp(n_tok), true),
    ]
}

/// Pronunciation models shared by the systems of one run.
pub struct Tokenizers {
    pub p2wp: TrainedJoint,
    pub g2p: Option<JointModel>,
    pub lg: Option<LgBaseline>,
    pub contact_prons: PronLexicon,
}

impl Tokenizers {
    pub fn train(desk: &Desk, with_lg: bool) -> Result<Self> {
        let p2wp = train_joint_model(&desk.world.p2wp_pairs()?, &desk.cfg.p2wp)?;
        let (contact_prons, g2p) = if desk.cfg.contact_lexicon {
            (desk.corpus.contact_lexicon(), None)
        } else {
            let g2p = train_joint_model(&desk.world.g2p_pairs(), &desk.cfg.p2wp)?;
            (PronLexicon::new(), Some(g2p.model))
        };
        let lg = if with_lg {
            Some(build_lg_baseline(&desk.world.pron_lexicon(), &desk.world.wp, Some(&desk.g_uni))?)
        } else {
            None
        };
        Ok(Tokenizers {
            p2wp,
            g2p,
            lg,
            contact_prons,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SystemRun {
    pub spec: SystemSpec,
    pub hyps: BTreeMap<String, Hypothesis>,
    pub report: EvalReport,
    pub seconds: f64,
}

impl SystemRun {
    pub fn words(&self) -> BTreeMap<String, Vec<String>> {
        self.hyps.iter().map(|(k, h)| (k.clone(), h.words.clone())).collect()
    }
}

pub fn build_graph(desk: &Desk, personalized: bool, normalize: bool) -> Result<DecodingGraph> {
    let norm = if normalize {
        desk.cfg.norm
    } else {
        NormConfig {
            blank_cost: desk.cfg.plain_blank_cost,
            ..desk.cfg.norm
        }
    };
    let t = build_t(&desk.world.wp, Some(&desk.prior), &norm, normalize)?;
    let classes: Vec<String> = if personalized {
        vec![desk.corpus.class.clone()]
    } else {
        Vec::new()
    };
    let l = build_l(&desk.world.wp, desk.g.vocab(), &classes)?;
    build_decoding_graph(&t, &l, &desk.g_uni)
}

/// Per-user bias FSTs for one tokenizer choice.
pub fn build_user_biases(
    desk: &Desk,
    tok: &Tokenizers,
    kind: TokenizerKind,
) -> Result<BTreeMap<String, BiasFst>> {
    let mut out = BTreeMap::new();
    let (pron_tok, n): (Option<&dyn PronTokenizer>, usize) = match kind {
        TokenizerKind::Spelling => (None, 1),
        TokenizerKind::P2wp(n) => (Some(&tok.p2wp.model), n),
        TokenizerKind::Lg(n) => (
            Some(
                tok.lg
                    .as_ref()
                    .ok_or_else(|| Error::Config("LG baseline was not built".into()))?,
            ),
            n,
        ),
    };
    let lc_cfg = LcConfig {
        n_pron: desk.cfg.p2wp.n_pron,
        n_tok: n,
    };
    for user in desk.corpus.users.keys() {
        let Some(list) = desk.corpus.entity_list(user)? else {
            continue;
        };
        let lc = build_lc(&list, &desk.world.wp, &tok.contact_prons, pron_tok, tok.g2p.as_ref(), &lc_cfg)?;
        let gc = build_gc(&list)?;
        out.insert(user.clone(), build_bias(&lc, &gc, &list)?);
    }
    Ok(out)
}

/// Decodes every utterance with its user's bias FSTs and scores the result.
pub fn run_system(desk: &Desk, tok: &Tokenizers, spec: &SystemSpec) -> Result<SystemRun> {
    let t0 = Instant::now();
    let graph = build_graph(desk, spec.personalized, spec.normalize)?;
    let biases = if spec.personalized {
        build_user_biases(desk, tok, spec.tokenizer)?
    } else {
        BTreeMap::new()
    };
    let mut decoders: BTreeMap<&str, Decoder> = BTreeMap::new();
    let none: &[BiasFst] = &[];
    let mut hyps = BTreeMap::new();
    for (u, em) in desk.corpus.utterances.iter().zip(&desk.emissions) {
        if !decoders.contains_key(u.user.as_str()) {
            let b = biases.get(&u.user).map_or(none, std::slice::from_ref);
            decoders.insert(u.user.as_str(), Decoder::new(&graph, &desk.g, b, desk.cfg.decode)?);
        }
        let d = &decoders[u.user.as_str()];
        let h = d.decode(em)?.into_iter().next().unwrap_or(Hypothesis {
            words: Vec::new(),
            pieces: Vec::new(),
            lm_tokens: Vec::new(),
            cost: f64::INFINITY,
            lm_delta: 0.0,
        });
        hyps.insert(u.id.clone(), h);
    }
    let words: BTreeMap<String, Vec<String>> = hyps.iter().map(|(k, h)| (k.clone(), h.words.clone())).collect();
    let report = evaluate(&desk.corpus, &words)?;
    let seconds = t0.elapsed().as_secs_f64();
    info!(
        "{}: CEER {:?}, WER-B {:?} ({seconds:.1}s)",
        spec.name,
        report.ceer,
        report.wer_b.wer()
    );
    Ok(SystemRun {
        spec: spec.clone(),
        hyps,
        report,
        seconds,
    })
}

pub fn run_systems(desk: &Desk, tok: &Tokenizers, specs: &[SystemSpec]) -> Result<Vec<SystemRun>> {
    specs.iter().map(|s| run_system(desk, tok, s)).collect()
}

/// G2P N-best pronunciations; exposed for the command line tool.
pub fn g2p_prons(g2p: &JointModel, word: &str, n: usize) -> Vec<Vec<String>> {
    let letters: Vec<String> = word.chars().map(String::from).collect();
    nbest(g2p, &letters, n).hyps.into_iter().map(|(p, _)| p).collect()
}
