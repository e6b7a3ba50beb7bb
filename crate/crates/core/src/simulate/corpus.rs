use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::world::{phone_spelling, pick_typical, random_phones, reads_as, sample_spelling, World};
use crate::biasing::{EntityList, PronLexicon};
use crate::error::{Error, Result};
use crate::ngram::{apply_class_spans, ClassSpan};
use crate::tokenize::lexicon_is_class_name;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub class: String,
    pub surface: String,
    /// Half-open word range in the utterance text.
    pub span: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    #[serde(default)]
    pub user: String,
    pub text: String,
    #[serde(default)]
    pub entities: Vec<EntitySpan>,
    /// Wordpieces planted in the emissions.
    #[serde(default)]
    pub plan: Vec<String>,
}

impl Utterance {
    pub fn words(&self) -> Vec<&str> {
        self.text.split_whitespace().collect()
    }

    /// Subset A holds the utterances with at least one entity.
    pub fn in_subset_a(&self) -> bool {
        !self.entities.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContactKind {
    /// An ordinary lexicon word used as a name.
    InVocabulary,
    /// Out of vocabulary, spelled as pronounced.
    Match,
    /// Spelled with a different but common spelling of its sounds.
    Mild,
    /// Spelled with rare letter combinations.
    Severe,
}

impl ContactKind {
    pub fn is_mismatch(self) -> bool {
        matches!(self, ContactKind::Mild | ContactKind::Severe)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub name: String,
    pub user: String,
    pub phones: Vec<Vec<String>>,
    /// Acoustic realization of the whole name.
    pub realization: Vec<String>,
    pub orthographic: Vec<String>,
    pub kind: ContactKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub class: String,
    /// user → entity names.
    pub users: BTreeMap<String, Vec<String>>,
    pub contacts: Vec<Contact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub seed: u64,
    pub class: String,
    pub n_users: usize,
    pub contacts_per_user: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub oov_fraction: f64,
    pub mismatch_fraction: f64,
    /// Share of the mismatched contacts spelled with rare letters.
    pub severe_fraction: f64,
    pub two_word_fraction: f64,
    /// Probability that a phone of a rare-spelled name takes a rare spelling.
    pub exotic_rate: f64,
    pub n_templates: usize,
    pub n_lm_sentences: usize,
    pub n_lm_class_sentences: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 23,
            class: "@CONTACT".into(),
            n_users: 5,
            contacts_per_user: 10,
            n_a: 50,
            n_b: 150,
            oov_fraction: 0.9,
            mismatch_fraction: 0.7,
            severe_fraction: 0.5,
            two_word_fraction: 0.3,
            exotic_rate: 0.5,
            n_templates: 8,
            n_lm_sentences: 4000,
            n_lm_class_sentences: 1000,
        }
    }
}

impl CorpusConfig {
    pub fn n_contacts(&self) -> usize {
        self.n_users * self.contacts_per_user
    }

    pub fn validate(&self) -> Result<()> {
        if !lexicon_is_class_name(&self.class) {
            return Err(Error::Config(format!("invalid class name {:?}", self.class)));
        }
        for (name, v) in [
            ("oov_fraction", self.oov_fraction),
            ("mismatch_fraction", self.mismatch_fraction),
            ("severe_fraction", self.severe_fraction),
            ("two_word_fraction", self.two_word_fraction),
            ("exotic_rate", self.exotic_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if self.n_a > 0 && self.n_contacts() == 0 {
            return Err(Error::Config("subset A needs at least one contact".into()));
        }
        if self.n_templates == 0 {
            return Err(Error::Config("n_templates must be positive".into()));
        }
        let n = self.n_contacts() as f64;
        if (n * (1.0 - self.oov_fraction)).round() + (n * self.mismatch_fraction).ceil() > n {
            return Err(Error::Config(
                "in-vocabulary and mismatched contact fractions exceed the contact count".into(),
            ));
        }
        Ok(())
    }
}

/// Word-level Markov grammar plus carrier templates around one class slot.
#[derive(Clone, Debug)]
pub struct Grammar {
    starts: WeightedIndex<f64>,
    successors: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    /// (words before the slot, words after it)
    pub templates: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Grammar {
    pub fn new(world: &World, n_templates: usize, seed: u64) -> Result<Self> {
        let n = world.words.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_616d);
        let starts = WeightedIndex::new(world.words.iter().map(|w| w.freq))
            .map_err(|e| Error::Config(format!("word frequencies: {e}")))?;
        let mut successors = Vec::with_capacity(n);
        for _ in 0..n {
            let mut next: Vec<usize> = Vec::new();
            while next.len() < 6.min(n) {
                let w = starts.sample(&mut rng);
                if !next.contains(&w) {
                    next.push(w);
                }
            }
            let weights: Vec<f64> = (0..next.len()).map(|k| 1.0 / (k as f64 + 1.0)).collect();
            let wi = WeightedIndex::new(weights).expect("positive weights");
            successors.push((next, wi));
        }
        let top = n.min(40);
        let mut templates: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut tries = 0;
        while templates.len() < n_templates {
            tries += 1;
            if tries > 10_000 {
                return Err(Error::Config("lexicon too small for the requested templates".into()));
            }
            let pre: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..top)).collect();
            let post: Vec<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..top)).collect();
            let t = (pre, post);
            if !templates.contains(&t) {
                templates.push(t);
            }
        }
        Ok(Grammar {
            starts,
            successors,
            templates,
        })
    }

    pub fn sentence(&self, rng: &mut impl Rng) -> Vec<usize> {
        let len = rng.gen_range(3..=7);
        let mut w = self.starts.sample(rng);
        let mut out = vec![w];
        while out.len() < len {
            let (next, wi) = &self.successors[w];
            w = next[wi.sample(rng)];
            out.push(w);
        }
        out
    }
}

/// Training text for the word LM: grammar sentences plus carrier
/// templates whose slot holds ordinary words annotated as class spans,
/// then replaced by the class token.
pub fn gen_lm_text(world: &World, cfg: &CorpusConfig) -> Result<Vec<Vec<String>>> {
    cfg.validate()?;
    let grammar = Grammar::new(world, cfg.n_templates, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6c6d);
    let word = |i: usize| world.words[i].word.clone();
    let mut out = Vec::with_capacity(cfg.n_lm_sentences + cfg.n_lm_class_sentences);
    for _ in 0..cfg.n_lm_sentences {
        out.push(grammar.sentence(&mut rng).into_iter().map(word).collect());
    }
    for _ in 0..cfg.n_lm_class_sentences {
        let (pre, post) = &grammar.templates[rng.gen_range(0..grammar.templates.len())];
        let mut toks: Vec<String> = pre.iter().map(|&i| word(i)).collect();
        let start = toks.len();
        for _ in 0..rng.gen_range(1..=2) {
            toks.push(word(rng.gen_range(0..world.words.len())));
        }
        let span = ClassSpan {
            class: cfg.class.clone(),
            start,
            end: toks.len(),
        };
        toks.extend(post.iter().map(|&i| word(i)));
        out.push(apply_class_spans(&toks, &[span])?);
    }
    Ok(out)
}

fn exotic_spelling(phones: &[String], rate: f64, rng: &mut impl Rng) -> String {
    let need = (phones.len() / 3).max(1);
    loop {
        let mut s = String::new();
        let mut n = 0;
        for p in phones {
            let ps = phone_spelling(p).expect("generated phone");
            if rng.gen_bool(rate) {
                s.push_str(ps.exotic[rng.gen_range(0..ps.exotic.len())]);
                n += 1;
            } else {
                s.push_str(pick_typical(ps, rng));
            }
        }
        if n >= need {
            return s;
        }
    }
}

fn alternate_spelling(phones: &[String], acoustic: &str, rng: &mut impl Rng) -> Option<String> {
    let ambiguous = phones
        .iter()
        .filter(|p| phone_spelling(p).is_some_and(|ps| ps.typical.len() > 1))
        .count();
    if ambiguous == 0 {
        return None;
    }
    for _ in 0..50 {
        let s = sample_spelling(phones, rng).ok()?;
        if s != acoustic && reads_as(&s, phones) {
            return Some(s);
        }
    }
    None
}

struct NameWord {
    ortho: String,
    phones: Vec<String>,
    acoustic: Vec<String>,
    orthographic: Vec<String>,
}

fn oov_name_word(
    world: &World,
    kind: ContactKind,
    cfg: &CorpusConfig,
    taken: &BTreeSet<String>,
    prons: &BTreeSet<&[String]>,
    rng: &mut impl Rng,
) -> Result<Option<NameWord>> {
    let syl = rng.gen_range(2..=3);
    let phones = random_phones(rng, syl);
    if prons.contains(phones.as_slice()) {
        return Ok(None);
    }
    let spelled = sample_spelling(&phones, rng)?;
    if !reads_as(&spelled, &phones) {
        return Ok(None);
    }
    let ortho = match kind {
        ContactKind::Match | ContactKind::InVocabulary => spelled.clone(),
        ContactKind::Mild => match alternate_spelling(&phones, &spelled, rng) {
            Some(s) => s,
            None => return Ok(None),
        },
        ContactKind::Severe => exotic_spelling(&phones, cfg.exotic_rate, rng),
    };
    if taken.contains(&ortho) || world.word_set().contains(ortho.as_str()) {
        return Ok(None);
    }
    let acoustic = world.wp.tokenize_word_str(&spelled)?;
    let orthographic = world.wp.tokenize_word_str(&ortho)?;
    if kind.is_mismatch() == (acoustic == orthographic) {
        return Ok(None);
    }
    Ok(Some(NameWord {
        ortho,
        phones,
        acoustic,
        orthographic,
    }))
}

fn gen_contacts(world: &World, cfg: &CorpusConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Contact>> {
    let n = cfg.n_contacts();
    let n_inv = (n as f64 * (1.0 - cfg.oov_fraction)).round() as usize;
    let n_mis = (n as f64 * cfg.mismatch_fraction).ceil() as usize;
    let n_sev = (n_mis as f64 * cfg.severe_fraction).round() as usize;
    let mut kinds = Vec::with_capacity(n);
    kinds.extend(std::iter::repeat(ContactKind::InVocabulary).take(n_inv));
    kinds.extend(std::iter::repeat(ContactKind::Severe).take(n_sev));
    kinds.extend(std::iter::repeat(ContactKind::Mild).take(n_mis - n_sev));
    kinds.extend(std::iter::repeat(ContactKind::Match).take(n - n_inv - n_mis));
    kinds.shuffle(rng);

    let prons: BTreeSet<&[String]> = world.words.iter().map(|w| w.phones.as_slice()).collect();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut contacts = Vec::with_capacity(n);
    // Names are picked from the rarer half of the lexicon.
    let mut invocab: Vec<usize> = (world.words.len() / 2..world.words.len()).collect();
    invocab.shuffle(rng);
    let mut invocab = invocab.into_iter();
    for (i, kind) in kinds.into_iter().enumerate() {
        let user = format!("user{:02}", i / cfg.contacts_per_user.max(1));
        if kind == ContactKind::InVocabulary {
            let w = invocab
                .next()
                .ok_or_else(|| Error::Config("inventory too small for in-vocabulary contacts".into()))?;
            let w = &world.words[w];
            taken.insert(w.word.clone());
            let pieces = world.wp.tokenize_word_str(&w.word)?;
            contacts.push(Contact {
                name: w.word.clone(),
                user,
                phones: vec![w.phones.clone()],
                realization: pieces.clone(),
                orthographic: pieces,
                kind,
            });
            continue;
        }
        let n_words = if rng.gen_bool(cfg.two_word_fraction) { 2 } else { 1 };
        let mut parts: Vec<NameWord> = Vec::new();
        let mut tries = 0;
        while parts.len() < n_words {
            tries += 1;
            if tries > 5000 {
                return Err(Error::Config(format!(
                    "inventory too small: could not generate a {kind:?} contact name"
                )));
            }
            if let Some(w) = oov_name_word(world, kind, cfg, &taken, &prons, rng)? {
                taken.insert(w.ortho.clone());
                parts.push(w);
            }
        }
        contacts.push(Contact {
            name: parts.iter().map(|p| p.ortho.as_str()).collect::<Vec<_>>().join(" "),
            user,
            phones: parts.iter().map(|p| p.phones.clone()).collect(),
            realization: parts.iter().flat_map(|p| p.acoustic.clone()).collect(),
            orthographic: parts.iter().flat_map(|p| p.orthographic.clone()).collect(),
            kind,
        });
    }
    Ok(contacts)
}

/// Evaluation corpus: subset A embeds one contact per utterance in a
/// carrier template, subset B is drawn from the word grammar. Contact
/// emissions are planned from their acoustic realization.
pub fn gen_corpus(world: &World, cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let grammar = Grammar::new(world, cfg.n_templates, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x636f_7270);
    let contacts = gen_contacts(world, cfg, &mut rng)?;
    let tok = |i: usize| world.wp.tokenize_word_str(&world.words[i].word);
    let word = |i: usize| world.words[i].word.as_str();

    let mut utterances = Vec::with_capacity(cfg.n_a + cfg.n_b);
    for k in 0..cfg.n_a {
        let c = &contacts[k % contacts.len()];
        let (pre, post) = &grammar.templates[rng.gen_range(0..grammar.templates.len())];
        let mut text: Vec<&str> = pre.iter().map(|&i| word(i)).collect();
        let mut plan = Vec::new();
        for &i in pre {
            plan.extend(tok(i)?);
        }
        let start = text.len();
        text.extend(c.name.split(' '));
        let end = text.len();
        plan.extend(c.realization.iter().cloned());
        for &i in post {
            text.push(word(i));
            plan.extend(tok(i)?);
        }
        utterances.push(Utterance {
            id: format!("a{k:04}"),
            user: c.user.clone(),
            text: text.join(" "),
            entities: vec![EntitySpan {
                class: cfg.class.clone(),
                surface: c.name.clone(),
                span: [start, end],
            }],
            plan,
        });
    }
    for k in 0..cfg.n_b {
        let s = grammar.sentence(&mut rng);
        let mut plan = Vec::new();
        for &i in &s {
            plan.extend(tok(i)?);
        }
        utterances.push(Utterance {
            id: format!("b{k:04}"),
            user: format!("user{:02}", k % cfg.n_users.max(1)),
            text: s.iter().map(|&i| word(i)).collect::<Vec<_>>().join(" "),
            entities: Vec::new(),
            plan,
        });
    }
    let mut users: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for c in &contacts {
        users.entry(c.user.clone()).or_default().push(c.name.clone());
    }
    Ok(Corpus {
        utterances,
        class: cfg.class.clone(),
        users,
        contacts,
    })
}

impl Corpus {
    pub fn subset_a(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(|u| u.in_subset_a())
    }

    pub fn subset_b(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(|u| !u.in_subset_a())
    }

    pub fn entity_list(&self, user: &str) -> Result<Option<EntityList>> {
        match self.users.get(user) {
            Some(names) if !names.is_empty() => Ok(Some(EntityList::new(&self.class, names)?)),
            _ => Ok(None),
        }
    }

    /// Pronunciations of every contact word.
    pub fn contact_lexicon(&self) -> PronLexicon {
        let mut lex = PronLexicon::new();
        for c in &self.contacts {
            for (w, p) in c.name.split(' ').zip(&c.phones) {
                let e = lex.entry(w.to_string()).or_default();
                if !e.contains(p) {
                    e.push(p.clone());
                }
            }
        }
        lex
    }

    /// One JSON object per utterance.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for u in &self.utterances {
            let _ = writeln!(out, "{}", serde_json::to_string(u)?);
        }
        Ok(out)
    }

    /// Utterances only; users and contacts are left empty.
    pub fn from_jsonl(text: &str, class: &str) -> Result<Corpus> {
        let mut utterances = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let u: Utterance = serde_json::from_str(line)
                .map_err(|e| Error::parse(n + 1, e.to_string()))?;
            let len = u.words().len();
            if u.entities.iter().any(|e| e.span[0] >= e.span[1] || e.span[1] > len) {
                return Err(Error::parse(n + 1, "entity span out of range"));
            }
            utterances.push(u);
        }
        Ok(Corpus {
            utterances,
            class: class.to_string(),
            users: BTreeMap::new(),
            contacts: Vec::new(),
        })
    }
}
