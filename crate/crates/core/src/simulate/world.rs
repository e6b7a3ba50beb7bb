use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::emit::ConfusionMap;
use crate::biasing::PronLexicon;
use crate::error::{Error, Result};
use crate::jointseq::TrainingPair;
use crate::tokenize::{WordpieceModel, BOUNDARY};

/// A phone with its usual spellings (weighted) and rare ones that never
/// appear in the generated lexicon.
#[derive(Clone, Copy, Debug)]
pub struct PhoneSpelling {
    pub phone: &'static str,
    pub vowel: bool,
    pub typical: &'static [(&'static str, f64)],
    pub exotic: &'static [&'static str],
}

const fn c(
    phone: &'static str,
    typical: &'static [(&'static str, f64)],
    exotic: &'static [&'static str],
) -> PhoneSpelling {
    PhoneSpelling {
        phone,
        vowel: false,
        typical,
        exotic,
    }
}

const fn v(
    phone: &'static str,
    typical: &'static [(&'static str, f64)],
    exotic: &'static [&'static str],
) -> PhoneSpelling {
    PhoneSpelling {
        phone,
        vowel: true,
        typical,
        exotic,
    }
}

pub const PHONES: &[PhoneSpelling] = &[
    c("p", &[("p", 1.0)], &["pp"]),
    c("b", &[("b", 1.0)], &["bh", "bb"]),
    c("t", &[("t", 1.0)], &["tt", "th"]),
    c("d", &[("d", 1.0)], &["dh", "dd"]),
    c("k", &[("k", 0.55), ("c", 0.45)], &["q", "kh", "ck"]),
    c("g", &[("g", 1.0)], &["gh", "gg"]),
    c("f", &[("f", 0.7), ("ph", 0.3)], &["ff"]),
    c("v", &[("v", 1.0)], &["vv"]),
    c("s", &[("s", 1.0)], &["x", "ss"]),
    c("z", &[("z", 1.0)], &["zz"]),
    c("m", &[("m", 1.0)], &["mm"]),
    c("n", &[("n", 1.0)], &["nn"]),
    c("l", &[("l", 1.0)], &["ll"]),
    c("r", &[("r", 1.0)], &["rr", "rh"]),
    c("sh", &[("sh", 1.0)], &["sch"]),
    c("ch", &[("ch", 1.0)], &["tch"]),
    c("j", &[("j", 1.0)], &["dj"]),
    c("y", &[("y", 1.0)], &["yh"]),
    c("w", &[("w", 1.0)], &["wh"]),
    c("h", &[("h", 1.0)], &["hh"]),
    v("aa", &[("a", 1.0)], &["ah", "aa"]),
    v("eh", &[("e", 1.0)], &["ae", "eh"]),
    v("iy", &[("i", 0.6), ("ee", 0.4)], &["ie", "ea"]),
    v("ow", &[("o", 0.7), ("oa", 0.3)], &["ow", "eau"]),
    v("uw", &[("u", 0.6), ("oo", 0.4)], &["ou", "ew"]),
    v("ay", &[("ai", 0.5), ("ay", 0.5)], &["igh", "ye"]),
];

pub fn phone_spelling(phone: &str) -> Option<&'static PhoneSpelling> {
    PHONES.iter().find(|p| p.phone == phone)
}

/// Phone reading of a letter string under the typical spellings, greedy
/// longest match; `None` if some letters have no typical reading.
pub fn reading(letters: &str) -> Option<Vec<&'static str>> {
    let chars: Vec<char> = letters.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut best: Option<(usize, &'static str)> = None;
        for p in PHONES {
            for (s, _) in p.typical {
                let n = s.chars().count();
                if i + n <= chars.len()
                    && chars[i..i + n].iter().copied().eq(s.chars())
                    && best.map_or(true, |(m, _)| n > m)
                {
                    best = Some((n, p.phone));
                }
            }
        }
        let (n, ph) = best?;
        out.push(ph);
        i += n;
    }
    Some(out)
}

/// Most likely spelling of a phone sequence.
pub fn mode_spelling<S: AsRef<str>>(phones: &[S]) -> Result<String> {
    let mut s = String::new();
    for p in phones {
        let ps = phone_spelling(p.as_ref())
            .ok_or_else(|| Error::Config(format!("unknown phone {:?}", p.as_ref())))?;
        let best = ps
            .typical
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("phones have a spelling");
        s.push_str(best.0);
    }
    Ok(s)
}

/// Spelling with every phone drawn from its typical distribution.
pub fn sample_spelling<S: AsRef<str>>(phones: &[S], rng: &mut impl Rng) -> Result<String> {
    let mut s = String::new();
    for p in phones {
        let ps = phone_spelling(p.as_ref())
            .ok_or_else(|| Error::Config(format!("unknown phone {:?}", p.as_ref())))?;
        s.push_str(pick_typical(ps, rng));
    }
    Ok(s)
}

pub(crate) fn pick_typical(ps: &PhoneSpelling, rng: &mut impl Rng) -> &'static str {
    if ps.typical.len() == 1 {
        return ps.typical[0].0;
    }
    let w = WeightedIndex::new(ps.typical.iter().map(|t| t.1)).expect("positive weights");
    ps.typical[w.sample(rng)].0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub seed: u64,
    pub n_words: usize,
    /// Multi-letter pieces added to the single letters.
    pub n_multi_pieces: usize,
    /// Similarity between pieces that read as the same phones.
    pub similarity: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 11,
            n_words: 1000,
            n_multi_pieces: 200,
            similarity: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexWord {
    pub word: String,
    pub phones: Vec<String>,
    /// Relative frequency (Zipf in rank).
    pub freq: f64,
}

/// What the acoustic model outputs for a phone sequence: listed entries
/// first, else the tokenization of the most likely spelling.
#[derive(Clone, Debug)]
pub struct AcousticRealization {
    entries: BTreeMap<Vec<String>, Vec<String>>,
    wp: WordpieceModel,
}

impl AcousticRealization {
    pub fn new(wp: WordpieceModel) -> Self {
        AcousticRealization {
            entries: BTreeMap::new(),
            wp,
        }
    }

    pub fn insert(&mut self, phones: Vec<String>, pieces: Vec<String>) {
        self.entries.insert(phones, pieces);
    }

    pub fn realize<S: AsRef<str>>(&self, phones: &[S]) -> Result<Vec<String>> {
        let key: Vec<String> = phones.iter().map(|p| p.as_ref().to_string()).collect();
        if let Some(p) = self.entries.get(&key) {
            return Ok(p.clone());
        }
        self.wp.tokenize_word_str(&mode_spelling(phones)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Generated language: lexicon, wordpiece inventory, piece confusions and
/// acoustic realizations.
#[derive(Clone, Debug)]
pub struct World {
    pub words: Vec<LexWord>,
    pub wp: WordpieceModel,
    pub confusion: ConfusionMap,
    pub realization: AcousticRealization,
}

pub(crate) fn random_phones(rng: &mut impl Rng, syllables: usize) -> Vec<String> {
    let cons: Vec<&PhoneSpelling> = PHONES.iter().filter(|p| !p.vowel).collect();
    let vows: Vec<&PhoneSpelling> = PHONES.iter().filter(|p| p.vowel).collect();
    let mut out = Vec::new();
    for i in 0..syllables {
        if i > 0 || rng.gen_bool(0.85) {
            out.push(cons[rng.gen_range(0..cons.len())].phone.to_string());
        }
        out.push(vows[rng.gen_range(0..vows.len())].phone.to_string());
        if rng.gen_bool(0.25) {
            out.push(cons[rng.gen_range(0..cons.len())].phone.to_string());
        }
    }
    out
}

/// Spellings that read back as their own phones.
pub(crate) fn reads_as<S: AsRef<str>>(spelling: &str, phones: &[S]) -> bool {
    reading(spelling).is_some_and(|r| r.iter().copied().eq(phones.iter().map(AsRef::as_ref)))
}

fn build_inventory(words: &[LexWord], n_multi: usize) -> Result<WordpieceModel> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for w in words {
        let chars: Vec<char> = w.word.chars().collect();
        for n in 2..=3 {
            for i in 0..chars.len().saturating_sub(n - 1) {
                let s: String = chars[i..i + n].iter().collect();
                let s = if i == 0 { format!("{BOUNDARY}{s}") } else { s };
                *counts.entry(s).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().filter(|(_, n)| *n > 1).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut pieces: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |p: String, pieces: &mut Vec<String>| {
        if seen.insert(p.clone()) {
            pieces.push(p);
        }
    };
    for ch in 'a'..='z' {
        push(format!("{BOUNDARY}{ch}"), &mut pieces);
    }
    for ch in 'a'..='z' {
        push(ch.to_string(), &mut pieces);
    }
    for p in PHONES {
        for (s, _) in p.typical {
            if s.chars().count() > 1 {
                push(format!("{BOUNDARY}{s}"), &mut pieces);
                push(s.to_string(), &mut pieces);
            }
        }
    }
    for (s, _) in ranked.into_iter().take(n_multi) {
        push(s, &mut pieces);
    }
    WordpieceModel::new(pieces)
}

fn build_confusion(wp: &WordpieceModel, sim: f64) -> ConfusionMap {
    let mut groups: BTreeMap<(bool, Vec<&str>), Vec<u32>> = BTreeMap::new();
    for (id, p) in wp.pieces() {
        let (b, letters) = match p.strip_prefix(BOUNDARY) {
            Some(rest) => (true, rest),
            None => (false, p),
        };
        if let Some(r) = reading(letters) {
            groups.entry((b, r)).or_default().push(id);
        }
    }
    let mut map = ConfusionMap::new();
    for ids in groups.values() {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                map.insert(a, b, sim);
            }
        }
    }
    map
}

pub fn gen_world(cfg: &WorldConfig) -> Result<World> {
    if cfg.n_words == 0 {
        return Err(Error::Config("n_words must be positive".into()));
    }
    if !(cfg.similarity > 0.0 && cfg.similarity < 1.0) {
        return Err(Error::Config("similarity must be in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut words = Vec::with_capacity(cfg.n_words);
    let mut spellings = BTreeSet::new();
    let mut prons = BTreeSet::new();
    let mut attempts = 0usize;
    while words.len() < cfg.n_words {
        attempts += 1;
        if attempts > cfg.n_words * 200 {
            return Err(Error::Config(format!(
                "could not generate {} distinct words",
                cfg.n_words
            )));
        }
        let syl = [1, 2, 2, 2, 3][rng.gen_range(0..5)];
        let phones = random_phones(&mut rng, syl);
        let spelling = sample_spelling(&phones, &mut rng)?;
        if !reads_as(&spelling, &phones) || prons.contains(&phones) || spellings.contains(&spelling) {
            continue;
        }
        spellings.insert(spelling.clone());
        prons.insert(phones.clone());
        let rank = words.len() as f64 + 1.0;
        words.push(LexWord {
            word: spelling,
            phones,
            freq: 1.0 / rank,
        });
    }
    let wp = build_inventory(&words, cfg.n_multi_pieces)?;
    let confusion = build_confusion(&wp, cfg.similarity);
    let mut realization = AcousticRealization::new(wp.clone());
    for w in &words {
        realization.insert(w.phones.clone(), wp.tokenize_word_str(&w.word)?);
    }
    Ok(World {
        words,
        wp,
        confusion,
        realization,
    })
}

impl World {
    pub fn pron_lexicon(&self) -> PronLexicon {
        self.words
            .iter()
            .map(|w| (w.word.clone(), vec![w.phones.clone()]))
            .collect()
    }

    /// Phone sequence → tokenization pairs for training P2WP.
    pub fn p2wp_pairs(&self) -> Result<Vec<TrainingPair>> {
        self.words
            .iter()
            .map(|w| {
                Ok(TrainingPair {
                    input: w.phones.clone(),
                    output: self.wp.tokenize_word_str(&w.word)?,
                    weight: 1.0,
                })
            })
            .collect()
    }

    /// Letter → phone pairs for training G2P.
    pub fn g2p_pairs(&self) -> Vec<TrainingPair> {
        self.words
            .iter()
            .map(|w| TrainingPair {
                input: w.word.chars().map(String::from).collect(),
                output: w.phones.clone(),
                weight: 1.0,
            })
            .collect()
    }

    pub fn word_set(&self) -> BTreeSet<&str> {
        self.words.iter().map(|w| w.word.as_str()).collect()
    }
}
