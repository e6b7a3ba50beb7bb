//! Word error rate, subset WER and contact entity error rate.

mod align;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::Corpus;

pub use align::{align, span_correct, stats_of, wer, EditOp, WerStats};

/// Outcome for one reference entity occurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityOutcome {
    pub id: String,
    pub class: String,
    pub surface: String,
    pub span: [usize; 2],
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeerResult {
    /// Percentage misrecognized; `None` when there are no entities.
    pub ceer: Option<f64>,
    pub outcomes: Vec<EntityOutcome>,
}

fn missing(corpus: &Corpus, hyps: &BTreeMap<String, Vec<String>>, only_a: bool) -> Result<()> {
    let absent: Vec<&str> = corpus
        .utterances
        .iter()
        .filter(|u| !only_a || !u.entities.is_empty())
        .filter(|u| !hyps.contains_key(&u.id))
        .map(|u| u.id.as_str())
        .collect();
    if absent.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("missing hypotheses for: {}", absent.join(", "))))
    }
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Contact entity error rate using alignment spans: an entity is correct
/// when each of its words aligns to an identical hypothesis word and no
/// word is inserted inside it.
pub fn ceer(corpus: &Corpus, hyps: &BTreeMap<String, Vec<String>>) -> Result<CeerResult> {
    missing(corpus, hyps, true)?;
    let mut outcomes = Vec::new();
    for u in corpus.utterances.iter().filter(|u| !u.entities.is_empty()) {
        let r = words(&u.text);
        let ops = align(&r, &hyps[&u.id]);
        for e in &u.entities {
            outcomes.push(EntityOutcome {
                id: u.id.clone(),
                class: e.class.clone(),
                surface: e.surface.clone(),
                span: e.span,
                correct: span_correct(&ops, e.span[0], e.span[1]),
            });
        }
    }
    let wrong = outcomes.iter().filter(|o| !o.correct).count();
    let ceer = (!outcomes.is_empty()).then(|| 100.0 * wrong as f64 / outcomes.len() as f64);
    Ok(CeerResult { ceer, outcomes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub wer_all: WerStats,
    pub wer_a: WerStats,
    pub wer_b: WerStats,
    pub ceer: Option<f64>,
    pub contacts_total: usize,
    pub contacts_wrong: usize,
    pub outcomes: Vec<EntityOutcome>,
}

/// Pooled WER over all utterances and the A (with entities) / B subsets,
/// plus CEER.
pub fn evaluate(corpus: &Corpus, hyps: &BTreeMap<String, Vec<String>>) -> Result<EvalReport> {
    missing(corpus, hyps, false)?;
    let ids: BTreeSet<&str> = corpus.utterances.iter().map(|u| u.id.as_str()).collect();
    if ids.len() != corpus.utterances.len() {
        return Err(Error::Config("duplicate utterance ids in corpus".into()));
    }
    let mut all = WerStats::default();
    let mut a = WerStats::default();
    let mut b = WerStats::default();
    for u in &corpus.utterances {
        let r = words(&u.text);
        if r.is_empty() {
            continue;
        }
        let s = wer(&r, &hyps[&u.id])?;
        all.add(&s);
        if u.entities.is_empty() {
            b.add(&s);
        } else {
            a.add(&s);
        }
    }
    let c = ceer(corpus, hyps)?;
    let wrong = c.outcomes.iter().filter(|o| !o.correct).count();
    Ok(EvalReport {
        wer_all: all,
        wer_a: a,
        wer_b: b,
        ceer: c.ceer,
        contacts_total: c.outcomes.len(),
        contacts_wrong: wrong,
        outcomes: c.outcomes,
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))
}

pub const REPORT_HEADER: &str = "system\twer_all\twer_a\twer_b\tceer";

impl EvalReport {
    pub fn tsv_row(&self, system: &str) -> String {
        format!(
            "{system}\t{}\t{}\t{}\t{}",
            pct(self.wer_all.wer()),
            pct(self.wer_a.wer()),
            pct(self.wer_b.wer()),
            pct(self.ceer)
        )
    }
}

/// Header plus one row per system.
pub fn report_tsv(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for (name, r) in rows {
        let _ = writeln!(out, "{}", r.tsv_row(name));
    }
    out
}
