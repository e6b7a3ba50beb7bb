use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::wfst::Label;

use super::model::{NgramModel, BOS_ID};

/// Marginal probability of a history by the chain rule; a leading `<s>`
/// has probability one.
pub fn history_prob(model: &NgramModel, history: &[Label]) -> f64 {
    let start = usize::from(history.first() == Some(&BOS_ID));
    let mut logp = 0.0;
    for i in start..history.len() {
        logp += model.prob(&history[..i], history[i]);
    }
    logp.exp()
}

/// Relative-entropy increase from dropping the stored n-gram `ngram` and
/// recomputing its history's backoff weight. Clamped at zero.
pub fn prune_delta(model: &NgramModel, ngram: &[Label]) -> f64 {
    let n = ngram.len();
    let h = &ngram[..n - 1];
    let (stored, lower) = history_sums(model, h);
    prune_delta_with(model, ngram, stored, lower, history_prob(model, h))
}

fn history_sums(model: &NgramModel, h: &[Label]) -> (f64, f64) {
    let mut stored = 0.0;
    let mut lower = 0.0;
    let lo = h.to_vec();
    for (k, e) in model.entries[h.len()].range(lo..) {
        if &k[..h.len()] != h {
            break;
        }
        stored += e.logp.exp();
        lower += model.prob(&h[1..], k[h.len()]).exp();
    }
    (stored, lower)
}

fn prune_delta_with(model: &NgramModel, ngram: &[Label], stored: f64, lower: f64, ph: f64) -> f64 {
    let n = ngram.len();
    let h = &ngram[..n - 1];
    let w = ngram[n - 1];
    let p = model.entry(ngram).map_or(0.0, |e| e.logp.exp());
    let pl = model.prob(&h[1..], w).exp();
    let mass = 1.0 - stored;
    let ln_alpha = model.backoff_of(h);
    let ln_alpha_new = ((mass + p) / (1.0 - lower + pl)).ln();
    let d = p * (p.ln() - pl.ln() - ln_alpha_new) - mass * (ln_alpha_new - ln_alpha);
    (ph * d).max(0.0)
}

/// Relative-entropy pruning, highest order first. An n-gram is removed when
/// its delta is below `threshold`; n-grams that still prefix a longer kept
/// n-gram are never removed. Unigrams are kept.
pub fn entropy_prune(model: &NgramModel, threshold: f64) -> Result<NgramModel> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::Config(format!("pruning threshold {threshold} must be >= 0")));
    }
    let mut m = model.clone();
    for n in (2..=m.order).rev() {
        let idx = n - 1;
        let mut sums: BTreeMap<Vec<Label>, (f64, f64, f64)> = BTreeMap::new();
        let mut doomed = Vec::new();
        for (k, e) in &m.entries[idx] {
            if e.backoff.is_some() {
                continue;
            }
            let h = &k[..n - 1];
            if !sums.contains_key(h) {
                let (s, l) = history_sums(&m, h);
                sums.insert(h.to_vec(), (s, l, history_prob(&m, h)));
            }
            let (s, l, ph) = sums[h];
            if prune_delta_with(&m, k, s, l, ph) < threshold {
                doomed.push(k.clone());
            }
        }
        if doomed.is_empty() {
            continue;
        }
        for k in doomed {
            m.entries[idx].remove(&k);
        }
        m.renormalize();
    }
    Ok(m)
}
