use std::collections::BTreeMap;

use log::warn;

use crate::error::{Error, Result};

use super::{check_symbol, unit_symbol, TrainingPair};

#[derive(Clone, Debug, PartialEq)]
pub struct AlignConfig {
    pub max_p: usize,
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which EM stops.
    pub tol: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            max_p: 4,
            max_iters: 10,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlignResult {
    /// Viterbi unit sequence of each alignable pair, with the pair weight.
    pub sequences: Vec<(Vec<String>, f64)>,
    /// Unit probabilities after the last M-step.
    pub probs: BTreeMap<String, f64>,
    /// Weighted log-likelihood before each M-step.
    pub log_likelihoods: Vec<f64>,
    pub skipped: usize,
}

fn alignable(p: &TrainingPair, max_p: usize) -> bool {
    let (i, o) = (p.input.len(), p.output.len());
    o >= 1 && o <= i && i <= o * max_p
}

/// Every monotone segmentation of `pair` into units of 1..=max_p inputs and
/// exactly one output.
pub fn segmentations(pair: &TrainingPair, max_p: usize) -> Vec<Vec<String>> {
    fn rec(
        pair: &TrainingPair,
        max_p: usize,
        i: usize,
        j: usize,
        cur: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
    ) {
        if j == pair.output.len() {
            if i == pair.input.len() {
                out.push(cur.clone());
            }
            return;
        }
        for k in 1..=max_p.min(pair.input.len() - i) {
            cur.push(unit_symbol(&pair.input[i..i + k], &pair.output[j]));
            rec(pair, max_p, i + k, j + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(pair, max_p, 0, 0, &mut Vec::new(), &mut out);
    out
}

/// Unit names spanning `input[i-k..i]` with output `j-1`, indexed by
/// `(i, j, k)` for one pair.
struct Lattice {
    names: BTreeMap<(usize, usize, usize), String>,
}

impl Lattice {
    fn new(pair: &TrainingPair, max_p: usize) -> Self {
        let mut names = BTreeMap::new();
        for j in 1..=pair.output.len() {
            for i in 1..=pair.input.len() {
                for k in 1..=max_p.min(i) {
                    names.insert((i, j, k), unit_symbol(&pair.input[i - k..i], &pair.output[j - 1]));
                }
            }
        }
        Lattice { names }
    }
}

/// Expected unit counts (weighted by pair weight) and total weighted
/// log-likelihood under unigram unit probabilities `probs`. A unit absent
/// from `probs` has probability `default`.
pub fn expected_counts(
    pairs: &[TrainingPair],
    probs: &BTreeMap<String, f64>,
    default: f64,
    max_p: usize,
) -> (BTreeMap<String, f64>, f64) {
    let mut counts = BTreeMap::new();
    let mut ll = 0.0;
    for pair in pairs.iter().filter(|p| alignable(p, max_p)) {
        let lat = Lattice::new(pair, max_p);
        let (ni, nj) = (pair.input.len(), pair.output.len());
        let p = |i: usize, j: usize, k: usize| -> f64 {
            probs.get(&lat.names[&(i, j, k)]).copied().unwrap_or(default)
        };
        let mut alpha = vec![vec![0.0f64; nj + 1]; ni + 1];
        alpha[0][0] = 1.0;
        for j in 1..=nj {
            for i in 1..=ni {
                let mut s = 0.0;
                for k in 1..=max_p.min(i) {
                    s += alpha[i - k][j - 1] * p(i, j, k);
                }
                alpha[i][j] = s;
            }
        }
        let mut beta = vec![vec![0.0f64; nj + 1]; ni + 1];
        beta[ni][nj] = 1.0;
        for j in (0..nj).rev() {
            for i in (0..ni).rev() {
                let mut s = 0.0;
                for k in 1..=max_p.min(ni - i) {
                    s += p(i + k, j + 1, k) * beta[i + k][j + 1];
                }
                beta[i][j] = s;
            }
        }
        let z = alpha[ni][nj];
        if !(z > 0.0) {
            continue;
        }
        ll += pair.weight * z.ln();
        for (&(i, j, k), name) in &lat.names {
            let num = alpha[i - k][j - 1] * p(i, j, k) * beta[i][j];
            if num > 0.0 {
                *counts.entry(name.clone()).or_insert(0.0) += pair.weight * num / z;
            }
        }
    }
    (counts, ll)
}

fn viterbi(pair: &TrainingPair, probs: &BTreeMap<String, f64>, max_p: usize) -> Vec<String> {
    let (ni, nj) = (pair.input.len(), pair.output.len());
    let mut best = vec![vec![(f64::NEG_INFINITY, 0usize); nj + 1]; ni + 1];
    best[0][0] = (0.0, 0);
    for j in 1..=nj {
        for i in 1..=ni {
            for k in 1..=max_p.min(i) {
                let prev = best[i - k][j - 1].0;
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                let name = unit_symbol(&pair.input[i - k..i], &pair.output[j - 1]);
                let lp = probs.get(&name).map_or(f64::NEG_INFINITY, |p| p.ln());
                let cand = prev + lp;
                // Strict improvement keeps the shortest unit on ties.
                if cand > best[i][j].0 {
                    best[i][j] = (cand, k);
                }
            }
        }
    }
    let mut units = Vec::with_capacity(nj);
    let (mut i, mut j) = (ni, nj);
    while j > 0 {
        let k = best[i][j].1.max(1);
        units.push(unit_symbol(&pair.input[i - k..i], &pair.output[j - 1]));
        i -= k;
        j -= 1;
    }
    units.reverse();
    units
}

/// EM over monotone segmentations starting from uniform unit
/// probabilities. Pairs that cannot be segmented are skipped and counted.
pub fn align(pairs: &[TrainingPair], cfg: &AlignConfig) -> Result<AlignResult> {
    if cfg.max_p < 1 {
        return Err(Error::Config("max_p must be at least 1".into()));
    }
    for p in pairs {
        for s in p.input.iter().chain(&p.output) {
            check_symbol(s)?;
        }
        if !(p.weight >= 0.0) {
            return Err(Error::Config("training pair weight must be >= 0".into()));
        }
    }
    let (good, bad): (Vec<&TrainingPair>, Vec<&TrainingPair>) =
        pairs.iter().partition(|p| alignable(p, cfg.max_p));
    if !bad.is_empty() {
        warn!("skipping {} unalignable training pairs", bad.len());
    }
    let good: Vec<TrainingPair> = good.into_iter().cloned().collect();

    // Uniform start over every unit some lattice contains.
    let mut units = std::collections::BTreeSet::new();
    for p in &good {
        units.extend(Lattice::new(p, cfg.max_p).names.into_values());
    }
    let uniform = 1.0 / units.len().max(1) as f64;
    let mut probs = BTreeMap::new();
    let mut lls = Vec::new();
    for _ in 0..cfg.max_iters.max(1) {
        // After the first M-step, units without expected count have
        // probability zero.
        let default = if lls.is_empty() { uniform } else { 0.0 };
        let (counts, ll) = expected_counts(&good, &probs, default, cfg.max_p);
        let total: f64 = counts.values().sum();
        let converged = lls
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= cfg.tol * prev.abs().max(1e-300));
        lls.push(ll);
        if total > 0.0 {
            probs = counts.into_iter().map(|(k, c)| (k, c / total)).collect();
        }
        if converged {
            break;
        }
    }
    let sequences = good
        .iter()
        .map(|p| (viterbi(p, &probs, cfg.max_p), p.weight))
        .collect();
    Ok(AlignResult {
        sequences,
        probs,
        log_likelihoods: lls,
        skipped: bad.len(),
    })
}
