use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tokenize::WordpieceModel;

use super::train::{train_weighted, TrainConfig};

/// Unigram wordpiece costs (negated natural logs) over a full inventory.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorTable {
    costs: Vec<(String, f64)>,
    index: HashMap<String, usize>,
}

impl PriorTable {
    pub fn from_costs(costs: Vec<(String, f64)>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, (p, c)) in costs.iter().enumerate() {
            if !c.is_finite() || *c < 0.0 {
                return Err(Error::Config(format!("prior cost for {p:?} must be finite and >= 0")));
            }
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate prior entry {p:?}")));
            }
        }
        Ok(PriorTable { costs, index })
    }

    pub fn cost(&self, piece: &str) -> Option<f64> {
        self.index.get(piece).map(|&i| self.costs[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.costs.iter().map(|(p, c)| (p.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// `piece<TAB>cost` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (p, c) in &self.costs {
            let _ = writeln!(out, "{p}\t{c:.6}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut costs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (p, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(n + 1, "expected piece<TAB>cost"))?;
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad cost {c:?}")))?;
            costs.push((p.to_string(), c));
        }
        Self::from_costs(costs)
    }
}

/// Witten–Bell unigram over the wordpiece corpus, restricted to the
/// inventory and renormalized.
pub fn prior_table(corpus: &[Vec<String>], model: &WordpieceModel) -> Result<PriorTable> {
    let inventory: Vec<&str> = model.pieces().map(|(_, p)| p).collect();
    let weighted: Vec<(&[String], f64)> = corpus.iter().map(|s| (s.as_slice(), 1.0)).collect();
    let cfg = TrainConfig {
        order: 1,
        boundaries: false,
    };
    let uni = train_weighted(&weighted, &inventory, &cfg)?;
    let probs: Vec<f64> = inventory
        .iter()
        .map(|p| uni.prob(&[], uni.token_id(p)).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    let costs = inventory
        .iter()
        .zip(&probs)
        .map(|(p, &q)| (p.to_string(), -(q / total).ln()))
        .map(|(p, c)| (p, c.max(0.0)))
        .collect();
    PriorTable::from_costs(costs)
}

/// Contiguous histogram of prior costs: `(bin_low, count)` from the bin of
/// the smallest cost to the bin of the largest.
pub fn prior_histogram(prior: &PriorTable, bin_width: f64) -> Result<Vec<(f64, usize)>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Config(format!("bin width {bin_width} must be > 0")));
    }
    if prior.is_empty() {
        return Ok(Vec::new());
    }
    let bin = |c: f64| (c / bin_width).floor() as i64;
    let lo = prior.iter().map(|(_, c)| bin(c)).min().unwrap_or(0);
    let hi = prior.iter().map(|(_, c)| bin(c)).max().unwrap_or(0);
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for (_, c) in prior.iter() {
        counts[(bin(c) - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, n)| ((lo + i as i64) as f64 * bin_width, n))
        .collect())
}

pub fn histogram_tsv(hist: &[(f64, usize)]) -> String {
    let mut out = String::new();
    for (lo, n) in hist {
        let _ = writeln!(out, "{lo:.6}\t{n}");
    }
    out
}
