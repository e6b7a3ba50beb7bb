use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::EmissionMatrix;
use crate::error::{Error, Result};
use crate::tokenize::WordpieceModel;
use crate::wfst::{Label, SymbolTable};

/// Cost given to every non-planted label when `confusion_temp` is zero.
pub const NOISELESS_FLOOR: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Inclusive range of frames per planted piece.
    pub frames_per_piece: (usize, usize),
    pub blank_prob: f64,
    pub confusion_temp: f64,
    /// Amplitude of the per-label random perturbation of distances.
    pub jitter: f64,
    /// Weight of the piece prior baked into the logits (the acoustic
    /// model's internal language model).
    pub prior_weight: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            seed: 7,
            frames_per_piece: (2, 3),
            blank_prob: 0.3,
            confusion_temp: 0.1,
            jitter: 0.2,
            prior_weight: 0.3,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless(seed: u64) -> Self {
        NoiseConfig {
            seed,
            confusion_temp: 0.0,
            jitter: 0.0,
            prior_weight: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.frames_per_piece;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!(
                "frames_per_piece must be a non-empty range of positive counts, got {lo}..={hi}"
            )));
        }
        if !(0.0..=1.0).contains(&self.blank_prob) {
            return Err(Error::Config("blank_prob must be in [0, 1]".into()));
        }
        if !(self.confusion_temp >= 0.0 && self.confusion_temp.is_finite()) {
            return Err(Error::Config("confusion_temp must be finite and >= 0".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::Config("jitter must be finite and >= 0".into()));
        }
        if !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return Err(Error::Config("prior_weight must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Piece-to-piece similarities in (0, 1]; labels absent from a row are
/// maximally distant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfusionMap {
    rows: BTreeMap<Label, Vec<(Label, f64)>>,
}

impl ConfusionMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Symmetric entry.
    pub fn insert(&mut self, a: Label, b: Label, sim: f64) {
        if a == b {
            return;
        }
        for (x, y) in [(a, b), (b, a)] {
            let row = self.rows.entry(x).or_default();
            match row.iter_mut().find(|(l, _)| *l == y) {
                Some(e) => e.1 = sim,
                None => row.push((y, sim)),
            }
        }
    }

    pub fn similar(&self, label: Label) -> &[(Label, f64)] {
        self.rows.get(&label).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Stable per-utterance stream derived from the global seed and an id.
pub fn utterance_rng(seed: u64, id: &str) -> ChaCha8Rng {
    // FNV-1a keeps this independent of std's hasher.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17))
}

fn frame_layout(plan: &[Label], blank: Label, cfg: &NoiseConfig, rng: &mut ChaCha8Rng) -> Vec<Label> {
    let mut frames = Vec::new();
    if rng.gen_bool(cfg.blank_prob) {
        frames.push(blank);
    }
    for (i, &p) in plan.iter().enumerate() {
        let blank_between = rng.gen_bool(cfg.blank_prob);
        if i > 0 && (plan[i - 1] == p || blank_between) {
            frames.push(blank);
        }
        let n = rng.gen_range(cfg.frames_per_piece.0..=cfg.frames_per_piece.1);
        frames.extend(std::iter::repeat(p).take(n));
    }
    if rng.gen_bool(cfg.blank_prob) || frames.is_empty() {
        frames.push(blank);
    }
    frames
}

/// What the simulated acoustic model knows besides the planted labels.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmissionContext<'a> {
    pub confusion: Option<&'a ConfusionMap>,
    /// Prior cost (negated natural log) per label id; the blank and
    /// missing entries count as zero.
    pub prior_costs: Option<&'a [f64]>,
}

/// Emission costs for a planted wordpiece label sequence over `vocab`
/// (labels 1.., blank first). Each planted frame's logits are
/// `-(d + jitter·u)/confusion_temp - prior_weight·prior_cost`, with
/// distance d = 0 for the planted label, 1 − similarity for confusable
/// labels and 1 otherwise.
pub fn synth_emissions(
    plan: &[Label],
    vocab: &SymbolTable,
    ctx: EmissionContext<'_>,
    cfg: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<EmissionMatrix> {
    cfg.validate()?;
    let confusion = ctx.confusion;
    let v = vocab.len() - 1;
    for &p in plan {
        if p < 2 || p as usize > v {
            return Err(Error::Config(format!("planted label {p} is not a wordpiece of the vocabulary")));
        }
    }
    let blank = vocab.blank().unwrap_or(1);
    let frames = frame_layout(plan, blank, cfg, rng);
    let mut costs = Vec::with_capacity(frames.len() * v);
    let mut dist = vec![0.0f64; v];
    for &planted in &frames {
        if cfg.confusion_temp == 0.0 {
            let z = 1.0 + (v as f64 - 1.0) * (-NOISELESS_FLOOR).exp();
            let lz = z.ln();
            for l in 1..=v as Label {
                let c = if l == planted { lz } else { NOISELESS_FLOOR + lz };
                costs.push(c as f32);
            }
            continue;
        }
        dist.iter_mut().for_each(|d| *d = 1.0);
        dist[planted as usize - 1] = 0.0;
        if let Some(map) = confusion {
            for &(l, s) in map.similar(planted) {
                if l >= 1 && (l as usize) <= v {
                    dist[l as usize - 1] = 1.0 - s;
                }
            }
        }
        for d in dist.iter_mut() {
            *d += cfg.jitter * rng.gen::<f64>();
        }
        let mut logits: Vec<f64> = dist.iter().map(|d| -d / cfg.confusion_temp).collect();
        if let Some(prior) = ctx.prior_costs {
            for (i, x) in logits.iter_mut().enumerate() {
                let label = i + 1;
                if label as Label != blank {
                    *x -= cfg.prior_weight * prior.get(label).copied().unwrap_or(0.0);
                }
            }
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        costs.extend(logits.iter().map(|x| (lse - x) as f32));
    }
    EmissionMatrix::new(frames.len(), v, costs)
}

/// Same as [`synth_emissions`] for a plan given as piece strings.
pub fn synth_from_pieces<S: AsRef<str>>(
    plan: &[S],
    wp: &WordpieceModel,
    ctx: EmissionContext<'_>,
    cfg: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<EmissionMatrix> {
    let labels = plan
        .iter()
        .map(|p| {
            wp.id(p.as_ref())
                .ok_or_else(|| Error::Config(format!("planted piece {:?} not in vocabulary", p.as_ref())))
        })
        .collect::<Result<Vec<_>>>()?;
    synth_emissions(&labels, wp.table(), ctx, cfg, rng)
}
