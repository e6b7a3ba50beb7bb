use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram::PriorTable;
use crate::wfst::{Arc, Label, Weight, Wfst, EPSILON};

use super::WordpieceModel;

/// Wordpiece prior normalization settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    pub scale: f64,
    pub clip: f64,
    pub blank_cost: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            scale: 0.8,
            clip: 20.0,
            blank_cost: -3.0,
        }
    }
}

impl NormConfig {
    /// Settings for a system without prior normalization: only the blank
    /// cost is applied.
    pub fn unnormalized() -> Self {
        NormConfig {
            blank_cost: 3.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::Config(format!("norm scale {} out of range", self.scale)));
        }
        if !(self.clip.is_finite() && self.clip >= 0.0) {
            return Err(Error::Config(format!("norm clip {} out of range", self.clip)));
        }
        if !self.blank_cost.is_finite() {
            return Err(Error::Config("blank cost must be finite".into()));
        }
        Ok(())
    }

    /// Weight placed on the emission arc that starts piece `prior_cost`.
    pub fn piece_weight(&self, prior_cost: f64) -> f64 {
        -(self.scale * prior_cost.min(self.clip))
    }
}

/// CTC topology. State 0 is the start/blank state; state `i` (for piece id
/// `i + 1`) is "last emitted piece". Entering a piece state emits the
/// piece; staying there consumes repeats; blank returns to state 0.
pub fn build_t(
    model: &WordpieceModel,
    prior: Option<&PriorTable>,
    cfg: &NormConfig,
    normalize: bool,
) -> Result<Wfst> {
    cfg.validate()?;
    let pieces: Vec<(Label, &str)> = model.pieces().collect();
    let mut enter = Vec::with_capacity(pieces.len());
    for &(_, p) in &pieces {
        let w = if normalize {
            let prior = prior.ok_or_else(|| {
                Error::Config("prior normalization requested without a prior table".into())
            })?;
            let c = prior
                .cost(p)
                .ok_or_else(|| Error::Config(format!("prior table has no entry for {p:?}")))?;
            cfg.piece_weight(c)
        } else {
            0.0
        };
        enter.push(Weight::new(w));
    }

    let blank = model.blank();
    let mut t = Wfst::new();
    let start = t.add_state();
    t.set_start(start);
    t.set_final(start, Weight::ONE);
    let piece_state: Vec<u32> = pieces
        .iter()
        .map(|_| {
            let s = t.add_state();
            t.set_final(s, Weight::ONE);
            s
        })
        .collect();

    let from_states = std::iter::once(None).chain(pieces.iter().enumerate().map(|(i, _)| Some(i)));
    for from in from_states {
        let src = from.map_or(start, |i| piece_state[i]);
        t.add_arc(src, Arc::new(blank, EPSILON, cfg.blank_cost, start));
        for (j, &(label, _)) in pieces.iter().enumerate() {
            if from == Some(j) {
                t.add_arc(src, Arc::new(label, EPSILON, Weight::ONE, src));
            } else {
                t.add_arc(src, Arc::new(label, label, enter[j], piece_state[j]));
            }
        }
    }
    t.set_input_symbols(Some(model.table().clone()));
    t.set_output_symbols(Some(model.table().clone()));
    Ok(t)
}
