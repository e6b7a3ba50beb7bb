use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::ngram::{read_arpa, train_weighted, write_arpa, LmAutomaton, NgramModel, TrainConfig};
use crate::wfst::Label;

use super::parse_unit;

/// An n-gram over pair units.
#[derive(Clone, Debug)]
pub struct JointModel {
    ngram: NgramModel,
    lm: LmAutomaton,
    max_p: usize,
    /// Unit ids grouped by their input sequence.
    by_input: HashMap<Vec<String>, Vec<Label>>,
    outputs: Vec<Option<String>>,
}

impl JointModel {
    pub fn from_ngram(ngram: NgramModel) -> Result<Self> {
        let mut by_input: HashMap<Vec<String>, Vec<Label>> = HashMap::new();
        let mut outputs = vec![None; ngram.vocab().len()];
        let mut max_p = 1;
        for (id, sym) in ngram.vocab().iter() {
            let Some((inp, out)) = parse_unit(sym) else {
                continue;
            };
            max_p = max_p.max(inp.len());
            by_input
                .entry(inp.iter().map(|s| s.to_string()).collect())
                .or_default()
                .push(id);
            outputs[id as usize] = Some(out.to_string());
        }
        if by_input.is_empty() {
            return Err(Error::Config("joint model has no pair units".into()));
        }
        let lm = LmAutomaton::new(&ngram);
        Ok(JointModel {
            ngram,
            lm,
            max_p,
            by_input,
            outputs,
        })
    }

    pub fn ngram(&self) -> &NgramModel {
        &self.ngram
    }

    pub(crate) fn automaton(&self) -> &LmAutomaton {
        &self.lm
    }

    pub fn order(&self) -> usize {
        self.ngram.order()
    }

    pub fn max_p(&self) -> usize {
        self.max_p
    }

    pub fn num_units(&self) -> usize {
        self.by_input.values().map(Vec::len).sum()
    }

    /// Stored n-gram count, the model's size.
    pub fn num_entries(&self) -> usize {
        self.ngram.num_entries()
    }

    pub fn units_for(&self, input: &[String]) -> &[Label] {
        self.by_input.get(input).map_or(&[], Vec::as_slice)
    }

    pub fn output_of(&self, unit: Label) -> Option<&str> {
        self.outputs.get(unit as usize)?.as_deref()
    }

    /// Unit names grouped by input sequence with their unigram costs.
    pub fn unigram_costs(&self) -> BTreeMap<Vec<String>, Vec<(String, f64)>> {
        let mut out: BTreeMap<Vec<String>, Vec<(String, f64)>> = BTreeMap::new();
        for (inp, ids) in &self.by_input {
            let v = ids
                .iter()
                .map(|&id| {
                    let name = self.ngram.vocab().symbol(id).unwrap_or_default().to_string();
                    (name, -self.ngram.prob(&[], id))
                })
                .collect();
            out.insert(inp.clone(), v);
        }
        out
    }
}

/// Trains the unit n-gram from weighted unit sequences.
pub fn train_joint(aligned: &[(Vec<String>, f64)], order: usize) -> Result<JointModel> {
    if aligned.is_empty() {
        return Err(Error::Config("no aligned sequences to train on".into()));
    }
    let corpus: Vec<(&[String], f64)> = aligned.iter().map(|(s, w)| (s.as_slice(), *w)).collect();
    let ngram = train_weighted(&corpus, &[] as &[&str], &TrainConfig::new(order))?;
    JointModel::from_ngram(ngram)
}

/// Keeps, for every input sequence, the units whose unigram cost (negated
/// natural log) is within `beam` of the best unit for that input.
pub fn prune_units(model: &JointModel, beam: f64) -> Result<JointModel> {
    if beam.is_nan() || beam < 0.0 {
        return Err(Error::Config(format!("unit beam {beam} must be >= 0")));
    }
    let mut keep = vec![false; model.ngram.vocab().len()];
    for ids in model.by_input.values() {
        let costs: Vec<f64> = ids.iter().map(|&id| -model.ngram.prob(&[], id)).collect();
        let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
        for (&id, &c) in ids.iter().zip(&costs) {
            if c - best <= beam {
                keep[id as usize] = true;
            }
        }
    }
    if model.by_input.values().flatten().all(|&id| keep[id as usize]) {
        return Ok(model.clone());
    }
    let pruned = model.ngram.retain_tokens(|id, _| keep[id as usize]);
    JointModel::from_ngram(pruned)
}

/// ARPA text with `p1|p2}wp` unit names.
pub fn write_joint(model: &JointModel) -> String {
    write_arpa(&model.ngram)
}

pub fn read_joint(text: &str) -> Result<JointModel> {
    JointModel::from_ngram(read_arpa(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn groups_units_by_input() {
        let m = train_joint(
            &[(seq("k|ay}▁kai t}t"), 1.0), (seq("k|ay}▁ki t}te"), 1.0)],
            2,
        )
        .unwrap();
        let ki: Vec<String> = seq("k ay");
        assert_eq!(m.units_for(&ki).len(), 2);
        assert_eq!(m.max_p(), 2);
        assert_eq!(m.num_units(), 4);
    }

    #[test]
    fn infinite_beam_is_identity() {
        let m = train_joint(&[(seq("a}x b}y"), 3.0), (seq("a}z"), 1.0)], 2).unwrap();
        let p = prune_units(&m, f64::INFINITY).unwrap();
        assert_eq!(write_joint(&p), write_joint(&m));
    }

    #[test]
    fn serialization_round_trip() {
        let m = train_joint(&[(seq("a}x b|c}y"), 2.0)], 3).unwrap();
        let text = write_joint(&m);
        let back = read_joint(&text).unwrap();
        assert_eq!(write_joint(&back), text);
        assert_eq!(back.max_p(), 2);
    }
}
