use std::collections::{BTreeMap, HashMap};
use std::sync::Arc as Shared;

use crate::error::{Error, Result};
use crate::wfst::{Label, SymbolTable};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK_ID: Label = 1;
pub const BOS_ID: Label = 2;
pub const EOS_ID: Label = 3;

/// Log probability stored for `<s>` as a unigram (it is never predicted).
pub(crate) const BOS_LOGP: f64 = -99.0 * std::f64::consts::LN_10;

/// One stored n-gram. Values are natural logs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub logp: f64,
    pub backoff: Option<f64>,
}

/// Backoff n-gram model. `entries[k]` holds the stored (k+1)-grams keyed by
/// their full token sequence (history followed by the predicted token).
#[derive(Clone, Debug)]
pub struct NgramModel {
    pub(crate) order: usize,
    pub(crate) vocab: Shared<SymbolTable>,
    pub(crate) entries: Vec<BTreeMap<Vec<Label>, Entry>>,
}

/// Table with `<eps>`, `<unk>`, `<s>`, `</s>` at ids 0..=3 followed by
/// `tokens` in the given order.
pub fn vocabulary<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> SymbolTable {
    let mut t = SymbolTable::new();
    t.add(UNK);
    t.add(BOS);
    t.add(EOS);
    for tok in tokens {
        t.add(tok.as_ref());
    }
    t
}

impl NgramModel {
    pub(crate) fn from_parts(
        order: usize,
        vocab: Shared<SymbolTable>,
        entries: Vec<BTreeMap<Vec<Label>, Entry>>,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config("n-gram order must be at least 1".into()));
        }
        for (i, s) in [UNK, BOS, EOS].iter().enumerate() {
            if vocab.id(s) != Some(i as Label + 1) {
                return Err(Error::Config(format!("vocabulary must place {s} at id {}", i + 1)));
            }
        }
        Ok(NgramModel {
            order,
            vocab,
            entries,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Shared<SymbolTable> {
        &self.vocab
    }

    pub fn entry(&self, ngram: &[Label]) -> Option<&Entry> {
        if ngram.is_empty() || ngram.len() > self.order {
            return None;
        }
        self.entries[ngram.len() - 1].get(ngram)
    }

    /// Stored n-grams of length `n`, in sorted key order.
    pub fn ngrams(&self, n: usize) -> impl Iterator<Item = (&Vec<Label>, &Entry)> {
        self.entries
            .get(n.wrapping_sub(1))
            .into_iter()
            .flat_map(|m| m.iter())
    }

    pub fn num_entries(&self) -> usize {
        self.entries.iter().map(BTreeMap::len).sum()
    }

    pub fn counts_per_order(&self) -> Vec<usize> {
        self.entries.iter().map(BTreeMap::len).collect()
    }

    /// Token id, mapping unknown strings to `<unk>`.
    pub fn token_id(&self, token: &str) -> Label {
        self.vocab.id(token).unwrap_or(UNK_ID)
    }

    /// Tokens a history can predict: everything except epsilon and `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = Label> + '_ {
        (1..self.vocab.len() as Label).filter(|&id| id != BOS_ID)
    }

    pub(crate) fn backoff_of(&self, history: &[Label]) -> f64 {
        self.entry(history)
            .and_then(|e| e.backoff)
            .unwrap_or(0.0)
    }

    /// Natural-log probability of `token` after `history` by backoff
    /// recursion. Only the last `order - 1` history tokens matter.
    pub fn prob(&self, history: &[Label], token: Label) -> f64 {
        let token = if (token as usize) < self.vocab.len() && token != 0 {
            token
        } else {
            UNK_ID
        };
        let keep = history.len().min(self.order - 1);
        let mut h = &history[history.len() - keep..];
        let mut acc = 0.0;
        let mut key = Vec::with_capacity(keep + 1);
        loop {
            key.clear();
            key.extend_from_slice(h);
            key.push(token);
            if let Some(e) = self.entries[h.len()].get(&key) {
                return acc + e.logp;
            }
            if h.is_empty() {
                // Every vocabulary token has a unigram; reaching here means
                // the model was pruned of it, so fall back to <unk>.
                return acc
                    + self.entries[0]
                        .get(&vec![UNK_ID])
                        .map_or(f64::NEG_INFINITY, |e| e.logp);
            }
            acc += self.backoff_of(h);
            h = &h[1..];
        }
    }

    pub fn prob_str(&self, history: &[&str], token: &str) -> f64 {
        let h: Vec<Label> = history.iter().map(|t| self.token_id(t)).collect();
        self.prob(&h, self.token_id(token))
    }

    /// Natural-log probability of a full sentence including `</s>`.
    pub fn sentence_logprob(&self, tokens: &[Label]) -> f64 {
        let mut hist = vec![BOS_ID];
        let mut total = 0.0;
        for &t in tokens.iter().chain(std::iter::once(&EOS_ID)) {
            total += self.prob(&hist, t);
            hist.push(t);
        }
        total
    }

    /// Every history that carries a backoff weight, plus the empty one.
    pub fn histories(&self) -> Vec<Vec<Label>> {
        let mut out = vec![Vec::new()];
        for m in &self.entries {
            out.extend(m.iter().filter(|(_, e)| e.backoff.is_some()).map(|(k, _)| k.clone()));
        }
        out
    }

    /// Recomputes backoff weights so each history's distribution sums to
    /// one. Unigrams are rescaled to sum to one first. Entries that are no
    /// longer a prefix of a longer n-gram lose their backoff.
    pub fn renormalize(&mut self) {
        let uni_sum: f64 = self.entries[0]
            .iter()
            .filter(|(k, _)| k[0] != BOS_ID)
            .map(|(_, e)| e.logp.exp())
            .sum();
        if uni_sum > 0.0 && (uni_sum - 1.0).abs() > 1e-12 {
            let shift = uni_sum.ln();
            for (k, e) in self.entries[0].iter_mut() {
                if k[0] != BOS_ID {
                    e.logp -= shift;
                }
            }
        }
        for n in 1..self.order {
            let mut sums: BTreeMap<Vec<Label>, (f64, f64)> = BTreeMap::new();
            for (k, e) in &self.entries[n] {
                let h = &k[..n];
                let lower = self.prob(&h[1..], k[n]);
                let s = sums.entry(h.to_vec()).or_insert((0.0, 0.0));
                s.0 += e.logp.exp();
                s.1 += lower.exp();
            }
            for (k, e) in self.entries[n - 1].iter_mut() {
                e.backoff = sums.get(k).map(|&(num, den)| backoff_weight(num, den));
            }
        }
        if let Some(last) = self.entries.last_mut() {
            for e in last.values_mut() {
                e.backoff = None;
            }
        }
    }

    /// Drops every token not accepted by `keep` (special tokens are always
    /// kept) together with all n-grams mentioning it, then renormalizes.
    /// Ids are reassigned densely in the original order.
    pub fn retain_tokens(&self, keep: impl Fn(Label, &str) -> bool) -> NgramModel {
        let mut remap: HashMap<Label, Label> = HashMap::new();
        let mut kept = Vec::new();
        for (id, s) in self.vocab.iter().skip(1) {
            if id <= EOS_ID || keep(id, s) {
                remap.insert(id, remap.len() as Label + 1);
                if id > EOS_ID {
                    kept.push(s.to_string());
                }
            }
        }
        let vocab = Shared::new(vocabulary(&kept));
        let entries = self
            .entries
            .iter()
            .map(|m| {
                m.iter()
                    .filter_map(|(k, e)| {
                        let key: Option<Vec<Label>> = k.iter().map(|t| remap.get(t).copied()).collect();
                        key.map(|key| (key, *e))
                    })
                    .collect()
            })
            .collect();
        let mut out = NgramModel {
            order: self.order,
            vocab,
            entries,
        };
        out.renormalize();
        out
    }
}

/// ln of (1 - Σ stored) / (1 - Σ lower-order for the same tokens).
pub(crate) fn backoff_weight(stored: f64, lower: f64) -> f64 {
    let num = (1.0 - stored).max(0.0);
    let den = (1.0 - lower).max(0.0);
    if den <= 1e-300 || num <= 1e-300 {
        // All mass already explicit: backing off is never needed, but the
        // weight must stay finite to keep the model printable.
        return BOS_LOGP;
    }
    (num / den).ln()
}
