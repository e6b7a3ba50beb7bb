use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc as Shared;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wfst::Label;

use super::model::{vocabulary, Entry, NgramModel, BOS, BOS_ID, BOS_LOGP, EOS, EOS_ID, UNK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub order: usize,
    /// Wrap sentences in `<s>` / `</s>`.
    pub boundaries: bool,
}

impl TrainConfig {
    pub fn new(order: usize) -> Self {
        TrainConfig {
            order,
            boundaries: true,
        }
    }
}

/// An annotated token range `[start, end)` to be replaced by a class
/// placeholder before counting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpan {
    pub class: String,
    pub start: usize,
    pub end: usize,
}

/// Replaces every span with its class token. Spans must be in range and
/// must not overlap.
pub fn apply_class_spans<S: AsRef<str>>(tokens: &[S], spans: &[ClassSpan]) -> Result<Vec<String>> {
    let mut sorted: Vec<&ClassSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.start);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    for s in sorted {
        if s.start < i || s.start >= s.end || s.end > tokens.len() {
            return Err(Error::Config(format!(
                "class span [{}, {}) invalid for a {}-token sentence",
                s.start,
                s.end,
                tokens.len()
            )));
        }
        out.extend(tokens[i..s.start].iter().map(|t| t.as_ref().to_string()));
        out.push(s.class.clone());
        i = s.end;
    }
    out.extend(tokens[i..].iter().map(|t| t.as_ref().to_string()));
    Ok(out)
}

pub fn train_ngram<S: AsRef<str>>(corpus: &[Vec<S>], cfg: &TrainConfig) -> Result<NgramModel> {
    let weighted: Vec<(&[S], f64)> = corpus.iter().map(|s| (s.as_slice(), 1.0)).collect();
    train_weighted(&weighted, &[] as &[&str], cfg)
}

/// Witten–Bell interpolated estimate, stored in backoff form. Sentence
/// weights scale counts; the number of distinct continuations of a
/// history is unweighted. `extra_vocab` tokens get unigram floor mass even
/// when unseen.
pub fn train_weighted<S: AsRef<str>, E: AsRef<str>>(
    corpus: &[(&[S], f64)],
    extra_vocab: &[E],
    cfg: &TrainConfig,
) -> Result<NgramModel> {
    if cfg.order < 1 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    let mut tokens = BTreeSet::new();
    for (s, _) in corpus {
        for t in s.iter() {
            tokens.insert(t.as_ref());
        }
    }
    for t in extra_vocab {
        tokens.insert(t.as_ref());
    }
    for special in [UNK, BOS, EOS] {
        tokens.remove(special);
    }
    let vocab = Shared::new(vocabulary(&tokens));

    let mut counts: Vec<BTreeMap<Vec<Label>, f64>> = vec![BTreeMap::new(); cfg.order];
    let mut total = 0.0;
    for (sent, w) in corpus {
        if !(*w > 0.0) {
            continue;
        }
        let mut seq = Vec::with_capacity(sent.len() + 2);
        if cfg.boundaries {
            seq.push(BOS_ID);
        }
        seq.extend(sent.iter().map(|t| vocab.id(t.as_ref()).unwrap_or(super::model::UNK_ID)));
        if cfg.boundaries {
            seq.push(EOS_ID);
        }
        let first = usize::from(cfg.boundaries);
        for i in first..seq.len() {
            total += w;
            for n in 1..=cfg.order.min(i + 1) {
                *counts[n - 1].entry(seq[i + 1 - n..=i].to_vec()).or_insert(0.0) += w;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::Config("cannot train an n-gram model on an empty corpus".into()));
    }

    // Unigrams interpolate with the uniform distribution over every
    // predictable token.
    let predictable = (vocab.len() - 2) as f64;
    let types = counts[0].len() as f64;
    let mut uni = BTreeMap::new();
    for id in 1..vocab.len() as Label {
        if id == BOS_ID {
            uni.insert(
                vec![id],
                Entry {
                    logp: BOS_LOGP,
                    backoff: None,
                },
            );
            continue;
        }
        let c = counts[0].get(&vec![id]).copied().unwrap_or(0.0);
        let p = (c + types / predictable) / (total + types);
        uni.insert(
            vec![id],
            Entry {
                logp: p.ln(),
                backoff: None,
            },
        );
    }
    let mut model = NgramModel::from_parts(1, vocab, vec![uni])?;

    for n in 2..=cfg.order {
        let level = &counts[n - 1];
        let mut hist: BTreeMap<&[Label], (f64, f64)> = BTreeMap::new();
        for (k, &c) in level {
            let h = hist.entry(&k[..n - 1]).or_insert((0.0, 0.0));
            h.0 += c;
            h.1 += 1.0;
        }
        let mut entries = BTreeMap::new();
        for (k, &c) in level {
            let (ch, th) = hist[&k[..n - 1]];
            let lower = model.prob(&k[1..n - 1], k[n - 1]).exp();
            let p = (c + th * lower) / (ch + th);
            entries.insert(
                k.clone(),
                Entry {
                    logp: p.ln(),
                    backoff: None,
                },
            );
        }
        model.entries.push(entries);
        model.order = n;
        model.renormalize();
    }
    Ok(model)
}
