use std::collections::BTreeMap;
use std::f64::consts::LN_10;
use std::fmt::Write as _;
use std::sync::Arc as Shared;

use crate::error::{Error, Result};
use crate::wfst::Label;

use super::model::{vocabulary, Entry, NgramModel, BOS, EOS, UNK};

fn log10_text(ln: f64) -> String {
    let v = ln / LN_10;
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// ARPA text with log10 values and tab-separated fields. Within an order,
/// n-grams are listed in vocabulary-id order.
pub fn write_arpa(model: &NgramModel) -> String {
    let mut out = String::from("\\data\\\n");
    for (i, m) in model.entries.iter().enumerate() {
        let _ = writeln!(out, "ngram {}={}", i + 1, m.len());
    }
    for (i, m) in model.entries.iter().enumerate() {
        let _ = write!(out, "\n\\{}-grams:\n", i + 1);
        for (k, e) in m {
            let words: Vec<&str> = k
                .iter()
                .map(|&t| model.vocab.symbol(t).unwrap_or(UNK))
                .collect();
            let _ = write!(out, "{}\t{}", log10_text(e.logp), words.join(" "));
            if let Some(b) = e.backoff {
                let _ = write!(out, "\t{}", log10_text(b));
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

/// Parses ARPA text. The vocabulary is the unigram list in file order.
pub fn read_arpa(text: &str) -> Result<NgramModel> {
    let mut declared: Vec<usize> = Vec::new();
    let mut raw: Vec<Vec<(Vec<String>, f64, Option<f64>)>> = Vec::new();
    let mut section: Option<usize> = None;
    let mut in_data = false;
    let mut ended = false;
    for (n, line) in text.lines().enumerate() {
        let ln = n + 1;
        let line = line.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if line == "\\data\\" {
            in_data = true;
            continue;
        }
        if line == "\\end\\" {
            ended = true;
            break;
        }
        if let Some(rest) = line.strip_prefix('\\').and_then(|r| r.strip_suffix("-grams:")) {
            let k: usize = rest
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad section header {line:?}")))?;
            if k == 0 || k > declared.len() {
                return Err(Error::parse(ln, format!("undeclared order {k}")));
            }
            section = Some(k);
            in_data = false;
            continue;
        }
        if in_data {
            let rest = line
                .strip_prefix("ngram ")
                .ok_or_else(|| Error::parse(ln, format!("expected ngram count, got {line:?}")))?;
            let (k, c) = rest
                .split_once('=')
                .ok_or_else(|| Error::parse(ln, "malformed ngram count"))?;
            let k: usize = k.trim().parse().map_err(|_| Error::parse(ln, "bad order"))?;
            let c: usize = c.trim().parse().map_err(|_| Error::parse(ln, "bad count"))?;
            if k != declared.len() + 1 {
                return Err(Error::parse(ln, "ngram counts must be listed in order"));
            }
            declared.push(c);
            raw.push(Vec::new());
            continue;
        }
        let Some(k) = section else {
            return Err(Error::parse(ln, format!("unexpected line {line:?}")));
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(ln, "expected 2 or 3 tab-separated fields"));
        }
        let lp: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(ln, "bad log probability"))?;
        let words: Vec<String> = fields[1].split(' ').map(String::from).collect();
        if words.len() != k {
            return Err(Error::parse(ln, format!("expected {k} tokens")));
        }
        let bo = match fields.get(2) {
            Some(b) => Some(
                b.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(ln, "bad backoff"))?
                    * LN_10,
            ),
            None => None,
        };
        raw[k - 1].push((words, lp * LN_10, bo));
    }
    if !ended {
        return Err(Error::parse(text.lines().count(), "missing \\end\\ marker"));
    }
    if raw.is_empty() {
        return Err(Error::parse(1, "no n-grams"));
    }
    for (i, (d, r)) in declared.iter().zip(&raw).enumerate() {
        if *d != r.len() {
            return Err(Error::parse(
                0,
                format!("order {} declares {d} entries but lists {}", i + 1, r.len()),
            ));
        }
    }
    let specials = [UNK, BOS, EOS];
    let vocab = vocabulary(
        raw[0]
            .iter()
            .map(|(w, _, _)| w[0].as_str())
            .filter(|w| !specials.contains(w)),
    );
    let vocab = Shared::new(vocab);
    let mut entries = Vec::with_capacity(raw.len());
    for (i, level) in raw.into_iter().enumerate() {
        let mut m = BTreeMap::new();
        for (words, logp, backoff) in level {
            let mut key: Vec<Label> = Vec::with_capacity(words.len());
            for w in &words {
                key.push(vocab.id(w).ok_or_else(|| {
                    Error::parse(0, format!("{}-gram uses token {w:?} missing from unigrams", i + 1))
                })?);
            }
            m.insert(key, Entry { logp, backoff });
        }
        entries.push(m);
    }
    NgramModel::from_parts(entries.len(), vocab, entries)
}
