use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::jointseq::{nbest, JointModel};

/// word -> pronunciations (phone sequences), in insertion order per word.
pub type PronLexicon = BTreeMap<String, Vec<Vec<String>>>;

/// `word<TAB>phone phone ...` lines; a word may repeat for extra
/// pronunciations.
pub fn read_pron_lexicon(text: &str) -> Result<PronLexicon> {
    let mut lex = PronLexicon::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (w, p) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(n + 1, "expected word<TAB>phones"))?;
        let phones: Vec<String> = p.split_whitespace().map(String::from).collect();
        if w.trim().is_empty() || phones.is_empty() {
            return Err(Error::parse(n + 1, "empty word or pronunciation"));
        }
        let prons = lex.entry(w.trim().to_string()).or_default();
        if !prons.contains(&phones) {
            prons.push(phones);
        }
    }
    Ok(lex)
}

pub fn write_pron_lexicon(lex: &PronLexicon) -> String {
    let mut out = String::new();
    for (w, prons) in lex {
        for p in prons {
            let _ = writeln!(out, "{w}\t{}", p.join(" "));
        }
    }
    out
}

/// Something that proposes wordpiece sequences for a pronunciation.
pub trait PronTokenizer {
    /// Up to `n` wordpiece sequences, best first.
    fn tokenizations(&self, pron: &[String], n: usize) -> Vec<Vec<String>>;
}

impl PronTokenizer for JointModel {
    fn tokenizations(&self, pron: &[String], n: usize) -> Vec<Vec<String>> {
        nbest(self, pron, n).hyps.into_iter().map(|(s, _)| s).collect()
    }
}
