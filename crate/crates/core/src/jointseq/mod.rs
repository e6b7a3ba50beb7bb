//! Joint-sequence models over (input-subsequence, single-output) pair
//! units: EM alignment, weighted n-gram training, unit pruning, N-best.
//!
//! Alphabets are plain strings, so the same code serves phone-to-wordpiece
//! and grapheme-to-phone models.

mod align;
mod model;
mod nbest;

use crate::error::{Error, Result};
use crate::tokenize::WordpieceModel;

pub use align::{align, expected_counts, segmentations, AlignConfig, AlignResult};
pub use model::{prune_units, read_joint, train_joint, write_joint, JointModel};
pub use nbest::{nbest, Nbest};

/// Separates input symbols inside a unit name.
pub const INPUT_SEP: char = '|';
/// Separates the input part from the output symbol.
pub const OUTPUT_SEP: char = '}';

/// A weighted (input sequence, output sequence) training example.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<String>,
    pub output: Vec<String>,
    pub weight: f64,
}

pub fn unit_symbol<S: AsRef<str>>(input: &[S], output: &str) -> String {
    let mut s = String::new();
    for (i, p) in input.iter().enumerate() {
        if i > 0 {
            s.push(INPUT_SEP);
        }
        s.push_str(p.as_ref());
    }
    s.push(OUTPUT_SEP);
    s.push_str(output);
    s
}

/// Splits a unit name into its input symbols and output symbol.
pub fn parse_unit(sym: &str) -> Option<(Vec<&str>, &str)> {
    let (inp, out) = sym.rsplit_once(OUTPUT_SEP)?;
    if inp.is_empty() || out.is_empty() {
        return None;
    }
    Some((inp.split(INPUT_SEP).collect(), out))
}

fn check_symbol(s: &str) -> Result<()> {
    if s.is_empty()
        || s.contains(INPUT_SEP)
        || s.contains(OUTPUT_SEP)
        || s.chars().any(char::is_whitespace)
    {
        return Err(Error::Config(format!("symbol {s:?} cannot be used in a pair unit")));
    }
    Ok(())
}

/// Reads `word<TAB>frequency<TAB>inputs<TAB>outputs` lines. When the output
/// column is missing, the word is tokenized with `wp`.
pub fn read_training_pairs(text: &str, wp: Option<&WordpieceModel>) -> Result<Vec<TrainingPair>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let ln = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 || cols.len() > 4 {
            return Err(Error::parse(ln, "expected 3 or 4 tab-separated columns"));
        }
        let weight: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad frequency {:?}", cols[1])))?;
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::parse(ln, "frequency must be finite and >= 0"));
        }
        let input: Vec<String> = cols[2].split_whitespace().map(String::from).collect();
        let output: Vec<String> = match cols.get(3).filter(|c| !c.trim().is_empty()) {
            Some(c) => c.split_whitespace().map(String::from).collect(),
            None => {
                let wp = wp.ok_or_else(|| {
                    Error::parse(ln, "output column missing and no wordpiece model given")
                })?;
                wp.tokenize_word_str(cols[0])?
            }
        };
        if input.is_empty() || output.is_empty() {
            return Err(Error::parse(ln, "empty input or output sequence"));
        }
        out.push(TrainingPair {
            input,
            output,
            weight,
        });
    }
    Ok(out)
}
