use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One step of an edit alignment; indices into the reference / hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EditOp {
    Match(usize, usize),
    Sub(usize, usize),
    Del(usize),
    Ins(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WerStats {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl WerStats {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// Percentage, undefined for an empty reference.
    pub fn wer(&self) -> Option<f64> {
        (self.ref_len > 0).then(|| 100.0 * self.errors() as f64 / self.ref_len as f64)
    }

    pub fn add(&mut self, other: &WerStats) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.ref_len += other.ref_len;
    }
}

/// Minimum edit alignment with unit costs. Among optimal alignments the
/// backtrace prefers a diagonal step (match or substitution), then a
/// deletion, then an insertion.
pub fn align<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hyp: &[T]) -> Vec<EditOp> {
    let (n, m) = (reference.len(), hyp.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let same = reference[i - 1].as_ref() == hyp[j - 1].as_ref();
            let diag = d[i - 1][j - 1] + usize::from(!same);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hyp[j - 1].as_ref();
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                ops.push(if same {
                    EditOp::Match(i - 1, j - 1)
                } else {
                    EditOp::Sub(i - 1, j - 1)
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops.push(EditOp::Del(i - 1));
            i -= 1;
        } else {
            ops.push(EditOp::Ins(j - 1));
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

pub fn stats_of(ops: &[EditOp], ref_len: usize) -> WerStats {
    let mut s = WerStats {
        ref_len,
        ..WerStats::default()
    };
    for op in ops {
        match op {
            EditOp::Match(..) => {}
            EditOp::Sub(..) => s.substitutions += 1,
            EditOp::Del(_) => s.deletions += 1,
            EditOp::Ins(_) => s.insertions += 1,
        }
    }
    s
}

/// Edit counts of `hyp` against a non-empty `reference`.
pub fn wer<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hyp: &[T]) -> Result<WerStats> {
    if reference.is_empty() {
        return Err(Error::Undefined("WER of an empty reference".into()));
    }
    Ok(stats_of(&align(reference, hyp), reference.len()))
}

/// Whether reference words `[start, end)` are all matched exactly with no
/// insertion between them.
pub fn span_correct(ops: &[EditOp], start: usize, end: usize) -> bool {
    let mut last_ref: Option<usize> = None;
    for op in ops {
        match *op {
            EditOp::Match(i, _) => {
                last_ref = Some(i);
            }
            EditOp::Sub(i, _) | EditOp::Del(i) => {
                if (start..end).contains(&i) {
                    return false;
                }
                last_ref = Some(i);
            }
            EditOp::Ins(_) => {
                // Strictly inside: after a span word and before the span's last word.
                if let Some(i) = last_ref {
                    if i >= start && i + 1 < end {
                        return false;
                    }
                }
            }
        }
    }
    true
}
