use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::wfst::Label;

const MAGIC: &[u8; 6] = b"CTCEM1";

/// Per-frame costs (negated natural-log posteriors) over CTC labels.
/// Column `j` holds label id `j + 1` of the wordpiece table, so column 0 is
/// the blank.
#[derive(Clone, Debug, PartialEq)]
pub struct EmissionMatrix {
    frames: usize,
    vocab: usize,
    costs: Vec<f32>,
}

impl EmissionMatrix {
    pub fn new(frames: usize, vocab: usize, costs: Vec<f32>) -> Result<Self> {
        if vocab == 0 {
            return Err(Error::Config("emission vocabulary is empty".into()));
        }
        if costs.len() != frames * vocab {
            return Err(Error::Config(format!(
                "emission matrix has {} values, expected {frames}x{vocab}",
                costs.len()
            )));
        }
        if costs.iter().any(|c| c.is_nan()) {
            return Err(Error::Config("emission matrix contains NaN".into()));
        }
        Ok(EmissionMatrix {
            frames,
            vocab,
            costs,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Number of CTC labels (wordpieces plus blank).
    pub fn vocab(&self) -> usize {
        self.vocab
    }

    #[inline]
    pub fn cost(&self, frame: usize, label: Label) -> f32 {
        self.costs[frame * self.vocab + label as usize - 1]
    }

    pub fn row(&self, frame: usize) -> &[f32] {
        &self.costs[frame * self.vocab..(frame + 1) * self.vocab]
    }

    /// Label with the lowest cost in a frame.
    pub fn argmin(&self, frame: usize) -> Label {
        let row = self.row(frame);
        let mut best = 0;
        for (j, &c) in row.iter().enumerate() {
            if c < row[best] {
                best = j;
            }
        }
        best as Label + 1
    }

    /// Largest deviation of Σ exp(-cost) from one over all rows.
    pub fn max_row_error(&self) -> f64 {
        (0..self.frames)
            .map(|t| {
                let s: f64 = self.row(t).iter().map(|&c| (-(c as f64)).exp()).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Shifts each row so its posteriors sum to one.
    pub fn renormalize(&mut self) {
        for t in 0..self.frames {
            let row = &mut self.costs[t * self.vocab..(t + 1) * self.vocab];
            let m = row.iter().copied().fold(f32::INFINITY, f32::min) as f64;
            let s: f64 = row.iter().map(|&c| (-(c as f64 - m)).exp()).sum();
            let shift = m - s.ln();
            for c in row.iter_mut() {
                *c = (*c as f64 - shift) as f32;
            }
        }
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.frames as u32).to_le_bytes())?;
        w.write_all(&(self.vocab as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.costs.len() * 4);
        for c in &self.costs {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(14 + self.costs.len() * 4);
        self.write_binary(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::parse(0, "not an emission file (bad magic)"));
        }
        let mut u = [0u8; 4];
        r.read_exact(&mut u)?;
        let frames = u32::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let vocab = u32::from_le_bytes(u) as usize;
        let mut data = vec![0u8; frames * vocab * 4];
        r.read_exact(&mut data)?;
        let costs = data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Self::new(frames, vocab, costs)
    }

    /// One frame per line, tab-separated costs.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in 0..self.frames {
            let row: Vec<String> = self.row(t).iter().map(|c| c.to_string()).collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut costs = Vec::new();
        let mut vocab = None;
        let mut frames = 0;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f32> = line
                .split('\t')
                .map(|v| v.trim().parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(n + 1, "bad emission value"))?;
            match vocab {
                None => vocab = Some(row.len()),
                Some(v) if v != row.len() => {
                    return Err(Error::parse(n + 1, "ragged emission rows"));
                }
                _ => {}
            }
            costs.extend(row);
            frames += 1;
        }
        Self::new(frames, vocab.unwrap_or(0), costs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmissionMatrix {
        EmissionMatrix::new(2, 3, vec![0.1, 2.5, 3.0, 1.25, 0.5, 7.0]).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let m = sample();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..6], b"CTCEM1");
        let back = EmissionMatrix::read_binary(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn tsv_round_trip() {
        let m = sample();
        assert_eq!(EmissionMatrix::from_tsv(&m.to_tsv()).unwrap(), m);
    }

    #[test]
    fn renormalize_rows() {
        let mut m = sample();
        m.renormalize();
        assert!(m.max_row_error() < 1e-5);
        assert_eq!(m.argmin(0), 1);
        assert_eq!(m.argmin(1), 2);
    }

    #[test]
    fn shape_checked() {
        assert!(EmissionMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(EmissionMatrix::read_binary(&mut &b"XXXXXX"[..]).is_err());
    }
}
