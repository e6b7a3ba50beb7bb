use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{Arc, StateId, Weight, Wfst};

/// AT&T text: `src<TAB>dst<TAB>ilabel<TAB>olabel<TAB>weight` per arc and
/// `state<TAB>weight` per final state. The start state's lines come first.
/// Labels are numeric ids; weights carry six fractional digits.
pub fn write_text(fst: &Wfst) -> String {
    let mut out = String::new();
    let Some(start) = fst.start() else {
        return out;
    };
    let order = std::iter::once(start).chain(fst.states().filter(|&s| s != start));
    for s in order {
        for a in fst.arcs(s) {
            let _ = writeln!(
                out,
                "{s}\t{}\t{}\t{}\t{}",
                a.nextstate, a.ilabel, a.olabel, a.weight
            );
        }
        let fw = fst.final_weight(s);
        if !fw.is_zero() {
            let _ = writeln!(out, "{s}\t{fw}");
        }
    }
    out
}

fn parse_weight(s: &str, line: usize) -> Result<Weight> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("infinity") || s.eq_ignore_ascii_case("inf") {
        return Ok(Weight::ZERO);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(line, format!("bad weight {s:?}")))?;
    if v.is_nan() {
        return Err(Error::parse(line, "NaN weight"));
    }
    Ok(Weight::new(v))
}

fn parse_id(s: &str, line: usize) -> Result<u32> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad integer {s:?}")))
}

/// Parses the format written by [`write_text`]. The source state of the
/// first line is the start state; missing weights default to zero cost.
pub fn read_text(text: &str) -> Result<Wfst> {
    enum Line {
        Arc(StateId, Arc),
        Final(StateId, Weight),
    }
    let mut lines = Vec::new();
    let mut max_state: Option<StateId> = None;
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        let parsed = match cols.len() {
            1 | 2 => {
                let s = parse_id(cols[0], ln)?;
                let w = match cols.get(1) {
                    Some(c) => parse_weight(c, ln)?,
                    None => Weight::ONE,
                };
                Line::Final(s, w)
            }
            4 | 5 => {
                let s = parse_id(cols[0], ln)?;
                let d = parse_id(cols[1], ln)?;
                let il = parse_id(cols[2], ln)?;
                let ol = parse_id(cols[3], ln)?;
                let w = match cols.get(4) {
                    Some(c) => parse_weight(c, ln)?,
                    None => Weight::ONE,
                };
                max_state = Some(max_state.map_or(d, |m| m.max(d)));
                Line::Arc(s, Arc::new(il, ol, w, d))
            }
            k => return Err(Error::parse(ln, format!("expected 2 or 5 columns, got {k}"))),
        };
        let s = match &parsed {
            Line::Arc(s, _) | Line::Final(s, _) => *s,
        };
        max_state = Some(max_state.map_or(s, |m| m.max(s)));
        lines.push(parsed);
    }
    let mut fst = Wfst::new();
    let Some(max_state) = max_state else {
        return Ok(fst);
    };
    for _ in 0..=max_state {
        fst.add_state();
    }
    for (i, l) in lines.into_iter().enumerate() {
        match l {
            Line::Arc(s, a) => {
                if i == 0 {
                    fst.set_start(s);
                }
                fst.add_arc(s, a);
            }
            Line::Final(s, w) => {
                if i == 0 {
                    fst.set_start(s);
                }
                fst.set_final(s, w);
            }
        }
    }
    Ok(fst)
}
