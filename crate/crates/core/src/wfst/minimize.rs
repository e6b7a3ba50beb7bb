use std::collections::HashMap;

use crate::error::{Error, Result};

use super::determinize::DELTA;
use super::{shortest_distance_to_final, Arc, EncodeTable, Label, StateId, Weight, Wfst};

/// Minimizes a deterministic FST.
///
/// Weights are first pushed towards the start state so equivalent suffixes
/// carry identical weights, then states are merged by partition refinement
/// on `(label, weight, target class)` signatures. Transducers must be
/// deterministic in the encoded `(ilabel, olabel)` alphabet.
pub fn minimize(fst: &Wfst) -> Result<Wfst> {
    if fst.is_acceptor() {
        let mut out = minimize_acceptor(fst)?;
        out.set_input_symbols(fst.input_symbols().cloned());
        out.set_output_symbols(fst.output_symbols().cloned());
        return Ok(out);
    }
    let mut table = EncodeTable::new();
    let encoded = table.encode(fst);
    let mut out = table.decode(&minimize_acceptor(&encoded)?).canonicalize();
    out.set_input_symbols(fst.input_symbols().cloned());
    out.set_output_symbols(fst.output_symbols().cloned());
    Ok(out)
}

fn minimize_acceptor(fst: &Wfst) -> Result<Wfst> {
    if !fst.is_deterministic() {
        return Err(Error::Precondition(
            "minimize requires a deterministic input".into(),
        ));
    }
    let trimmed = fst.connect();
    let Some(start) = trimmed.start() else {
        return Ok(trimmed);
    };
    let pushed = push_weights(&trimmed, start)?;
    let n = pushed.num_states();

    // Initial partition: by quantized final weight.
    let mut class: Vec<u32> = {
        let mut ids: HashMap<i64, u32> = HashMap::new();
        (0..n as StateId)
            .map(|s| {
                let k = pushed.final_weight(s).quantize(DELTA);
                let next = ids.len() as u32;
                *ids.entry(k).or_insert(next)
            })
            .collect()
    };
    let mut num_classes = class.iter().copied().max().map_or(0, |m| m + 1);
    loop {
        let mut ids: HashMap<(u32, Vec<(Label, i64, u32)>), u32> = HashMap::new();
        let next: Vec<u32> = (0..n as StateId)
            .map(|s| {
                let mut sig: Vec<(Label, i64, u32)> = pushed
                    .arcs(s)
                    .iter()
                    .map(|a| (a.ilabel, a.weight.quantize(DELTA), class[a.nextstate as usize]))
                    .collect();
                sig.sort_unstable();
                let fresh = ids.len() as u32;
                *ids.entry((class[s as usize], sig)).or_insert(fresh)
            })
            .collect();
        let count = ids.len() as u32;
        class = next;
        if count == num_classes {
            break;
        }
        num_classes = count;
    }

    let mut out = pushed.empty_like();
    for _ in 0..num_classes {
        out.add_state();
    }
    let mut done = vec![false; num_classes as usize];
    for s in 0..n as StateId {
        let c = class[s as usize];
        if done[c as usize] {
            continue;
        }
        done[c as usize] = true;
        out.set_final(c, pushed.final_weight(s));
        for a in pushed.arcs(s) {
            out.add_arc(
                c,
                Arc {
                    nextstate: class[a.nextstate as usize],
                    ..*a
                },
            );
        }
    }
    out.set_start(class[start as usize]);
    Ok(out.canonicalize())
}

/// Reweights with potentials `V(q)` = distance to a final state, except
/// `V(start) = 0`, which preserves every complete path weight without an
/// initial weight.
fn push_weights(fst: &Wfst, start: StateId) -> Result<Wfst> {
    let mut potential = shortest_distance_to_final(fst)?;
    potential[start as usize] = Weight::ONE;
    let mut out = fst.clone();
    for s in fst.states() {
        let vs = potential[s as usize];
        out.set_final(s, Weight::divide(fst.final_weight(s), vs));
        for a in out.arcs_mut(s) {
            let vt = potential[a.nextstate as usize];
            a.weight = Weight::divide(a.weight.times(vt), vs);
        }
    }
    Ok(out)
}
