use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

use super::{Arc, Label, StateId, Weight, Wfst, EPSILON};

fn is_eps(a: &Arc) -> bool {
    a.ilabel == EPSILON && a.olabel == EPSILON
}

/// Shortest epsilon distances from `src` over `ε:ε` arcs (label-correcting;
/// a state relaxed more than `n` times means a negative cycle).
fn eps_closure(fst: &Wfst, src: StateId) -> Result<BTreeMap<StateId, Weight>> {
    let n = fst.num_states();
    let mut dist: BTreeMap<StateId, Weight> = BTreeMap::from([(src, Weight::ONE)]);
    let mut relaxed = vec![0usize; n];
    let mut queue = VecDeque::from([src]);
    let mut queued = vec![false; n];
    queued[src as usize] = true;
    while let Some(q) = queue.pop_front() {
        queued[q as usize] = false;
        let dq = dist[&q];
        for a in fst.arcs(q).iter().filter(|a| is_eps(a)) {
            let cand = dq.times(a.weight);
            let cur = dist.get(&a.nextstate).copied().unwrap_or(Weight::ZERO);
            if cand.value() < cur.value() - 1e-12 || (cur.is_zero() && !cand.is_zero()) {
                dist.insert(a.nextstate, cand);
                relaxed[a.nextstate as usize] += 1;
                if relaxed[a.nextstate as usize] > n {
                    return Err(Error::Divergence);
                }
                if !queued[a.nextstate as usize] {
                    queued[a.nextstate as usize] = true;
                    queue.push_back(a.nextstate);
                }
            }
        }
    }
    if dist[&src].value() < 0.0 {
        return Err(Error::Divergence);
    }
    Ok(dist)
}

/// Removes every arc whose input and output are both epsilon, preserving the
/// weighted relation. Arcs with a single epsilon side are kept.
pub fn remove_epsilons(fst: &Wfst) -> Result<Wfst> {
    let has_eps = fst.states().any(|s| fst.arcs(s).iter().any(is_eps));
    if !has_eps {
        return Ok(fst.clone());
    }
    let mut out = fst.empty_like();
    for _ in fst.states() {
        out.add_state();
    }
    if let Some(s) = fst.start() {
        out.set_start(s);
    }
    for q in fst.states() {
        let closure = eps_closure(fst, q)?;
        let mut final_weight = Weight::ZERO;
        let mut arcs: BTreeMap<(Label, Label, StateId), Weight> = BTreeMap::new();
        for (&p, &d) in &closure {
            final_weight = final_weight.plus(d.times(fst.final_weight(p)));
            for a in fst.arcs(p).iter().filter(|a| !is_eps(a)) {
                let slot = arcs
                    .entry((a.ilabel, a.olabel, a.nextstate))
                    .or_insert(Weight::ZERO);
                *slot = slot.plus(d.times(a.weight));
            }
        }
        out.set_final(q, final_weight);
        for ((il, ol, next), w) in arcs {
            out.add_arc(q, Arc::new(il, ol, w, next));
        }
    }
    Ok(out.connect())
}
