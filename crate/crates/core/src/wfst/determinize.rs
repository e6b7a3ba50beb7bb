use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};

use super::{remove_epsilons, Arc, EncodeTable, Label, StateId, Weight, Wfst, EPSILON};

/// Residual weights closer than this are treated as equal when deciding
/// whether two weighted subsets are the same determinized state.
pub(crate) const DELTA: f64 = 1e-10;

type Subset = Vec<(StateId, Weight)>;

fn subset_key(subset: &Subset) -> Vec<(StateId, i64)> {
    subset.iter().map(|&(q, r)| (q, r.quantize(DELTA))).collect()
}

/// Weighted determinization over the tropical semiring.
///
/// Transducers are determinized as acceptors over encoded `(ilabel, olabel)`
/// pairs and decoded afterwards, so the result is deterministic in the pair
/// alphabet. Only acyclic inputs are supported.
pub fn determinize(fst: &Wfst) -> Result<Wfst> {
    if !fst.is_acyclic() {
        return Err(Error::UnsupportedInput(
            "determinize supports acyclic FSTs only".into(),
        ));
    }
    if fst.is_acceptor() {
        let mut out = determinize_acceptor(&remove_epsilons(fst)?);
        out.set_input_symbols(fst.input_symbols().cloned());
        out.set_output_symbols(fst.output_symbols().cloned());
        return Ok(out);
    }
    let mut table = EncodeTable::new();
    let encoded = table.encode(&remove_epsilons(fst)?);
    let mut out = table.decode(&determinize_acceptor(&encoded));
    out.set_input_symbols(fst.input_symbols().cloned());
    out.set_output_symbols(fst.output_symbols().cloned());
    Ok(out)
}

/// Subset construction for an epsilon-free weighted acceptor.
fn determinize_acceptor(fst: &Wfst) -> Wfst {
    let mut out = fst.empty_like();
    let Some(start) = fst.start() else {
        return out;
    };
    let mut ids: HashMap<Vec<(StateId, i64)>, StateId> = HashMap::new();
    let mut queue: VecDeque<(StateId, Subset)> = VecDeque::new();

    let init: Subset = vec![(start, Weight::ONE)];
    let s0 = out.add_state();
    out.set_start(s0);
    ids.insert(subset_key(&init), s0);
    queue.push_back((s0, init));

    while let Some((src, subset)) = queue.pop_front() {
        let mut final_weight = Weight::ZERO;
        // label -> destination state -> best weight through this subset
        let mut by_label: BTreeMap<Label, BTreeMap<StateId, Weight>> = BTreeMap::new();
        for &(q, residual) in &subset {
            final_weight = final_weight.plus(residual.times(fst.final_weight(q)));
            for arc in fst.arcs(q) {
                debug_assert!(arc.ilabel != EPSILON);
                let w = residual.times(arc.weight);
                let slot = by_label
                    .entry(arc.ilabel)
                    .or_default()
                    .entry(arc.nextstate)
                    .or_insert(Weight::ZERO);
                *slot = slot.plus(w);
            }
        }
        out.set_final(src, final_weight);
        for (label, dests) in by_label {
            let arc_weight = dests.values().fold(Weight::ZERO, |acc, &w| acc.plus(w));
            let next: Subset = dests
                .into_iter()
                .map(|(q, w)| (q, Weight::divide(w, arc_weight)))
                .collect();
            let key = subset_key(&next);
            let dst = match ids.get(&key) {
                Some(&d) => d,
                None => {
                    let d = out.add_state();
                    ids.insert(key, d);
                    queue.push_back((d, next));
                    d
                }
            };
            out.add_arc(src, Arc::new(label, label, arc_weight, dst));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfst::shortest_paths;

    fn two_paths_same_string() -> Wfst {
        let mut f = Wfst::new();
        let s: Vec<StateId> = (0..5).map(|_| f.add_state()).collect();
        f.set_start(s[0]);
        f.add_arc(s[0], Arc::new(1, 1, 1.0, s[1]));
        f.add_arc(s[1], Arc::new(2, 2, 1.0, s[2]));
        f.add_arc(s[0], Arc::new(1, 1, 4.0, s[3]));
        f.add_arc(s[3], Arc::new(2, 2, 1.0, s[4]));
        f.set_final(s[2], 0.0);
        f.set_final(s[4], 0.0);
        f
    }

    #[test]
    fn duplicate_paths_collapse_to_min() {
        let d = determinize(&two_paths_same_string()).unwrap();
        assert!(d.is_deterministic());
        let paths = shortest_paths(&d, 10).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(paths[0].weight.approx_eq(Weight::new(2.0), 1e-12));
    }

    #[test]
    fn deterministic_input_keeps_weights() {
        let f = Wfst::linear(&[3, 4, 5], &[3, 4, 5], Weight::new(0.7));
        let d = determinize(&f).unwrap();
        assert_eq!(d.num_states(), f.num_states());
        let p = shortest_paths(&d, 1).unwrap();
        assert!(p[0].weight.approx_eq(Weight::new(0.7), 1e-12));
    }

    #[test]
    fn cyclic_input_rejected() {
        let mut f = Wfst::new();
        let s = f.add_state();
        f.set_start(s);
        f.set_final(s, 0.0);
        f.add_arc(s, Arc::new(1, 1, 1.0, s));
        assert!(matches!(determinize(&f), Err(Error::UnsupportedInput(_))));
    }

    #[test]
    fn transducer_keeps_both_readings() {
        let mut f = Wfst::new();
        let s0 = f.add_state();
        let s1 = f.add_state();
        f.set_start(s0);
        f.add_arc(s0, Arc::new(1, 7, 1.0, s1));
        f.add_arc(s0, Arc::new(1, 8, 2.0, s1));
        f.add_arc(s0, Arc::new(1, 8, 3.0, s1));
        f.set_final(s1, 0.0);
        let d = determinize(&f).unwrap();
        let paths = shortest_paths(&d, 10).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].olabels, vec![7]);
        assert!(paths[1].weight.approx_eq(Weight::new(2.0), 1e-12));
    }
}
