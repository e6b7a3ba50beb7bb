use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::ngram::{LmState, EOS_ID};
use crate::wfst::Label;

use super::JointModel;

/// Ranked output sequences for one input.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Nbest {
    /// Distinct output sequences with their best joint cost, cheapest first.
    pub hyps: Vec<(Vec<String>, f64)>,
    /// Input positions no unit of the model can cover; non-empty only when
    /// the input cannot be segmented at all.
    pub uncovered: Vec<usize>,
}

const TIE: f64 = 1e-9;

struct Node {
    parent: Option<usize>,
    unit: Label,
}

#[derive(PartialEq)]
struct Item {
    cost: f64,
    pos: usize,
    lm: LmState,
    node: Option<usize>,
    done: bool,
    seq: u64,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn outputs(model: &JointModel, arena: &[Node], mut node: Option<usize>) -> Vec<String> {
    let mut out = Vec::new();
    while let Some(i) = node {
        out.push(model.output_of(arena[i].unit).unwrap_or_default().to_string());
        node = arena[i].parent;
    }
    out.reverse();
    out
}

/// Up to `n` distinct output sequences for `input`, by best joint cost
/// (negated natural log, including sentence end). Cost ties are ordered by
/// output sequence.
pub fn nbest<S: AsRef<str>>(model: &JointModel, input: &[S], n: usize) -> Nbest {
    let input: Vec<String> = input.iter().map(|s| s.as_ref().to_string()).collect();
    let len = input.len();
    if n == 0 || len == 0 {
        return Nbest::default();
    }
    // Candidate units starting at each position.
    let mut starts: Vec<Vec<(usize, Label)>> = vec![Vec::new(); len];
    for (i, cands) in starts.iter_mut().enumerate() {
        for k in 1..=model.max_p().min(len - i) {
            for &u in model.units_for(&input[i..i + k]) {
                cands.push((k, u));
            }
        }
    }
    let mut reach = vec![false; len + 1];
    reach[0] = true;
    for i in 0..len {
        if reach[i] {
            for &(k, _) in &starts[i] {
                reach[i + k] = true;
            }
        }
    }
    if !reach[len] {
        let mut covered = vec![false; len];
        for (i, cands) in starts.iter().enumerate() {
            for &(k, _) in cands {
                covered[i..i + k].iter_mut().for_each(|c| *c = true);
            }
        }
        return Nbest {
            hyps: Vec::new(),
            uncovered: (0..len).filter(|&i| !covered[i]).collect(),
        };
    }

    // Positions from which the end of the input can still be reached.
    let mut coreach = vec![false; len + 1];
    coreach[len] = true;
    for i in (0..len).rev() {
        coreach[i] = starts[i].iter().any(|&(k, _)| coreach[i + k]);
    }

    let lm = model.automaton();
    let mut arena: Vec<Node> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Item {
        cost: 0.0,
        pos: 0,
        lm: lm.start(),
        node: None,
        done: false,
        seq,
    });
    // Distinct output prefixes expanded per (position, LM state).
    let mut expanded: HashMap<(usize, LmState), HashSet<Vec<String>>> = HashMap::new();
    let mut found: Vec<(Vec<String>, f64)> = Vec::new();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    while let Some(item) = heap.pop() {
        if found.len() >= n && item.cost > found[n - 1].1 + TIE {
            break;
        }
        if item.done {
            let out = outputs(model, &arena, item.node);
            if seen.insert(out.clone()) {
                found.push((out, item.cost));
            }
            continue;
        }
        let prefix = outputs(model, &arena, item.node);
        let set = expanded.entry((item.pos, item.lm)).or_default();
        if set.len() >= n || !set.insert(prefix) {
            continue;
        }
        if item.pos == len {
            let (c, _) = lm.score(item.lm, EOS_ID);
            if c.is_finite() {
                seq += 1;
                heap.push(Item {
                    cost: item.cost + c,
                    done: true,
                    seq,
                    ..item
                });
            }
            continue;
        }
        for &(k, u) in &starts[item.pos] {
            if !coreach[item.pos + k] {
                continue;
            }
            let (c, next) = lm.score(item.lm, u);
            if !c.is_finite() {
                continue;
            }
            arena.push(Node {
                parent: item.node,
                unit: u,
            });
            seq += 1;
            heap.push(Item {
                cost: item.cost + c,
                pos: item.pos + k,
                lm: next,
                node: Some(arena.len() - 1),
                done: false,
                seq,
            });
        }
    }
    sort_with_ties(&mut found);
    found.truncate(n);
    Nbest {
        hyps: found,
        uncovered: Vec::new(),
    }
}

/// Sorts by cost, ordering costs within `TIE` of each other by sequence.
pub(crate) fn sort_with_ties(v: &mut [(Vec<String>, f64)]) {
    v.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j].1 - v[i].1 <= TIE {
            j += 1;
        }
        v[i..j].sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        i = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jointseq::train_joint;

    fn seq(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn forced_single_path() {
        let m = train_joint(&[(seq("b}▁b aa}a b}b"), 1.0)], 3).unwrap();
        let r = nbest(&m, &["b", "aa", "b"], 1);
        assert_eq!(r.hyps.len(), 1);
        assert_eq!(r.hyps[0].0, seq("▁b a b"));
    }

    #[test]
    fn two_readings_in_order() {
        let m = train_joint(&[(seq("k}▁c"), 3.0), (seq("k}▁k"), 1.0)], 1).unwrap();
        let r = nbest(&m, &["k"], 2);
        assert_eq!(r.hyps.len(), 2);
        assert_eq!(r.hyps[0].0, seq("▁c"));
        assert_eq!(r.hyps[1].0, seq("▁k"));
        assert!(r.hyps[0].1 < r.hyps[1].1);
    }

    #[test]
    fn uncovered_position_reported() {
        let m = train_joint(&[(seq("a}x"), 1.0)], 1).unwrap();
        let r = nbest(&m, &["a", "q", "a"], 3);
        assert!(r.hyps.is_empty());
        assert_eq!(r.uncovered, vec![1]);
    }
}
