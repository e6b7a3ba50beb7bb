use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};

use super::{Label, StateId, Weight, Wfst, EPSILON};

/// One accepting path with epsilons removed from both label strings.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub ilabels: Vec<Label>,
    pub olabels: Vec<Label>,
    pub weight: Weight,
}

/// For every state, the minimum weight of a path to a final state
/// (`Weight::ZERO` when none exists).
pub fn shortest_distance_to_final(fst: &Wfst) -> Result<Vec<Weight>> {
    let n = fst.num_states();
    let mut dist = vec![Weight::ZERO; n];
    if let Some(order) = fst.topological_order() {
        for &s in order.iter().rev() {
            let mut d = fst.final_weight(s);
            for a in fst.arcs(s) {
                d = d.plus(a.weight.times(dist[a.nextstate as usize]));
            }
            dist[s as usize] = d;
        }
        return Ok(dist);
    }
    // General case: label-correcting over the reversed graph.
    let mut reverse: Vec<Vec<(StateId, Weight)>> = vec![Vec::new(); n];
    for s in fst.states() {
        for a in fst.arcs(s) {
            reverse[a.nextstate as usize].push((s, a.weight));
        }
    }
    let mut queue = VecDeque::new();
    let mut queued = vec![false; n];
    let mut relaxed = vec![0usize; n];
    for s in fst.states() {
        if fst.is_final(s) {
            dist[s as usize] = fst.final_weight(s);
            queue.push_back(s);
            queued[s as usize] = true;
        }
    }
    while let Some(q) = queue.pop_front() {
        queued[q as usize] = false;
        let dq = dist[q as usize];
        for &(p, w) in &reverse[q as usize] {
            let cand = w.times(dq);
            let cur = dist[p as usize];
            if cur.is_zero() && !cand.is_zero() || cand.value() < cur.value() - 1e-12 {
                dist[p as usize] = cand;
                relaxed[p as usize] += 1;
                if relaxed[p as usize] > n + 1 {
                    return Err(Error::Divergence);
                }
                if !queued[p as usize] {
                    queued[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }
    }
    Ok(dist)
}

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    ilabel: Label,
    olabel: Label,
}

struct Item {
    priority: f64,
    cost: Weight,
    state: Option<StateId>,
    node: u32,
    seq: u64,
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (priority, seq).
        other
            .priority
            .total_cmp(&self.priority)
            .then(other.seq.cmp(&self.seq))
    }
}

const TIE_DELTA: f64 = 1e-9;

/// The `n` lowest-weight accepting paths in nondecreasing weight order.
///
/// Paths whose weights are within `1e-9` of each other are ordered by output
/// label string, then input label string. An empty FST yields an empty list.
/// Cyclic inputs are searched with a per-state expansion bound of `n`.
pub fn shortest_paths(fst: &Wfst, n: usize) -> Result<Vec<Path>> {
    let Some(start) = fst.start() else {
        return Ok(Vec::new());
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    let to_final = shortest_distance_to_final(fst)?;
    if to_final[start as usize].is_zero() {
        return Ok(Vec::new());
    }
    let acyclic = fst.is_acyclic();
    let mut pops = vec![0usize; fst.num_states()];
    let mut nodes: Vec<Node> = vec![Node {
        parent: u32::MAX,
        ilabel: EPSILON,
        olabel: EPSILON,
    }];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Item {
        priority: to_final[start as usize].value(),
        cost: Weight::ONE,
        state: Some(start),
        node: 0,
        seq,
    });

    let mut found: Vec<Path> = Vec::new();
    while let Some(item) = heap.pop() {
        if found.len() >= n {
            let nth = found[n - 1].weight.value();
            if item.priority > nth + TIE_DELTA {
                break;
            }
        }
        let Some(q) = item.state else {
            found.push(trace(&nodes, item.node, item.cost));
            continue;
        };
        pops[q as usize] += 1;
        if !acyclic && pops[q as usize] > n {
            continue;
        }
        let fw = fst.final_weight(q);
        if !fw.is_zero() {
            seq += 1;
            let cost = item.cost.times(fw);
            heap.push(Item {
                priority: cost.value(),
                cost,
                state: None,
                node: item.node,
                seq,
            });
        }
        for a in fst.arcs(q) {
            let h = to_final[a.nextstate as usize];
            if h.is_zero() {
                continue;
            }
            let cost = item.cost.times(a.weight);
            nodes.push(Node {
                parent: item.node,
                ilabel: a.ilabel,
                olabel: a.olabel,
            });
            seq += 1;
            heap.push(Item {
                priority: cost.times(h).value(),
                cost,
                state: Some(a.nextstate),
                node: (nodes.len() - 1) as u32,
                seq,
            });
        }
    }

    // Order ties canonically, then cut to n.
    let mut ordered: Vec<Path> = Vec::with_capacity(found.len());
    let mut i = 0;
    while i < found.len() {
        let anchor = found[i].weight.value();
        let mut j = i;
        while j < found.len() && found[j].weight.value() <= anchor + TIE_DELTA {
            j += 1;
        }
        let mut group = found[i..j].to_vec();
        group.sort_by(|a, b| {
            a.olabels
                .cmp(&b.olabels)
                .then_with(|| a.ilabels.cmp(&b.ilabels))
        });
        ordered.extend(group);
        i = j;
    }
    ordered.truncate(n);
    Ok(ordered)
}

fn trace(nodes: &[Node], mut idx: u32, cost: Weight) -> Path {
    let mut ilabels = Vec::new();
    let mut olabels = Vec::new();
    while idx != 0 {
        let node = nodes[idx as usize];
        if node.ilabel != EPSILON {
            ilabels.push(node.ilabel);
        }
        if node.olabel != EPSILON {
            olabels.push(node.olabel);
        }
        idx = node.parent;
    }
    ilabels.reverse();
    olabels.reverse();
    Path {
        ilabels,
        olabels,
        weight: cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfst::Arc;

    fn three_paths() -> Wfst {
        let mut f = Wfst::new();
        let s0 = f.add_state();
        let s1 = f.add_state();
        f.set_start(s0);
        f.set_final(s1, 0.0);
        f.add_arc(s0, Arc::new(3, 3, 3.0, s1));
        f.add_arc(s0, Arc::new(1, 1, 1.0, s1));
        f.add_arc(s0, Arc::new(2, 2, 2.0, s1));
        f
    }

    #[test]
    fn two_cheapest() {
        let p = shortest_paths(&three_paths(), 2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].ilabels, vec![1]);
        assert_eq!(p[1].ilabels, vec![2]);
    }

    #[test]
    fn saturates_at_path_count() {
        let p = shortest_paths(&three_paths(), 10).unwrap();
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn empty_fst_gives_nothing() {
        assert!(shortest_paths(&Wfst::new(), 3).unwrap().is_empty());
    }

    #[test]
    fn ties_broken_by_output_string() {
        let mut f = Wfst::new();
        let s0 = f.add_state();
        let s1 = f.add_state();
        f.set_start(s0);
        f.set_final(s1, 0.0);
        f.add_arc(s0, Arc::new(1, 9, 1.0, s1));
        f.add_arc(s0, Arc::new(1, 4, 1.0, s1));
        f.add_arc(s0, Arc::new(1, 6, 1.0, s1));
        let p = shortest_paths(&f, 2).unwrap();
        assert_eq!(p[0].olabels, vec![4]);
        assert_eq!(p[1].olabels, vec![6]);
    }

    #[test]
    fn cyclic_search_terminates() {
        let mut f = Wfst::new();
        let s = f.add_state();
        f.set_start(s);
        f.set_final(s, 0.0);
        f.add_arc(s, Arc::new(1, 1, 1.0, s));
        let p = shortest_paths(&f, 3).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[2].ilabels, vec![1, 1]);
    }
}
