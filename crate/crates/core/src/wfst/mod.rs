//! Weighted finite-state transducers over the tropical semiring.
//!
//! `Wfst` values are plain data: every algorithm in this module takes its
//! inputs by reference and returns a fresh machine.

mod compose;
mod determinize;
mod encode;
mod epsilon;
mod minimize;
mod shortest;
mod symbols;
mod text;
mod weight;

use std::collections::VecDeque;
use std::sync::Arc as Shared;

pub use compose::compose;
pub use determinize::determinize;
pub use encode::EncodeTable;
pub use epsilon::remove_epsilons;
pub use minimize::minimize;
pub use shortest::{shortest_distance_to_final, shortest_paths, Path};
pub use symbols::{SymbolTable, EPSILON_SYMBOL};
pub use text::{read_text, write_text};
pub use weight::Weight;

pub type StateId = u32;
pub type Label = u32;

pub const EPSILON: Label = 0;

/// A transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: Weight,
    pub nextstate: StateId,
}

impl Arc {
    pub fn new(ilabel: Label, olabel: Label, weight: impl Into<Weight>, nextstate: StateId) -> Self {
        Arc {
            ilabel,
            olabel,
            weight: weight.into(),
            nextstate,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct State {
    arcs: Vec<Arc>,
    final_weight: Weight,
}

impl State {
    fn new() -> Self {
        State {
            arcs: Vec::new(),
            final_weight: Weight::ZERO,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Wfst {
    states: Vec<State>,
    start: Option<StateId>,
    isyms: Option<Shared<SymbolTable>>,
    osyms: Option<Shared<SymbolTable>>,
}

impl Wfst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self) -> StateId {
        self.states.push(State::new());
        (self.states.len() - 1) as StateId
    }

    pub fn set_start(&mut self, s: StateId) {
        assert!((s as usize) < self.states.len(), "start state {s} does not exist");
        self.start = Some(s);
    }

    pub fn start(&self) -> Option<StateId> {
        self.start
    }

    pub fn set_final(&mut self, s: StateId, w: impl Into<Weight>) {
        self.states[s as usize].final_weight = w.into();
    }

    pub fn final_weight(&self, s: StateId) -> Weight {
        self.states[s as usize].final_weight
    }

    pub fn is_final(&self, s: StateId) -> bool {
        !self.states[s as usize].final_weight.is_zero()
    }

    pub fn add_arc(&mut self, s: StateId, arc: Arc) {
        assert!(
            (arc.nextstate as usize) < self.states.len(),
            "arc target {} does not exist",
            arc.nextstate
        );
        self.states[s as usize].arcs.push(arc);
    }

    pub fn arcs(&self, s: StateId) -> &[Arc] {
        &self.states[s as usize].arcs
    }

    pub(crate) fn arcs_mut(&mut self, s: StateId) -> &mut Vec<Arc> {
        &mut self.states[s as usize].arcs
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(|s| s.arcs.len()).sum()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_none()
    }

    pub fn input_symbols(&self) -> Option<&Shared<SymbolTable>> {
        self.isyms.as_ref()
    }

    pub fn output_symbols(&self) -> Option<&Shared<SymbolTable>> {
        self.osyms.as_ref()
    }

    pub fn set_input_symbols(&mut self, syms: Option<Shared<SymbolTable>>) {
        self.isyms = syms;
    }

    pub fn set_output_symbols(&mut self, syms: Option<Shared<SymbolTable>>) {
        self.osyms = syms;
    }

    /// True when every arc has `ilabel == olabel`.
    pub fn is_acceptor(&self) -> bool {
        self.states
            .iter()
            .all(|s| s.arcs.iter().all(|a| a.ilabel == a.olabel))
    }

    /// No epsilon input labels and no two arcs leaving a state share an input label.
    pub fn is_deterministic(&self) -> bool {
        self.states.iter().all(|s| {
            let mut labels: Vec<Label> = s.arcs.iter().map(|a| a.ilabel).collect();
            labels.sort_unstable();
            let before = labels.len();
            labels.dedup();
            labels.len() == before && labels.first() != Some(&EPSILON)
        })
    }

    /// Counts, over all states, input labels that occur on more than one arc.
    pub fn ilabel_conflicts(&self) -> usize {
        let mut conflicts = 0;
        for s in &self.states {
            let mut labels: Vec<Label> = s.arcs.iter().map(|a| a.ilabel).collect();
            labels.sort_unstable();
            conflicts += labels.windows(2).filter(|w| w[0] == w[1]).count();
        }
        conflicts
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Topological order of all states, or `None` if there is a cycle.
    pub fn topological_order(&self) -> Option<Vec<StateId>> {
        let n = self.states.len();
        let mut indegree = vec![0usize; n];
        for s in &self.states {
            for a in &s.arcs {
                indegree[a.nextstate as usize] += 1;
            }
        }
        let mut queue: VecDeque<StateId> = (0..n as StateId)
            .filter(|&s| indegree[s as usize] == 0)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for a in &self.states[s as usize].arcs {
                let d = &mut indegree[a.nextstate as usize];
                *d -= 1;
                if *d == 0 {
                    queue.push_back(a.nextstate);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Sorts each state's arcs by `(ilabel, olabel, nextstate)`.
    pub fn arc_sort(&mut self) {
        for s in &mut self.states {
            s.arcs.sort_by(|a, b| {
                (a.ilabel, a.olabel, a.nextstate, a.weight).cmp(&(
                    b.ilabel,
                    b.olabel,
                    b.nextstate,
                    b.weight,
                ))
            });
        }
    }

    /// Drops states that are not both reachable from the start and able to reach a final state.
    pub fn connect(&self) -> Wfst {
        let Some(start) = self.start else {
            return self.empty_like();
        };
        let n = self.states.len();
        let mut accessible = vec![false; n];
        let mut stack = vec![start];
        accessible[start as usize] = true;
        while let Some(s) = stack.pop() {
            for a in &self.states[s as usize].arcs {
                if !accessible[a.nextstate as usize] {
                    accessible[a.nextstate as usize] = true;
                    stack.push(a.nextstate);
                }
            }
        }
        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (s, st) in self.states.iter().enumerate() {
            for a in &st.arcs {
                reverse[a.nextstate as usize].push(s as StateId);
            }
        }
        let mut coaccessible = vec![false; n];
        let mut stack: Vec<StateId> = (0..n as StateId).filter(|&s| self.is_final(s)).collect();
        for &s in &stack {
            coaccessible[s as usize] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &reverse[s as usize] {
                if !coaccessible[p as usize] {
                    coaccessible[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        if !coaccessible[start as usize] {
            return self.empty_like();
        }
        let keep: Vec<bool> = (0..n).map(|i| accessible[i] && coaccessible[i]).collect();
        self.retain_states(&keep)
    }

    fn retain_states(&self, keep: &[bool]) -> Wfst {
        let mut map = vec![StateId::MAX; self.states.len()];
        let mut out = self.empty_like();
        for (s, &k) in keep.iter().enumerate() {
            if k {
                map[s] = out.add_state();
            }
        }
        for (s, &k) in keep.iter().enumerate() {
            if !k {
                continue;
            }
            let ns = map[s];
            out.set_final(ns, self.states[s].final_weight);
            for a in &self.states[s].arcs {
                let t = map[a.nextstate as usize];
                if t != StateId::MAX {
                    out.add_arc(ns, Arc { nextstate: t, ..*a });
                }
            }
        }
        if let Some(s) = self.start {
            if map[s as usize] != StateId::MAX {
                out.set_start(map[s as usize]);
            }
        }
        out
    }

    /// Renumbers states in breadth-first order from the start, visiting arcs
    /// in sorted order. Unreachable states are dropped.
    pub fn canonicalize(&self) -> Wfst {
        let mut sorted = self.clone();
        sorted.arc_sort();
        let Some(start) = sorted.start else {
            return self.empty_like();
        };
        let mut map = vec![StateId::MAX; sorted.states.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([start]);
        map[start as usize] = 0;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for a in &sorted.states[s as usize].arcs {
                if map[a.nextstate as usize] == StateId::MAX {
                    map[a.nextstate as usize] = (order.len() + queue.len()) as StateId;
                    queue.push_back(a.nextstate);
                }
            }
        }
        let mut out = self.empty_like();
        for _ in &order {
            out.add_state();
        }
        for &s in &order {
            let ns = map[s as usize];
            out.set_final(ns, sorted.states[s as usize].final_weight);
            for a in &sorted.states[s as usize].arcs {
                out.add_arc(
                    ns,
                    Arc {
                        nextstate: map[a.nextstate as usize],
                        ..*a
                    },
                );
            }
        }
        out.set_start(0);
        out.arc_sort();
        out
    }

    /// Same symbol tables, no states.
    pub fn empty_like(&self) -> Wfst {
        Wfst {
            states: Vec::new(),
            start: None,
            isyms: self.isyms.clone(),
            osyms: self.osyms.clone(),
        }
    }

    /// Linear acceptor (or transducer when `olabels` differs) for a label string.
    pub fn linear(ilabels: &[Label], olabels: &[Label], weight: Weight) -> Wfst {
        assert_eq!(ilabels.len(), olabels.len());
        let mut f = Wfst::new();
        let mut s = f.add_state();
        f.set_start(s);
        for (i, (&il, &ol)) in ilabels.iter().zip(olabels).enumerate() {
            let t = f.add_state();
            let w = if i == 0 { weight } else { Weight::ONE };
            f.add_arc(s, Arc::new(il, ol, w, t));
            s = t;
        }
        if ilabels.is_empty() {
            f.set_final(s, weight);
        } else {
            f.set_final(s, Weight::ONE);
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connect_trims_dead_states() {
        let mut f = Wfst::new();
        let s0 = f.add_state();
        let s1 = f.add_state();
        let dead = f.add_state();
        let unreachable = f.add_state();
        f.set_start(s0);
        f.add_arc(s0, Arc::new(1, 1, 0.0, s1));
        f.add_arc(s0, Arc::new(2, 2, 0.0, dead));
        f.add_arc(unreachable, Arc::new(3, 3, 0.0, s1));
        f.set_final(s1, 0.0);
        let c = f.connect();
        assert_eq!(c.num_states(), 2);
        assert_eq!(c.num_arcs(), 1);
    }

    #[test]
    fn cycle_detection() {
        let mut f = Wfst::new();
        let a = f.add_state();
        let b = f.add_state();
        f.set_start(a);
        f.add_arc(a, Arc::new(1, 1, 0.0, b));
        assert!(f.is_acyclic());
        f.add_arc(b, Arc::new(1, 1, 0.0, a));
        assert!(!f.is_acyclic());
    }
}
