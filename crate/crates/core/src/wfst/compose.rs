use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

use super::{Arc, Label, StateId, Wfst, EPSILON};

/// Epsilon-filter states. `Clear` allows any move; after `LeftEps` only the
/// left machine may keep moving alone, after `RightEps` only the right one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Filter {
    Clear,
    LeftEps,
    RightEps,
}

type Key = (StateId, StateId, Filter);

struct Builder {
    out: Wfst,
    ids: HashMap<Key, StateId>,
    queue: VecDeque<Key>,
}

impl Builder {
    fn state(&mut self, key: Key) -> StateId {
        if let Some(&s) = self.ids.get(&key) {
            return s;
        }
        let s = self.out.add_state();
        self.ids.insert(key, s);
        self.queue.push_back(key);
        s
    }
}

/// Composes `a` with `b`: the result maps `x` to `z` whenever `a` maps `x`
/// to some `y` and `b` maps `y` to `z`, with path weights multiplied.
///
/// Epsilon moves are sequenced by the standard three-state filter so each
/// pair of matched paths is realized once. The result is trimmed.
pub fn compose(a: &Wfst, b: &Wfst) -> Result<Wfst> {
    if let (Some(ao), Some(bi)) = (a.output_symbols(), b.input_symbols()) {
        if !std::sync::Arc::ptr_eq(ao, bi) && **ao != **bi {
            return Err(Error::Config(
                "compose: output symbols of the left FST differ from input symbols of the right FST"
                    .into(),
            ));
        }
    }
    let mut out = Wfst::new();
    out.set_input_symbols(a.input_symbols().cloned());
    out.set_output_symbols(b.output_symbols().cloned());
    let (Some(sa), Some(sb)) = (a.start(), b.start()) else {
        return Ok(out);
    };

    // Right-hand arcs indexed by input label.
    let b_index: Vec<HashMap<Label, Vec<usize>>> = b
        .states()
        .map(|s| {
            let mut m: HashMap<Label, Vec<usize>> = HashMap::new();
            for (i, arc) in b.arcs(s).iter().enumerate() {
                m.entry(arc.ilabel).or_default().push(i);
            }
            m
        })
        .collect();
    let matches = |q: StateId, label: Label| -> &[usize] {
        b_index[q as usize]
            .get(&label)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    };

    let mut bld = Builder {
        out,
        ids: HashMap::new(),
        queue: VecDeque::new(),
    };
    let s0 = bld.state((sa, sb, Filter::Clear));
    bld.out.set_start(s0);

    while let Some(key @ (qa, qb, filter)) = bld.queue.pop_front() {
        let src = bld.ids[&key];
        bld.out
            .set_final(src, a.final_weight(qa).times(b.final_weight(qb)));

        for ea in a.arcs(qa) {
            if ea.olabel == EPSILON {
                if filter != Filter::RightEps {
                    let t = bld.state((ea.nextstate, qb, Filter::LeftEps));
                    bld.out
                        .add_arc(src, Arc::new(ea.ilabel, EPSILON, ea.weight, t));
                }
                if filter == Filter::Clear {
                    for &i in matches(qb, EPSILON) {
                        let eb = &b.arcs(qb)[i];
                        let t = bld.state((ea.nextstate, eb.nextstate, Filter::Clear));
                        bld.out.add_arc(
                            src,
                            Arc::new(ea.ilabel, eb.olabel, ea.weight.times(eb.weight), t),
                        );
                    }
                }
            } else {
                for &i in matches(qb, ea.olabel) {
                    let eb = &b.arcs(qb)[i];
                    let t = bld.state((ea.nextstate, eb.nextstate, Filter::Clear));
                    bld.out.add_arc(
                        src,
                        Arc::new(ea.ilabel, eb.olabel, ea.weight.times(eb.weight), t),
                    );
                }
            }
        }
        if filter != Filter::LeftEps {
            for &i in matches(qb, EPSILON) {
                let eb = &b.arcs(qb)[i];
                let t = bld.state((qa, eb.nextstate, Filter::RightEps));
                bld.out
                    .add_arc(src, Arc::new(EPSILON, eb.olabel, eb.weight, t));
            }
        }
    }
    Ok(bld.out.connect())
}
