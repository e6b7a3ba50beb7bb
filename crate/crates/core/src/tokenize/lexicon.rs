use std::collections::HashMap;
use std::sync::Arc as Shared;

use crate::error::{Error, Result};
use crate::wfst::{Arc, Label, StateId, SymbolTable, Weight, Wfst, EPSILON};

use super::WordpieceModel;

/// Prefix of the output symbol that passes a raw wordpiece through a class
/// region.
pub const PASSTHROUGH_PREFIX: char = '#';

/// What an output label of the lexicon stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    Epsilon,
    Word,
    /// Index into [`Lexicon::classes`].
    ClassEntry(usize),
    ClassExit(usize),
    /// Raw wordpiece (id in the wordpiece table).
    Piece(Label),
}

/// The lexicon transducer with its output alphabet.
#[derive(Clone, Debug)]
pub struct Lexicon {
    pub fst: Wfst,
    pub outputs: Shared<SymbolTable>,
    pub classes: Vec<String>,
    kinds: Vec<OutputKind>,
}

impl Lexicon {
    pub fn kind(&self, label: Label) -> OutputKind {
        self.kinds[label as usize]
    }

    pub fn kinds(&self) -> &[OutputKind] {
        &self.kinds
    }
}

pub fn exit_marker(class: &str) -> String {
    format!("</{class}>")
}

pub fn is_class_name(s: &str) -> bool {
    s.len() > 1
        && s.starts_with('@')
        && s[1..].chars().all(|c| c.is_ascii_uppercase() || c == '_')
}

/// `<s>`, `</s>`, `<unk>` and similar never map to wordpieces.
fn is_special(s: &str) -> bool {
    s.starts_with('<') && s.ends_with('>')
}

/// Builds L. Words map from their tokenization back to the word through a
/// trie rooted at a single hub state; each class gets an entry marker, a
/// loop over every wordpiece (passed through as `#piece`), and an exit
/// marker. Class-shaped words not listed in `classes` are left out.
pub fn build_l(model: &WordpieceModel, words: &SymbolTable, classes: &[String]) -> Result<Lexicon> {
    for c in classes {
        if !is_class_name(c) {
            return Err(Error::Config(format!("invalid class name {c:?}")));
        }
    }
    let mut outputs = SymbolTable::new();
    let mut kinds = vec![OutputKind::Epsilon];
    let mut lexical = Vec::new();
    for (_, w) in words.iter().skip(1) {
        // Class tokens without a class region are simply not spoken.
        if is_special(w) || is_class_name(w) {
            continue;
        }
        let id = outputs.add(w);
        if id as usize == kinds.len() {
            kinds.push(OutputKind::Word);
            lexical.push((id, w.to_string()));
        }
    }
    if lexical.is_empty() {
        return Err(Error::Config("empty lexicon".into()));
    }
    let mut class_labels = Vec::new();
    for (ci, c) in classes.iter().enumerate() {
        let entry = outputs.add(c);
        kinds.push(OutputKind::ClassEntry(ci));
        let exit = outputs.add(&exit_marker(c));
        kinds.push(OutputKind::ClassExit(ci));
        class_labels.push((entry, exit));
    }
    let mut pass = HashMap::new();
    if !classes.is_empty() {
        for (id, p) in model.pieces() {
            let o = outputs.add(&format!("{PASSTHROUGH_PREFIX}{p}"));
            kinds.push(OutputKind::Piece(id));
            pass.insert(id, o);
        }
    }
    debug_assert_eq!(kinds.len(), outputs.len());

    let mut fst = Wfst::new();
    let hub = fst.add_state();
    fst.set_start(hub);
    fst.set_final(hub, Weight::ONE);
    let mut children: HashMap<(StateId, Label), StateId> = HashMap::new();
    for (wid, w) in &lexical {
        let pieces = model.tokenize_word(w)?;
        let mut node = hub;
        for p in pieces {
            node = match children.get(&(node, p)) {
                Some(&n) => n,
                None => {
                    let n = fst.add_state();
                    fst.add_arc(node, Arc::new(p, EPSILON, Weight::ONE, n));
                    children.insert((node, p), n);
                    n
                }
            };
        }
        fst.add_arc(node, Arc::new(EPSILON, *wid, Weight::ONE, hub));
    }
    for &(entry, exit) in &class_labels {
        let cs = fst.add_state();
        fst.add_arc(hub, Arc::new(EPSILON, entry, Weight::ONE, cs));
        for (id, _) in model.pieces() {
            fst.add_arc(cs, Arc::new(id, pass[&id], Weight::ONE, cs));
        }
        fst.add_arc(cs, Arc::new(EPSILON, exit, Weight::ONE, hub));
    }
    let outputs = Shared::new(outputs);
    fst.set_input_symbols(Some(model.table().clone()));
    fst.set_output_symbols(Some(outputs.clone()));
    Ok(Lexicon {
        fst,
        outputs,
        classes: classes.to_vec(),
        kinds,
    })
}
