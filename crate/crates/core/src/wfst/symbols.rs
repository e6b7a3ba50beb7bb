use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::Label;

pub const EPSILON_SYMBOL: &str = "<eps>";

/// Bidirectional `symbol <-> id` map. Id 0 is always epsilon.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    symbols: Vec<String>,
    ids: HashMap<String, Label>,
    blank: Option<Label>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for SymbolTable {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols && self.blank == other.blank
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut ids = HashMap::new();
        ids.insert(EPSILON_SYMBOL.to_string(), 0);
        SymbolTable {
            symbols: vec![EPSILON_SYMBOL.to_string()],
            ids,
            blank: None,
        }
    }

    /// Table with a distinguished blank symbol at id 1.
    pub fn with_blank(blank: &str) -> Self {
        let mut t = Self::new();
        let id = t.add(blank);
        t.blank = Some(id);
        t
    }

    /// Returns the id of `symbol`, inserting it if absent.
    pub fn add(&mut self, symbol: &str) -> Label {
        if let Some(&id) = self.ids.get(symbol) {
            return id;
        }
        let id = self.symbols.len() as Label;
        self.symbols.push(symbol.to_string());
        self.ids.insert(symbol.to_string(), id);
        id
    }

    pub fn id(&self, symbol: &str) -> Option<Label> {
        self.ids.get(symbol).copied()
    }

    pub fn symbol(&self, id: Label) -> Option<&str> {
        self.symbols.get(id as usize).map(String::as_str)
    }

    pub fn blank(&self) -> Option<Label> {
        self.blank
    }

    /// Number of symbols including epsilon.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.len() <= 1
    }

    /// Iterates `(id, symbol)` pairs, epsilon included.
    pub fn iter(&self) -> impl Iterator<Item = (Label, &str)> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (i as Label, s.as_str()))
    }

    /// `symbol<TAB>id` lines, one per symbol, in id order. A blank symbol is
    /// flagged by a third `blank` column.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, sym) in self.iter() {
            if Some(id) == self.blank {
                let _ = writeln!(out, "{sym}\t{id}\tblank");
            } else {
                let _ = writeln!(out, "{sym}\t{id}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries: Vec<(Label, String, bool)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 {
                return Err(Error::parse(n + 1, "expected symbol<TAB>id"));
            }
            let id: Label = cols[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad id {:?}", cols[1])))?;
            let blank = cols.get(2).map(|c| c.trim() == "blank").unwrap_or(false);
            entries.push((id, cols[0].to_string(), blank));
        }
        entries.sort_by_key(|e| e.0);
        let mut table = SymbolTable::new();
        for (i, (id, sym, blank)) in entries.into_iter().enumerate() {
            if id as usize != i {
                return Err(Error::parse(0, format!("symbol ids must be dense; missing id {i}")));
            }
            if id == 0 {
                if sym != EPSILON_SYMBOL {
                    return Err(Error::parse(0, "id 0 must be epsilon"));
                }
                continue;
            }
            if table.id(&sym).is_some() {
                return Err(Error::parse(0, format!("duplicate symbol {sym:?}")));
            }
            let got = table.add(&sym);
            if blank {
                table.blank = Some(got);
            }
        }
        Ok(table)
    }
}
