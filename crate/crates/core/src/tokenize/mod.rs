//! Wordpiece inventory, greedy tokenizer, and the CTC topology / lexicon
//! builders.

mod lexicon;
mod topology;

use std::collections::HashSet;
use std::sync::Arc as Shared;

use crate::error::{Error, Result};
use crate::wfst::{Label, SymbolTable};

pub use lexicon::{build_l, exit_marker, is_class_name as lexicon_is_class_name, Lexicon, OutputKind, PASSTHROUGH_PREFIX};
pub use topology::{build_t, NormConfig};

/// Word-boundary marker carried by word-initial pieces.
pub const BOUNDARY: char = '▁';
/// CTC blank symbol. Always id 1 in a wordpiece table.
pub const BLANK: &str = "<blk>";

/// A wordpiece inventory. Ids: 0 epsilon, 1 blank, then pieces in
/// inventory order.
#[derive(Clone, Debug)]
pub struct WordpieceModel {
    table: Shared<SymbolTable>,
    max_chars: usize,
}

impl WordpieceModel {
    pub fn new<S: AsRef<str>>(pieces: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut table = SymbolTable::with_blank(BLANK);
        let mut max_chars = 0;
        for p in pieces {
            let p = p.as_ref();
            if p.is_empty() || p.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid wordpiece {p:?}")));
            }
            if p == BLANK || p == crate::wfst::EPSILON_SYMBOL {
                return Err(Error::Config(format!("reserved symbol {p:?} in inventory")));
            }
            if p.chars().skip(1).any(|c| c == BOUNDARY) {
                return Err(Error::Config(format!(
                    "boundary marker inside wordpiece {p:?}"
                )));
            }
            table.add(p);
            max_chars = max_chars.max(p.chars().count());
        }
        if table.len() <= 2 {
            return Err(Error::Config("empty wordpiece inventory".into()));
        }
        Ok(WordpieceModel {
            table: Shared::new(table),
            max_chars,
        })
    }

    /// Single-character inventory: every character with and without the
    /// boundary marker.
    pub fn characters(chars: impl IntoIterator<Item = char>) -> Result<Self> {
        let mut seen: Vec<char> = chars.into_iter().collect::<HashSet<_>>().into_iter().collect();
        seen.sort_unstable();
        let mut pieces = Vec::with_capacity(seen.len() * 2);
        for c in &seen {
            pieces.push(format!("{BOUNDARY}{c}"));
        }
        for c in &seen {
            pieces.push(c.to_string());
        }
        Self::new(pieces)
    }

    /// One piece per line.
    pub fn from_inventory_text(text: &str) -> Result<Self> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn to_inventory_text(&self) -> String {
        self.pieces().map(|(_, p)| format!("{p}\n")).collect()
    }

    pub fn table(&self) -> &Shared<SymbolTable> {
        &self.table
    }

    pub fn blank(&self) -> Label {
        1
    }

    /// Non-blank pieces with their ids.
    pub fn pieces(&self) -> impl Iterator<Item = (Label, &str)> {
        self.table.iter().skip(2)
    }

    pub fn num_pieces(&self) -> usize {
        self.table.len() - 2
    }

    pub fn id(&self, piece: &str) -> Option<Label> {
        self.table.id(piece).filter(|&id| id >= 2)
    }

    pub fn piece(&self, id: Label) -> &str {
        self.table.symbol(id).unwrap_or("<?>")
    }

    /// Greedy longest-match tokenization of `word` with the boundary
    /// marker prepended.
    pub fn tokenize_word(&self, word: &str) -> Result<Vec<Label>> {
        if word.is_empty() {
            return Err(Error::Config("cannot tokenize an empty word".into()));
        }
        let marked: Vec<char> = std::iter::once(BOUNDARY).chain(word.chars()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut buf = String::new();
        while i < marked.len() {
            let longest = self.max_chars.min(marked.len() - i);
            let mut hit = None;
            for len in (1..=longest).rev() {
                buf.clear();
                buf.extend(&marked[i..i + len]);
                if let Some(id) = self.id(&buf) {
                    hit = Some((id, len));
                    break;
                }
            }
            match hit {
                Some((id, len)) => {
                    out.push(id);
                    i += len;
                }
                None => {
                    // A bare marker at the start means the first character
                    // has no word-initial piece.
                    let pos = i.saturating_sub(1);
                    return Err(Error::Tokenize {
                        word: word.to_string(),
                        ch: marked[i.max(1)],
                        position: pos,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn tokenize_word_str(&self, word: &str) -> Result<Vec<String>> {
        Ok(self
            .tokenize_word(word)?
            .into_iter()
            .map(|id| self.piece(id).to_string())
            .collect())
    }

    /// Tokenizes a whitespace-separated sentence.
    pub fn tokenize_sentence(&self, text: &str) -> Result<Vec<Label>> {
        let mut out = Vec::new();
        for w in text.split_whitespace() {
            out.extend(self.tokenize_word(w)?);
        }
        Ok(out)
    }

    /// Joins pieces back into words.
    pub fn detokenize(&self, pieces: &[Label]) -> String {
        let mut s = String::new();
        for &p in pieces {
            s.push_str(self.piece(p));
        }
        s.trim_start_matches(BOUNDARY)
            .split(BOUNDARY)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_match_from_left() {
        let wp = WordpieceModel::new(["▁an", "▁a", "n", "na", "t"]).unwrap();
        assert_eq!(wp.tokenize_word_str("anna").unwrap(), ["▁an", "na"]);
        assert_eq!(wp.tokenize_word_str("at").unwrap(), ["▁a", "t"]);
    }

    #[test]
    fn character_mode() {
        let wp = WordpieceModel::characters("abc".chars()).unwrap();
        assert_eq!(wp.tokenize_word_str("abc").unwrap(), ["▁a", "b", "c"]);
        assert_eq!(wp.num_pieces(), 6);
    }

    #[test]
    fn uncoverable_character_is_named() {
        let wp = WordpieceModel::new(["▁a", "b"]).unwrap();
        match wp.tokenize_word("abz") {
            Err(Error::Tokenize { ch, position, .. }) => {
                assert_eq!(ch, 'z');
                assert_eq!(position, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        match wp.tokenize_word("ba") {
            Err(Error::Tokenize { ch, position, .. }) => {
                assert_eq!(ch, 'b');
                assert_eq!(position, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detokenize_inverts() {
        let wp = WordpieceModel::characters("abcd".chars()).unwrap();
        let ids = wp.tokenize_sentence("ab cd a").unwrap();
        assert_eq!(wp.detokenize(&ids), "ab cd a");
    }
}
