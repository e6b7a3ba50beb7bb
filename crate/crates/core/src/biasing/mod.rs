//! Per-class contextual bias FSTs built from entity lists, and the
//! lexicon-based tokenization baseline.

mod bias;
mod lg;
mod lexicon;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tokenize::lexicon_is_class_name;

pub use bias::{build_bias, build_gc, build_lc, BiasFst, LcConfig, LcOutput, TokSource, Tokenization};
pub use lexicon::{read_pron_lexicon, write_pron_lexicon, PronLexicon, PronTokenizer};
pub use lg::{build_lg_baseline, LgBaseline};

/// Entities of one class, whitespace-normalized, de-duplicated and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityList {
    class: String,
    entities: Vec<String>,
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl EntityList {
    pub fn new<S: AsRef<str>>(class: &str, entities: impl IntoIterator<Item = S>) -> Result<Self> {
        if !lexicon_is_class_name(class) {
            return Err(Error::Config(format!("invalid class name {class:?}")));
        }
        let set: BTreeSet<String> = entities
            .into_iter()
            .map(|e| normalize_whitespace(e.as_ref()))
            .filter(|e| !e.is_empty())
            .collect();
        if set.is_empty() {
            return Err(Error::Config(format!("entity list for {class} is empty")));
        }
        Ok(EntityList {
            class: class.to_string(),
            entities: set.into_iter().collect(),
        })
    }

    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Distinct words across all entities, sorted.
    pub fn words(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .entities
            .iter()
            .flat_map(|e| e.split(' '))
            .collect();
        set.into_iter().map(String::from).collect()
    }
}

/// Parses a JSON object mapping class names to arrays of entity strings.
pub fn read_entity_lists(json: &str) -> Result<Vec<EntityList>> {
    let map: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
    map.iter().map(|(c, es)| EntityList::new(c, es)).collect()
}

pub fn entity_lists_json(lists: &[EntityList]) -> String {
    let map: BTreeMap<&str, &[String]> = lists.iter().map(|l| (l.class(), l.entities())).collect();
    serde_json::to_string_pretty(&map).unwrap_or_default()
}
