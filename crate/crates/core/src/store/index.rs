use std::collections::HashMap;

use super::{NodeKind, NodeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexKind {
    Attribute,
    Text,
}

impl IndexKind {
    pub fn function_name(self) -> &'static str {
        match self {
            IndexKind::Attribute => "db:attribute",
            IndexKind::Text => "db:text",
        }
    }
}

/// Exact-match inverted index from attribute and text values to the PRE
/// values of the nodes holding them.
#[derive(Debug, Clone, Default)]
pub struct ValueIndex {
    attributes: HashMap<Box<str>, Vec<usize>>,
    texts: HashMap<Box<str>, Vec<usize>>,
}

impl ValueIndex {
    pub fn build(table: &NodeTable) -> Self {
        let mut index = ValueIndex::default();
        for rec in table.records() {
            let map = match rec.kind {
                NodeKind::Attribute => &mut index.attributes,
                NodeKind::Text if !rec.value.is_empty() => &mut index.texts,
                _ => continue,
            };
            // PREs are visited in ascending order, so every list stays sorted
            map.entry(rec.value.clone()).or_default().push(rec.pre);
        }
        index
    }

    pub fn lookup(&self, kind: IndexKind, value: &str) -> &[usize] {
        let map = match kind {
            IndexKind::Attribute => &self.attributes,
            IndexKind::Text => &self.texts,
        };
        map.get(value).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn hit_count(&self, kind: IndexKind, value: &str) -> usize {
        self.lookup(kind, value).len()
    }

    pub fn distinct_values(&self) -> usize {
        self.attributes.len() + self.texts.len()
    }
}
