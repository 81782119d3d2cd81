//! PRE-ordered node table.
//!
//! A document is stored as one flat array of records in document order.
//! The position of a record in the array is its PRE value; together with the
//! subtree size it gives constant-time access and interval-containment tests
//! for the ancestor/descendant relation.

mod index;
mod summary;
mod xml;

use std::collections::HashMap;
use std::fmt::Write as _;

pub use index::{IndexKind, ValueIndex};
pub use summary::{PathSummary, SummaryNode};
pub use xml::parse_document;

use crate::error::{Error, Result};

/// Handle into a table's name intern pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NameId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Document,
    Element,
    Attribute,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub pre: usize,
    /// Number of nodes in the subtree rooted here, self included.
    pub size: usize,
    pub parent: Option<usize>,
    pub kind: NodeKind,
    pub name: Option<NameId>,
    /// Text content for text nodes, the value for attributes, empty otherwise.
    pub value: Box<str>,
}

/// Case-sensitive intern pool for element and attribute names.
#[derive(Debug, Clone, Default)]
pub struct Names {
    names: Vec<Box<str>>,
    ids: HashMap<Box<str>, NameId>,
}

impl Names {
    pub fn intern(&mut self, name: &str) -> NameId {
        if let Some(id) = self.ids.get(name) {
            return *id;
        }
        let id = NameId(self.names.len() as u32);
        self.names.push(name.into());
        self.ids.insert(name.into(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<NameId> {
        self.ids.get(name).copied()
    }

    pub fn resolve(&self, id: NameId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Immutable PRE-ordered encoding of one XML document.
#[derive(Debug, Clone)]
pub struct NodeTable {
    records: Vec<NodeRecord>,
    names: Names,
    db_name: String,
}

/// A node of a particular table, as returned by [`NodeTable::open_pre`].
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    table: &'a NodeTable,
    pre: usize,
}

impl<'a> Node<'a> {
    pub fn pre(&self) -> usize {
        self.pre
    }

    pub fn record(&self) -> &'a NodeRecord {
        &self.table.records[self.pre]
    }

    pub fn kind(&self) -> NodeKind {
        self.record().kind
    }

    pub fn name(&self) -> Option<&'a str> {
        self.table.name(self.pre)
    }

    pub fn table(&self) -> &'a NodeTable {
        self.table
    }
}

impl PartialEq for Node<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.table, other.table) && self.pre == other.pre
    }
}

impl NodeTable {
    pub fn db_name(&self) -> &str {
        &self.db_name
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Never true for a constructed table: record 0 is always the document node.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn names(&self) -> &Names {
        &self.names
    }

    pub fn records(&self) -> &[NodeRecord] {
        &self.records
    }

    #[inline]
    pub fn record(&self, pre: usize) -> &NodeRecord {
        &self.records[pre]
    }

    pub fn open_pre(&self, pre: usize) -> Result<Node<'_>> {
        if pre < self.records.len() {
            Ok(Node { table: self, pre })
        } else {
            Err(Error::Range { pre, len: self.records.len() })
        }
    }

    pub fn node_pre(&self, node: Node<'_>) -> usize {
        node.pre
    }

    #[inline]
    pub fn kind(&self, pre: usize) -> NodeKind {
        self.records[pre].kind
    }

    #[inline]
    pub fn size(&self, pre: usize) -> usize {
        self.records[pre].size
    }

    #[inline]
    pub fn parent(&self, pre: usize) -> Option<usize> {
        self.records[pre].parent
    }

    #[inline]
    pub fn name_id(&self, pre: usize) -> Option<NameId> {
        self.records[pre].name
    }

    pub fn name(&self, pre: usize) -> Option<&str> {
        self.records[pre].name.map(|id| self.names.resolve(id))
    }

    pub fn value(&self, pre: usize) -> &str {
        &self.records[pre].value
    }

    /// First PRE after the attributes of `pre`.
    #[inline]
    pub fn content_start(&self, pre: usize) -> usize {
        let mut p = pre + 1;
        let end = pre + self.records[pre].size;
        while p < end && self.records[p].kind == NodeKind::Attribute {
            p += 1;
        }
        p
    }

    /// Attribute nodes of `pre`, in document order.
    pub fn attributes(&self, pre: usize) -> std::ops::Range<usize> {
        pre + 1..self.content_start(pre)
    }

    /// Non-attribute children of `pre`, in document order.
    pub fn children(&self, pre: usize) -> Children<'_> {
        Children {
            table: self,
            next: self.content_start(pre),
            end: pre + self.records[pre].size,
        }
    }

    /// Non-attribute descendants of `pre` (self excluded), in document order.
    pub fn descendants(&self, pre: usize) -> impl Iterator<Item = usize> + '_ {
        let end = pre + self.records[pre].size;
        (pre + 1..end).filter(move |&p| self.records[p].kind != NodeKind::Attribute)
    }

    /// True if `q` lies in the subtree rooted at `p` (self included).
    #[inline]
    pub fn contains(&self, p: usize, q: usize) -> bool {
        p <= q && q < p + self.records[p].size
    }

    /// XPath string value: concatenated descendant text for documents and
    /// elements, the stored value for text and attribute nodes.
    pub fn string_value(&self, pre: usize) -> String {
        let rec = &self.records[pre];
        match rec.kind {
            NodeKind::Text | NodeKind::Attribute => rec.value.to_string(),
            NodeKind::Document | NodeKind::Element => {
                let mut out = String::new();
                for p in pre + 1..pre + rec.size {
                    if self.records[p].kind == NodeKind::Text {
                        out.push_str(&self.records[p].value);
                    }
                }
                out
            }
        }
    }

    pub fn number_value(&self, pre: usize) -> f64 {
        parse_number(&self.string_value(pre))
    }

    /// Deterministic serialization of one node. Attributes serialize as
    /// `name="value"`; line breaks are always written as character
    /// references so a serialized item fits on one line.
    pub fn serialize_into(&self, pre: usize, out: &mut String) {
        let rec = &self.records[pre];
        match rec.kind {
            NodeKind::Document => {
                for c in self.children(pre) {
                    self.serialize_into(c, out);
                }
            }
            NodeKind::Text => escape_text(&rec.value, out),
            NodeKind::Attribute => {
                out.push_str(self.name(pre).unwrap_or_default());
                out.push_str("=\"");
                escape_attr(&rec.value, out);
                out.push('"');
            }
            NodeKind::Element => {
                let name = self.name(pre).unwrap_or_default();
                out.push('<');
                out.push_str(name);
                for a in self.attributes(pre) {
                    out.push(' ');
                    self.serialize_into(a, out);
                }
                let mut children = self.children(pre).peekable();
                if children.peek().is_none() {
                    out.push_str("/>");
                } else {
                    out.push('>');
                    for c in children {
                        self.serialize_into(c, out);
                    }
                    let _ = write!(out, "</{name}>");
                }
            }
        }
    }

    pub fn serialize(&self, pre: usize) -> String {
        let mut out = String::new();
        self.serialize_into(pre, &mut out);
        out
    }
}

pub struct Children<'a> {
    table: &'a NodeTable,
    next: usize,
    end: usize,
}

impl Iterator for Children<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.next >= self.end {
            return None;
        }
        let cur = self.next;
        self.next += self.table.records[cur].size;
        Some(cur)
    }
}

/// XPath 1.0 `number()` of a string: optional surrounding whitespace, an
/// optional minus sign, digits with an optional fraction. Anything else is NaN.
pub fn parse_number(s: &str) -> f64 {
    let t = s.trim_matches(|c: char| matches!(c, ' ' | '\t' | '\n' | '\r'));
    let body = t.strip_prefix('-').unwrap_or(t);
    let mut digits = 0;
    let mut dots = 0;
    for c in body.chars() {
        match c {
            '0'..='9' => digits += 1,
            '.' => dots += 1,
            _ => return f64::NAN,
        }
    }
    if digits == 0 || dots > 1 {
        return f64::NAN;
    }
    t.parse::<f64>().unwrap_or(f64::NAN)
}

fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            _ => out.push(c),
        }
    }
}

/// Incremental construction of a [`NodeTable`] in document order.
#[derive(Debug)]
pub struct TableBuilder {
    records: Vec<NodeRecord>,
    names: Names,
    open: Vec<usize>,
}

impl Default for TableBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl TableBuilder {
    pub fn new() -> Self {
        let document = NodeRecord {
            pre: 0,
            size: 1,
            parent: None,
            kind: NodeKind::Document,
            name: None,
            value: "".into(),
        };
        TableBuilder { records: vec![document], names: Names::default(), open: vec![0] }
    }

    fn current(&self) -> usize {
        *self.open.last().expect("document node is never closed")
    }

    pub fn depth(&self) -> usize {
        self.open.len() - 1
    }

    pub fn start_element(&mut self, name: &str) -> usize {
        let pre = self.records.len();
        let parent = self.current();
        let name = self.names.intern(name);
        self.records.push(NodeRecord {
            pre,
            size: 1,
            parent: Some(parent),
            kind: NodeKind::Element,
            name: Some(name),
            value: "".into(),
        });
        self.open.push(pre);
        pre
    }

    /// Adds an attribute to the element just opened. Panics if content has
    /// already been added to it.
    pub fn attribute(&mut self, name: &str, value: &str) -> usize {
        let owner = self.current();
        assert!(
            self.records[owner].kind == NodeKind::Element
                && self.records[owner + 1..].iter().all(|r| r.kind == NodeKind::Attribute),
            "attributes must directly follow their element"
        );
        let pre = self.records.len();
        let name = self.names.intern(name);
        self.records.push(NodeRecord {
            pre,
            size: 1,
            parent: Some(owner),
            kind: NodeKind::Attribute,
            name: Some(name),
            value: value.into(),
        });
        pre
    }

    pub fn text(&mut self, value: &str) -> usize {
        let pre = self.records.len();
        let parent = self.current();
        self.records.push(NodeRecord {
            pre,
            size: 1,
            parent: Some(parent),
            kind: NodeKind::Text,
            name: None,
            value: value.into(),
        });
        pre
    }

    pub fn end_element(&mut self) {
        assert!(self.open.len() > 1, "no open element");
        let pre = self.open.pop().unwrap();
        self.records[pre].size = self.records.len() - pre;
    }

    pub fn finish(mut self, db_name: &str) -> NodeTable {
        assert_eq!(self.open.len(), 1, "unclosed elements");
        self.records[0].size = self.records.len();
        NodeTable { records: self.records, names: self.names, db_name: db_name.to_string() }
    }
}

/// A loaded document together with its path summary and value index.
#[derive(Debug, Clone)]
pub struct Database {
    pub table: NodeTable,
    pub summary: PathSummary,
    pub values: ValueIndex,
}

impl Database {
    pub fn new(table: NodeTable) -> Self {
        let summary = PathSummary::build(&table);
        let values = ValueIndex::build(&table);
        Database { table, summary, values }
    }

    pub fn parse(xml: &[u8], db_name: &str) -> Result<Self> {
        Ok(Database::new(parse_document(xml, db_name)?))
    }

    pub fn name(&self) -> &str {
        self.table.db_name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(xml: &str) -> NodeTable {
        parse_document(xml.as_bytes(), "t").unwrap()
    }

    #[test]
    fn smallest_document() {
        let t = table("<a/>");
        assert_eq!(t.len(), 2);
        assert_eq!(t.kind(0), NodeKind::Document);
        assert_eq!(t.size(0), 2);
        assert_eq!(t.kind(1), NodeKind::Element);
        assert_eq!(t.size(1), 1);
        assert_eq!(t.name(1), Some("a"));
        assert_eq!(t.parent(1), Some(0));
    }

    #[test]
    fn partition_listing_layout() {
        let t = table("<root><part>2 5</part><part>42 81</part><part>109 203</part></root>");
        let parts: Vec<_> = (0..t.len()).filter(|&p| t.name(p) == Some("part")).collect();
        assert_eq!(parts, vec![2, 4, 6]);
        for p in parts {
            assert_eq!(t.kind(p + 1), NodeKind::Text);
        }
        assert_eq!(t.value(5), "42 81");
        assert_eq!(t.open_pre(4).unwrap().name(), Some("part"));
    }

    #[test]
    fn open_pre_and_node_pre_are_inverse() {
        let t = table(r#"<a x="1"><b>t</b><c y="2" z="3"/></a>"#);
        assert_eq!(t.open_pre(0).unwrap().kind(), NodeKind::Document);
        for k in 0..t.len() {
            assert_eq!(t.node_pre(t.open_pre(k).unwrap()), k);
        }
        assert!(matches!(t.open_pre(t.len()), Err(Error::Range { .. })));
    }

    #[test]
    fn attributes_precede_children() {
        let t = table(r#"<a x="1" y="2"><b/></a>"#);
        assert_eq!(t.attributes(1), 2..4);
        assert_eq!(t.children(1).collect::<Vec<_>>(), vec![4]);
        assert_eq!(t.descendants(1).collect::<Vec<_>>(), vec![4]);
        assert_eq!(t.kind(2), NodeKind::Attribute);
    }

    #[test]
    fn string_and_number_values() {
        let t = table("<q><a>4</a><b>2</b></q>");
        assert_eq!(t.string_value(1), "42");
        assert_eq!(t.number_value(1), 42.0);
        assert_eq!(t.number_value(3), 4.0);
        assert!(parse_number("4 2").is_nan());
        assert!(parse_number("").is_nan());
        assert!(parse_number("1e3").is_nan());
        assert_eq!(parse_number(" -3.5 "), -3.5);
        assert_eq!(parse_number(".5"), 0.5);
    }

    #[test]
    fn serialization_is_one_line() {
        let t = table("<a k=\"v&quot;\">x&lt;y&#10;z<e/></a>");
        assert_eq!(t.serialize(1), "<a k=\"v&quot;\">x&lt;y&#10;z<e/></a>");
        assert_eq!(t.serialize(2), "k=\"v&quot;\"");
    }
}
