use std::collections::{BTreeSet, HashMap};

use super::{NameId, NodeKind, NodeTable};

/// One distinct rooted label path of the document.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryNode {
    /// `None` for the document node at the summary root.
    pub name: Option<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Number of elements in the document whose rooted path ends here.
    pub count: usize,
    pub depth: usize,
}

/// Path index over element labels: a trie of every rooted label path that
/// occurs in the document, with occurrence counts.
#[derive(Debug, Clone)]
pub struct PathSummary {
    nodes: Vec<SummaryNode>,
    by_label: HashMap<String, Vec<usize>>,
}

impl PathSummary {
    pub const ROOT: usize = 0;

    pub fn build(table: &NodeTable) -> Self {
        let mut nodes = vec![SummaryNode { name: None, parent: None, children: Vec::new(), count: 1, depth: 0 }];
        let mut edges: HashMap<(usize, NameId), usize> = HashMap::new();
        // summary id for every document/element PRE; attribute and text slots are unused
        let mut slot = vec![usize::MAX; table.len()];
        slot[0] = Self::ROOT;
        for rec in table.records().iter().skip(1) {
            if rec.kind != NodeKind::Element {
                continue;
            }
            let parent = slot[rec.parent.expect("element has a parent")];
            let name = rec.name.expect("element has a name");
            let id = *edges.entry((parent, name)).or_insert_with(|| {
                let id = nodes.len();
                let depth = nodes[parent].depth + 1;
                nodes.push(SummaryNode {
                    name: Some(table.names().resolve(name).to_string()),
                    parent: Some(parent),
                    children: Vec::new(),
                    count: 0,
                    depth,
                });
                nodes[parent].children.push(id);
                id
            });
            nodes[id].count += 1;
            slot[rec.pre] = id;
        }
        let mut by_label: HashMap<String, Vec<usize>> = HashMap::new();
        for (id, n) in nodes.iter().enumerate() {
            if let Some(name) = &n.name {
                by_label.entry(name.clone()).or_default().push(id);
            }
        }
        PathSummary { nodes, by_label }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn node(&self, id: usize) -> &SummaryNode {
        &self.nodes[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    pub fn child_named(&self, id: usize, name: &str) -> Option<usize> {
        self.nodes[id].children.iter().copied().find(|&c| self.nodes[c].name.as_deref() == Some(name))
    }

    /// Summary nodes carrying `label`, anywhere in the tree.
    pub fn nodes_labeled(&self, label: &str) -> &[usize] {
        self.by_label.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Labels of the parents under which `label` occurs; `None` stands for
    /// the document node.
    pub fn parent_labels(&self, label: &str) -> BTreeSet<Option<&str>> {
        self.nodes_labeled(label)
            .iter()
            .map(|&id| self.nodes[self.nodes[id].parent.unwrap()].name.as_deref())
            .collect()
    }

    /// Label path from the root element down to `id`.
    pub fn path_of(&self, id: usize) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.nodes[id].depth);
        let mut cur = id;
        while let Some(name) = &self.nodes[cur].name {
            out.push(name.as_str());
            cur = self.nodes[cur].parent.unwrap();
        }
        out.reverse();
        out
    }

    /// Labels strictly below `ancestor` down to and including `id`.
    pub fn chain_between(&self, ancestor: usize, id: usize) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = id;
        while cur != ancestor {
            out.push(self.nodes[cur].name.as_deref().expect("document is the summary root"));
            cur = self.nodes[cur].parent.expect("ancestor lies on the path to the root");
        }
        out.reverse();
        out
    }

    /// Proper descendants of `id` labelled `label`.
    pub fn descendants_labeled(&self, id: usize, label: &str) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.nodes[id].children.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            if self.nodes[n].name.as_deref() == Some(label) {
                out.push(n);
            }
            stack.extend(self.nodes[n].children.iter().rev().copied());
        }
        out
    }

    pub fn is_ancestor(&self, ancestor: usize, mut id: usize) -> bool {
        while let Some(p) = self.nodes[id].parent {
            if p == ancestor {
                return true;
            }
            id = p;
        }
        false
    }

    /// Every rooted label path with its occurrence count, in trie preorder.
    pub fn paths(&self) -> Vec<(Vec<String>, usize)> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.nodes[Self::ROOT].children.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push((self.path_of(n).into_iter().map(str::to_string).collect(), self.nodes[n].count));
            stack.extend(self.nodes[n].children.iter().rev().copied());
        }
        out
    }

    /// Occurrence count of a rooted label path, if it occurs.
    pub fn count(&self, path: &[&str]) -> Option<usize> {
        let mut cur = Self::ROOT;
        for label in path {
            cur = self.child_named(cur, label)?;
        }
        (cur != Self::ROOT).then(|| self.nodes[cur].count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::parse_document;

    #[test]
    fn distinct_paths() {
        let t = parse_document(b"<a><b/><b><c/></b></a>", "t").unwrap();
        let s = PathSummary::build(&t);
        let paths: Vec<_> = s.paths().into_iter().map(|(p, c)| (p.join("/"), c)).collect();
        assert_eq!(paths, vec![("a".into(), 1), ("a/b".into(), 2), ("a/b/c".into(), 1)]);
        assert_eq!(s.count(&["a", "b"]), Some(2));
        assert_eq!(s.count(&["a", "c"]), None);
        assert_eq!(s.parent_labels("c"), BTreeSet::from([Some("b")]));
        assert_eq!(s.parent_labels("a"), BTreeSet::from([None]));
    }

    #[test]
    fn chains_and_descendants() {
        let t = parse_document(b"<a><b><x/></b><c><b/></c></a>", "t").unwrap();
        let s = PathSummary::build(&t);
        let a = s.child_named(PathSummary::ROOT, "a").unwrap();
        let bs = s.descendants_labeled(a, "b");
        assert_eq!(bs.len(), 2);
        let chains: Vec<_> = bs.iter().map(|&b| s.chain_between(a, b)).collect();
        assert_eq!(chains, vec![vec!["b"], vec!["c", "b"]]);
        assert!(s.is_ancestor(a, bs[1]));
        assert!(!s.is_ancestor(bs[0], bs[1]));
    }
}
