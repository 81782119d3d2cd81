//! Index-based query rewriting.
//!
//! Two rules, both restricted to queries that start at the document root:
//!
//! * descendant steps whose target label is reachable through exactly one
//!   label chain in the path summary become chains of child steps;
//! * an equality predicate against a string literal turns into a value
//!   index lookup, followed by reverse steps that re-establish the original
//!   path as a guard.
//!
//! Rewritten queries can then be split like any other query.

use std::collections::BTreeSet;
use std::fmt;

use crate::store::{Database, IndexKind, PathSummary, ValueIndex};
use crate::xpath::{Axis, CmpOp, Expr, IndexAccess, KindTest, NodeTest, Origin, QueryAst, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    DescendantToChildChain,
    ValueIndexInversion,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::DescendantToChildChain => "descendant_to_child_chain",
            Rule::ValueIndexInversion => "value_index_inversion",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteReport {
    pub input: QueryAst,
    pub output: QueryAst,
    pub applied: Vec<Rule>,
    /// Summary and index facts each applied rule relied on.
    pub notes: Vec<String>,
}

impl RewriteReport {
    pub fn changed(&self) -> bool {
        self.input != self.output
    }
}

/// Applies both rules to a fixpoint.
pub fn optimize(ast: &QueryAst, summary: &PathSummary, values: &ValueIndex, db_name: &str) -> RewriteReport {
    let mut current = ast.clone();
    let mut applied = Vec::new();
    let mut notes = Vec::new();
    loop {
        if let Some((next, mut why)) = descendant_to_child_chain(&current, summary) {
            current = next;
            applied.push(Rule::DescendantToChildChain);
            notes.append(&mut why);
            continue;
        }
        if let Some((next, why)) = value_index_inversion(&current, values, summary, db_name) {
            current = next;
            applied.push(Rule::ValueIndexInversion);
            notes.push(why);
            continue;
        }
        break;
    }
    RewriteReport { input: ast.clone(), output: current, applied, notes }
}

pub fn optimize_for(ast: &QueryAst, db: &Database) -> RewriteReport {
    optimize(ast, &db.summary, &db.values, db.name())
}

pub fn rule_descendant_to_child_chain(ast: &QueryAst, summary: &PathSummary) -> QueryAst {
    descendant_to_child_chain(ast, summary).map_or_else(|| ast.clone(), |(q, _)| q)
}

pub fn rule_value_index_inversion(ast: &QueryAst, values: &ValueIndex, summary: &PathSummary, db_name: &str) -> QueryAst {
    value_index_inversion(ast, values, summary, db_name).map_or_else(|| ast.clone(), |(q, _)| q)
}

// ---------------------------------------------------------------------------
// descendant → child chain

/// Over-approximates the summary nodes a step can reach from `ctx`.
/// `None` means the step leaves the element structure (attributes, text).
fn summary_step(summary: &PathSummary, ctx: &[usize], step: &Step) -> Option<Vec<usize>> {
    let label = match &step.test {
        NodeTest::Name(n) => Some(n.as_str()),
        NodeTest::Wildcard | NodeTest::Kind(KindTest::Element) => None,
        NodeTest::Kind(KindTest::Node) if !matches!(step.axis, Axis::Attribute) => None,
        _ => return None,
    };
    let keep = |id: &usize| *id != PathSummary::ROOT && label.is_none_or(|l| summary.node(*id).name.as_deref() == Some(l));
    let node_test = matches!(step.test, NodeTest::Kind(KindTest::Node));
    let mut out: BTreeSet<usize> = BTreeSet::new();
    for &c in ctx {
        match step.axis {
            Axis::Child => out.extend(summary.children(c).iter().copied().filter(keep)),
            Axis::Descendant | Axis::DescendantOrSelf => {
                if step.axis == Axis::DescendantOrSelf && (keep(&c) || node_test) {
                    out.insert(c);
                }
                let mut stack = summary.children(c).to_vec();
                while let Some(n) = stack.pop() {
                    if keep(&n) {
                        out.insert(n);
                    }
                    stack.extend_from_slice(summary.children(n));
                }
            }
            Axis::SelfAxis => {
                if keep(&c) || node_test {
                    out.insert(c);
                }
            }
            Axis::Parent | Axis::Ancestor => {
                let mut cur = summary.node(c).parent;
                while let Some(p) = cur {
                    if keep(&p) || (node_test && p == PathSummary::ROOT) {
                        out.insert(p);
                    }
                    cur = if step.axis == Axis::Ancestor { summary.node(p).parent } else { None };
                }
            }
            Axis::FollowingSibling => {
                if let Some(p) = summary.node(c).parent {
                    out.extend(summary.children(p).iter().copied().filter(keep));
                }
            }
            Axis::Attribute => return None,
        }
    }
    Some(out.into_iter().collect())
}

fn descendant_to_child_chain(ast: &QueryAst, summary: &PathSummary) -> Option<(QueryAst, Vec<String>)> {
    if ast.origin != Origin::Root {
        return None;
    }
    let mut ctx: Option<Vec<usize>> = Some(vec![PathSummary::ROOT]);
    let mut steps = Vec::with_capacity(ast.steps.len());
    let mut notes = Vec::new();
    for (idx, step) in ast.steps.iter().enumerate() {
        if let (Some(c), Axis::Descendant, NodeTest::Name(label)) = (&ctx, step.axis, &step.test) {
            if !step.is_positional() {
                let mut chains: BTreeSet<Vec<&str>> = BTreeSet::new();
                let mut targets = BTreeSet::new();
                for &from in c {
                    for t in summary.descendants_labeled(from, label) {
                        chains.insert(summary.chain_between(from, t));
                        targets.insert(t);
                    }
                }
                if chains.len() == 1 {
                    let chain = chains.into_iter().next().unwrap();
                    let parents: Vec<_> = targets.iter().map(|&t| summary.path_of(t).join("/")).collect();
                    notes.push(format!("`{label}` occurs only at /{}; descendant step becomes {}", parents.join(", /"), chain.join("/")));
                    for (i, l) in chain.iter().enumerate() {
                        let s = Step::named(Axis::Child, l);
                        steps.push(if i + 1 == chain.len() { s.with_predicates(step.predicates.clone()) } else { s });
                    }
                    steps.extend(ast.steps[idx + 1..].iter().cloned());
                    return Some((QueryAst { origin: Origin::Root, steps }, notes));
                }
            }
        }
        ctx = ctx.and_then(|c| summary_step(summary, &c, step));
        steps.push(step.clone());
    }
    None
}

// ---------------------------------------------------------------------------
// value index inversion

struct Candidate {
    step: usize,
    predicate: usize,
    conjunct: usize,
    kind: IndexKind,
    /// Attribute name or child element name compared against the literal.
    name: String,
    value: String,
    hits: usize,
}

/// Recognizes `@a = "v"`, `./@a = "v"`, `c = "v"` and `./c = "v"`, in either
/// operand order.
fn value_predicate(e: &Expr) -> Option<(IndexKind, String, String)> {
    let Expr::Compare(CmpOp::Eq, a, b) = e else {
        return None;
    };
    let (path, value) = match (a.as_ref(), b.as_ref()) {
        (Expr::Path(p), Expr::Literal(v)) | (Expr::Literal(v), Expr::Path(p)) => (p, v),
        _ => return None,
    };
    if path.origin != Origin::Context {
        return None;
    }
    let mut steps = path.steps.as_slice();
    if let [first, rest @ ..] = steps {
        if first.axis == Axis::SelfAxis && first.test == NodeTest::Kind(KindTest::Node) && first.predicates.is_empty() {
            steps = rest;
        }
    }
    match steps {
        [s] if s.predicates.is_empty() => match (&s.axis, &s.test) {
            (Axis::Attribute, NodeTest::Name(n)) => Some((IndexKind::Attribute, n.clone(), value.clone())),
            (Axis::Child, NodeTest::Name(n)) => Some((IndexKind::Text, n.clone(), value.clone())),
            _ => None,
        },
        _ => None,
    }
}

fn guardable(step: &Step) -> bool {
    matches!(step.axis, Axis::Child | Axis::Descendant)
        && matches!(step.test, NodeTest::Name(_) | NodeTest::Wildcard)
        && !step.is_positional()
}

/// Reverse path from the node selected by `steps[k]` back to the document
/// node, carrying the tests and predicates of the original steps.
fn guard(steps: &[Step], k: usize) -> QueryAst {
    let mut out = Vec::with_capacity(k + 1);
    for j in (0..=k).rev() {
        let axis = if steps[j].axis == Axis::Descendant { Axis::Ancestor } else { Axis::Parent };
        let step = if j == 0 {
            Step::new(axis, NodeTest::Kind(KindTest::Document))
        } else {
            Step::new(axis, steps[j - 1].test.clone()).with_predicates(steps[j - 1].predicates.clone())
        };
        out.push(step);
    }
    QueryAst::relative(out)
}

fn value_index_inversion(
    ast: &QueryAst,
    values: &ValueIndex,
    summary: &PathSummary,
    db_name: &str,
) -> Option<(QueryAst, String)> {
    if ast.origin != Origin::Root {
        return None;
    }
    let mut best: Option<Candidate> = None;
    for (k, step) in ast.steps.iter().enumerate() {
        if !guardable(step) {
            break;
        }
        for (pi, pred) in step.predicates.iter().enumerate() {
            for (ci, conj) in pred.conjuncts().into_iter().enumerate() {
                let Some((kind, name, value)) = value_predicate(conj) else { continue };
                let hits = match kind {
                    IndexKind::Attribute => values.lookup(kind, &value).len(),
                    IndexKind::Text => {
                        // string value equals the single text child only if
                        // `name` never has element content
                        let text_only = summary.nodes_labeled(&name).iter().all(|&id| summary.children(id).is_empty());
                        if value.is_empty() || !text_only {
                            continue;
                        }
                        values.lookup(kind, &value).len()
                    }
                };
                if best.as_ref().is_none_or(|b| hits < b.hits) {
                    best = Some(Candidate { step: k, predicate: pi, conjunct: ci, kind, name, value, hits });
                }
            }
        }
    }
    let c = best?;
    let target = &ast.steps[c.step];
    let mut predicates = vec![Expr::Path(guard(&ast.steps, c.step))];
    for (pi, pred) in target.predicates.iter().enumerate() {
        if pi == c.predicate {
            predicates.extend(pred.conjuncts().into_iter().enumerate().filter(|(ci, _)| *ci != c.conjunct).map(|(_, e)| e.clone()));
        } else {
            predicates.push(pred.clone());
        }
    }
    let mut steps = Vec::new();
    let access = match c.kind {
        IndexKind::Attribute => IndexAccess {
            kind: c.kind,
            db: db_name.to_string(),
            value: c.value.clone(),
            name: Some(c.name.clone()),
        },
        IndexKind::Text => {
            steps.push(Step::named(Axis::Parent, &c.name));
            IndexAccess { kind: c.kind, db: db_name.to_string(), value: c.value.clone(), name: None }
        }
    };
    steps.push(Step::new(Axis::Parent, target.test.clone()).with_predicates(predicates));
    steps.extend(ast.steps[c.step + 1..].iter().cloned());
    let what = match c.kind {
        IndexKind::Attribute => format!("@{}", c.name),
        IndexKind::Text => c.name.clone(),
    };
    let note = format!("{} index: {what} = \"{}\" has {} hit(s)", c.kind.function_name(), c.value, c.hits);
    Some((QueryAst { origin: Origin::Index(access), steps }, note))
}
