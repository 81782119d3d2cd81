//! Set-at-a-time evaluator over a [`Database`].
//!
//! Every step maps a duplicate-free, ascending node sequence to another one.
//! Predicates are applied per context node over that node's axis result in
//! axis order, so `position()` and `last()` are always local to one context
//! node.

use super::ast::{Axis, CmpOp, Expr, Function, KindTest, NodeTest, Origin, QueryAst, Step};
use crate::error::{Error, Result};
use crate::store::{parse_number, Database, IndexKind, NameId, NodeKind, NodeTable};

/// Ascending, duplicate-free PRE values of one database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSequence {
    pub db_name: String,
    pub pres: Vec<usize>,
}

impl NodeSequence {
    pub fn new(db_name: impl Into<String>, pres: Vec<usize>) -> Self {
        debug_assert!(pres.windows(2).all(|w| w[0] < w[1]));
        NodeSequence { db_name: db_name.into(), pres }
    }

    pub fn len(&self) -> usize {
        self.pres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pres.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Nodes(Vec<usize>),
    Number(f64),
    Str(String),
    Bool(bool),
}

/// Evaluates `ast` from `context`. Absolute queries ignore the context.
/// The result is ascending and duplicate-free.
pub fn evaluate(ast: &QueryAst, db: &Database, context: &[usize]) -> Result<Vec<usize>> {
    Evaluator { db }.path(ast, context)
}

/// Evaluates a query and wraps the result as a [`NodeSequence`].
pub fn evaluate_query(ast: &QueryAst, db: &Database) -> Result<NodeSequence> {
    Ok(NodeSequence::new(db.name(), evaluate(ast, db, &[0])?))
}

pub fn string_value(table: &NodeTable, pre: usize) -> String {
    table.string_value(pre)
}

pub fn number_value(table: &NodeTable, pre: usize) -> f64 {
    table.number_value(pre)
}

/// Resolved node test: names are looked up once per step.
enum Test {
    Name(Option<NameId>),
    Wildcard,
    Kind(KindTest),
}

struct Evaluator<'a> {
    db: &'a Database,
}

impl<'a> Evaluator<'a> {
    fn table(&self) -> &'a NodeTable {
        &self.db.table
    }

    fn path(&self, ast: &QueryAst, context: &[usize]) -> Result<Vec<usize>> {
        let mut current: Vec<usize> = match &ast.origin {
            Origin::Root => vec![0],
            Origin::Context => {
                let len = self.table().len();
                if let Some(&bad) = context.iter().find(|&&p| p >= len) {
                    return Err(Error::Range { pre: bad, len });
                }
                let mut ctx = context.to_vec();
                normalize(&mut ctx);
                ctx
            }
            Origin::Index(ix) => {
                let hits = self.db.values.lookup(ix.kind, &ix.value);
                match (&ix.name, ix.kind) {
                    (Some(name), IndexKind::Attribute) => {
                        let id = self.table().names().get(name);
                        hits.iter().copied().filter(|&p| id.is_some() && self.table().name_id(p) == id).collect()
                    }
                    _ => hits.to_vec(),
                }
            }
        };
        for step in &ast.steps {
            if current.is_empty() {
                break;
            }
            current = self.step(step, &current)?;
        }
        Ok(current)
    }

    fn resolve(&self, test: &NodeTest) -> Test {
        match test {
            NodeTest::Name(n) => Test::Name(self.table().names().get(n)),
            NodeTest::Wildcard => Test::Wildcard,
            NodeTest::Kind(k) => Test::Kind(*k),
        }
    }

    #[inline]
    fn matches(&self, axis: Axis, test: &Test, pre: usize) -> bool {
        let t = self.table();
        let kind = t.kind(pre);
        let principal = if axis == Axis::Attribute { NodeKind::Attribute } else { NodeKind::Element };
        match test {
            Test::Name(None) => false,
            Test::Name(Some(id)) => kind == principal && t.name_id(pre) == Some(*id),
            Test::Wildcard => kind == principal,
            Test::Kind(KindTest::Node) => true,
            Test::Kind(KindTest::Element) => kind == NodeKind::Element,
            Test::Kind(KindTest::Attribute) => kind == NodeKind::Attribute,
            Test::Kind(KindTest::Text) => kind == NodeKind::Text,
            Test::Kind(KindTest::Document) => kind == NodeKind::Document,
        }
    }

    /// Nodes on `axis` from `c` that pass the node test, in axis order.
    fn axis_nodes(&self, c: usize, axis: Axis, test: &Test, out: &mut Vec<usize>) {
        let t = self.table();
        let is_attr = t.kind(c) == NodeKind::Attribute;
        match axis {
            Axis::SelfAxis => {
                if self.matches(axis, test, c) {
                    out.push(c);
                }
            }
            Axis::Child => {
                if !is_attr {
                    out.extend(t.children(c).filter(|&p| self.matches(axis, test, p)));
                }
            }
            Axis::Descendant | Axis::DescendantOrSelf => {
                if axis == Axis::DescendantOrSelf && self.matches(axis, test, c) {
                    out.push(c);
                }
                if !is_attr {
                    if let Test::Name(None) = test {
                        return;
                    }
                    out.extend(t.descendants(c).filter(|&p| self.matches(axis, test, p)));
                }
            }
            Axis::Attribute => {
                if t.kind(c) == NodeKind::Element {
                    out.extend(t.attributes(c).filter(|&p| self.matches(axis, test, p)));
                }
            }
            Axis::Parent => {
                if let Some(p) = t.parent(c) {
                    if self.matches(axis, test, p) {
                        out.push(p);
                    }
                }
            }
            Axis::Ancestor => {
                let mut cur = t.parent(c);
                while let Some(p) = cur {
                    if self.matches(axis, test, p) {
                        out.push(p);
                    }
                    cur = t.parent(p);
                }
            }
            Axis::FollowingSibling => {
                if is_attr {
                    return;
                }
                if let Some(parent) = t.parent(c) {
                    let end = parent + t.size(parent);
                    let mut p = c + t.size(c);
                    while p < end {
                        if self.matches(axis, test, p) {
                            out.push(p);
                        }
                        p += t.size(p);
                    }
                }
            }
        }
    }

    fn step(&self, step: &Step, context: &[usize]) -> Result<Vec<usize>> {
        let test = self.resolve(&step.test);
        let mut out = Vec::new();
        let mut local = Vec::new();
        for &c in context {
            if step.predicates.is_empty() {
                self.axis_nodes(c, step.axis, &test, &mut out);
                continue;
            }
            local.clear();
            self.axis_nodes(c, step.axis, &test, &mut local);
            for pred in &step.predicates {
                if local.is_empty() {
                    break;
                }
                let size = local.len();
                let mut kept = Vec::with_capacity(size);
                for (i, &n) in local.iter().enumerate() {
                    if self.predicate(pred, n, i + 1, size)? {
                        kept.push(n);
                    }
                }
                local = kept;
            }
            out.extend_from_slice(&local);
        }
        normalize(&mut out);
        Ok(out)
    }

    fn predicate(&self, pred: &Expr, node: usize, position: usize, size: usize) -> Result<bool> {
        Ok(match self.expr(pred, node, position, size)? {
            Value::Number(n) => n == position as f64,
            v => boolean(&v),
        })
    }

    fn expr(&self, e: &Expr, node: usize, position: usize, size: usize) -> Result<Value> {
        Ok(match e {
            Expr::Or(terms) => {
                for t in terms {
                    if boolean(&self.expr(t, node, position, size)?) {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            Expr::And(terms) => {
                for t in terms {
                    if !boolean(&self.expr(t, node, position, size)?) {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Expr::Compare(op, a, b) => {
                let a = self.expr(a, node, position, size)?;
                let b = self.expr(b, node, position, size)?;
                Value::Bool(compare(self.table(), *op, &a, &b))
            }
            Expr::Path(p) => Value::Nodes(self.path(p, &[node])?),
            Expr::Number(n) => Value::Number(*n),
            Expr::Literal(s) => Value::Str(s.clone()),
            Expr::Call(Function::Last) => Value::Number(size as f64),
            Expr::Call(Function::Position) => Value::Number(position as f64),
            Expr::Call(Function::Count(arg)) => match self.expr(arg, node, position, size)? {
                Value::Nodes(v) => Value::Number(v.len() as f64),
                other => return Err(Error::Eval(format!("count() expects a node-set, got {}", type_name(&other)))),
            },
            Expr::Call(Function::Name(None)) => Value::Str(self.table().name(node).unwrap_or_default().to_string()),
            Expr::Call(Function::Name(Some(arg))) => match self.expr(arg, node, position, size)? {
                Value::Nodes(v) => {
                    Value::Str(v.first().and_then(|&p| self.table().name(p)).unwrap_or_default().to_string())
                }
                other => return Err(Error::Eval(format!("name() expects a node-set, got {}", type_name(&other)))),
            },
        })
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Nodes(_) => "node-set",
        Value::Number(_) => "number",
        Value::Str(_) => "string",
        Value::Bool(_) => "boolean",
    }
}

/// Restores document order and removes duplicates, skipping the sort when
/// the sequence is already strictly ascending.
pub(crate) fn normalize(v: &mut Vec<usize>) {
    if v.windows(2).all(|w| w[0] < w[1]) {
        return;
    }
    v.sort_unstable();
    v.dedup();
}

pub fn boolean(v: &Value) -> bool {
    match v {
        Value::Nodes(n) => !n.is_empty(),
        Value::Number(n) => *n != 0.0 && !n.is_nan(),
        Value::Str(s) => !s.is_empty(),
        Value::Bool(b) => *b,
    }
}

fn number_of(v: &Value) -> f64 {
    match v {
        Value::Number(n) => *n,
        Value::Str(s) => parse_number(s),
        Value::Bool(b) => f64::from(u8::from(*b)),
        Value::Nodes(_) => unreachable!("node-sets are atomized by the caller"),
    }
}

fn cmp_numbers(op: CmpOp, a: f64, b: f64) -> bool {
    // every comparison involving NaN is false except !=
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

/// Comparison of two atomic values.
fn cmp_atomic(op: CmpOp, a: &Value, b: &Value) -> bool {
    match op {
        CmpOp::Eq | CmpOp::Ne => {
            let eq = match (a, b) {
                (Value::Bool(_), _) | (_, Value::Bool(_)) => boolean(a) == boolean(b),
                (Value::Number(_), _) | (_, Value::Number(_)) => number_of(a) == number_of(b),
                (Value::Str(x), Value::Str(y)) => x == y,
                _ => unreachable!(),
            };
            if op == CmpOp::Eq {
                eq
            } else {
                // != on numbers must also be true for NaN operands
                match (a, b) {
                    (Value::Bool(_), _) | (_, Value::Bool(_)) => !eq,
                    (Value::Number(_), _) | (_, Value::Number(_)) => cmp_numbers(op, number_of(a), number_of(b)),
                    _ => !eq,
                }
            }
        }
        _ => cmp_numbers(op, number_of(a), number_of(b)),
    }
}

/// XPath 1.0 general comparison with existential semantics over node-sets.
pub fn compare(table: &NodeTable, op: CmpOp, a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Nodes(x), Value::Nodes(y)) => {
            let ys: Vec<Value> = y.iter().map(|&p| Value::Str(table.string_value(p))).collect();
            x.iter().any(|&p| {
                let xv = Value::Str(table.string_value(p));
                ys.iter().any(|yv| match op {
                    CmpOp::Eq | CmpOp::Ne => cmp_atomic(op, &xv, yv),
                    _ => cmp_numbers(op, number_of(&xv), number_of(yv)),
                })
            })
        }
        (Value::Nodes(x), Value::Bool(_)) => cmp_atomic(op, &Value::Bool(!x.is_empty()), b),
        (Value::Bool(_), Value::Nodes(y)) => cmp_atomic(op, a, &Value::Bool(!y.is_empty())),
        (Value::Nodes(x), other) => x.iter().any(|&p| atomic_vs(table, op, p, other)),
        (other, Value::Nodes(y)) => y.iter().any(|&p| atomic_vs(table, op.flip(), p, other)),
        _ => cmp_atomic(op, a, b),
    }
}

/// Compares the string value of node `p` (left operand) with an atomic value.
fn atomic_vs(table: &NodeTable, op: CmpOp, p: usize, other: &Value) -> bool {
    let s = table.string_value(p);
    match other {
        Value::Number(n) => cmp_numbers(op, parse_number(&s), *n),
        Value::Str(_) => cmp_atomic(op, &Value::Str(s), other),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xpath::parse_xpath;

    fn db(xml: &str) -> Database {
        Database::parse(xml.as_bytes(), "t").unwrap()
    }

    fn q(db: &Database, query: &str) -> Vec<usize> {
        evaluate(&parse_xpath(query).unwrap(), db, &[0]).unwrap()
    }

    fn names(db: &Database, pres: &[usize]) -> Vec<String> {
        pres.iter().map(|&p| db.table.serialize(p)).collect()
    }

    #[test]
    fn root_query() {
        let d = db("<a/>");
        assert_eq!(q(&d, "/"), vec![0]);
    }

    #[test]
    fn following_sibling_count_predicate() {
        let d = db("<dblp><book><author/><author/></book><book><author/></book></dblp>");
        let hits = q(&d, "/dblp/book[count(./following-sibling::book[1]/author) < count(./author)]");
        // the last book has no following sibling: 0 < 1 selects it as well
        assert_eq!(hits, vec![2, 5]);
        let d = db("<dblp><book><author/><author/></book><book><author/></book><book><author/><author/></book></dblp>");
        let hits = q(&d, "/dblp/book[count(./following-sibling::book[1]/author) < count(./author)]");
        assert_eq!(hits, vec![2, 7]);
    }

    #[test]
    fn last_is_per_context_node() {
        let d = db("<s><o><b>1</b><b>2</b></o><o><b>3</b></o><o/></s>");
        let hits = q(&d, "/s/o/b[last()]");
        assert_eq!(names(&d, &hits), vec!["<b>2</b>", "<b>3</b>"]);
        let hits = q(&d, "/s/o/b[1]");
        assert_eq!(names(&d, &hits), vec!["<b>1</b>", "<b>3</b>"]);
        // `//b[1]` keeps per-parent positions
        assert_eq!(q(&d, "//b[1]"), hits);
        assert_eq!(names(&d, &q(&d, "/descendant::b[1]")), vec!["<b>1</b>"]);
    }

    #[test]
    fn reverse_axis_positions_count_from_the_context() {
        let d = db("<a><b><c><d/></c></b></a>");
        assert_eq!(names(&d, &q(&d, "//d/ancestor::*[1]")), vec!["<c><d/></c>"]);
        assert_eq!(q(&d, "//d/ancestor::*[last()]"), vec![1]);
        assert_eq!(q(&d, "//d/ancestor::*"), vec![1, 2, 3]);
    }

    #[test]
    fn general_comparisons() {
        let d = db("<r><i><q>0</q><p>Creditcard</p></i><i><q>2</q><p>Cash</p></i><i><q>x</q></i></r>");
        assert_eq!(q(&d, "/r/i[./q > 0]").len(), 1);
        assert_eq!(q(&d, "/r/i[0.0 < q]"), q(&d, "/r/i[./q > 0]"));
        assert_eq!(q(&d, "/r/i[./p = \"Creditcard\"]").len(), 1);
        assert_eq!(q(&d, "/r/i[./p != \"Creditcard\"]").len(), 1);
        assert_eq!(q(&d, "/r/i[q = 2]").len(), 1);
        // NaN compares false, except for !=
        assert_eq!(q(&d, "/r/i[q >= 0]").len(), 2);
        assert_eq!(q(&d, "/r/i[q != 5]").len(), 3);
        assert_eq!(q(&d, "/r/i[./p and ./q]").len(), 2);
        assert_eq!(q(&d, "/r/i[q = p]").len(), 0);
    }

    #[test]
    fn name_and_attributes() {
        let d = db(r#"<site><africa><item id="i1"><incategory category="c52"/></item></africa><asia><item id="i2"/></asia><europe><item id="i3"/></europe></site>"#);
        let hits = q(&d, r#"/site/*[name(.)="africa" or name(.)="asia"]/item/@id"#);
        assert_eq!(names(&d, &hits), vec!["id=\"i1\"", "id=\"i2\""]);
        let hits = q(&d, r#"/site//incategory[./@category="c52"]/parent::item/@id"#);
        assert_eq!(names(&d, &hits), vec!["id=\"i1\""]);
        let hits = q(&d, r#"db:attribute("t", "c52")/parent::incategory/parent::item/@id"#);
        assert_eq!(names(&d, &hits), vec!["id=\"i1\""]);
        assert!(q(&d, r#"db:attribute("t", "c52", "other")"#).is_empty());
    }

    #[test]
    fn type_errors() {
        let d = db("<a/>");
        let err = evaluate(&parse_xpath("/a[count(1) = 0]").unwrap(), &d, &[0]).unwrap_err();
        assert!(matches!(err, Error::Eval(_)));
    }

    #[test]
    fn relative_paths_use_the_context() {
        let d = db("<a><b><c/></b><b/></a>");
        let c = parse_xpath("c").unwrap();
        assert_eq!(evaluate(&c, &d, &[2, 4]).unwrap(), vec![3]);
        assert!(evaluate(&c, &d, &[]).unwrap().is_empty());
        assert!(matches!(evaluate(&c, &d, &[99]), Err(Error::Range { .. })));
    }

    #[test]
    fn atomization() {
        let d = db("<e><a>4</a><b>2</b></e>");
        assert_eq!(string_value(&d.table, 1), "42");
        assert_eq!(number_value(&d.table, 1), 42.0);
        let t = db("<q>0</q>");
        assert!(q(&t, "/q[. > 0]").is_empty());
        assert_eq!(q(&t, "/q[. >= 0]"), vec![1]);
    }
}
