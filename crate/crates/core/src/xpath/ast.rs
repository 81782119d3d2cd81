//! Query AST and its canonical (abbreviated) text form.

use std::fmt;

use crate::store::IndexKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Child,
    Descendant,
    DescendantOrSelf,
    SelfAxis,
    Parent,
    Ancestor,
    FollowingSibling,
    Attribute,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Child => "child",
            Axis::Descendant => "descendant",
            Axis::DescendantOrSelf => "descendant-or-self",
            Axis::SelfAxis => "self",
            Axis::Parent => "parent",
            Axis::Ancestor => "ancestor",
            Axis::FollowingSibling => "following-sibling",
            Axis::Attribute => "attribute",
        }
    }

    pub fn from_name(name: &str) -> Option<Axis> {
        Some(match name {
            "child" => Axis::Child,
            "descendant" => Axis::Descendant,
            "descendant-or-self" => Axis::DescendantOrSelf,
            "self" => Axis::SelfAxis,
            "parent" => Axis::Parent,
            "ancestor" => Axis::Ancestor,
            "following-sibling" => Axis::FollowingSibling,
            "attribute" => Axis::Attribute,
            _ => return None,
        })
    }

    /// Reverse axes number positions in reverse document order.
    pub fn is_reverse(self) -> bool {
        matches!(self, Axis::Parent | Axis::Ancestor)
    }

    /// Axes whose results stay inside the context node's subtree.
    pub fn is_downward(self) -> bool {
        matches!(
            self,
            Axis::Child | Axis::Descendant | Axis::DescendantOrSelf | Axis::SelfAxis | Axis::Attribute
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindTest {
    Element,
    Attribute,
    Text,
    Node,
    Document,
}

impl KindTest {
    pub fn syntax(self) -> &'static str {
        match self {
            KindTest::Element => "element()",
            KindTest::Attribute => "attribute()",
            KindTest::Text => "text()",
            KindTest::Node => "node()",
            KindTest::Document => "document-node()",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeTest {
    Name(String),
    Wildcard,
    Kind(KindTest),
}

impl NodeTest {
    /// True if the test can only match elements (on a non-attribute axis).
    pub fn is_element_only(&self) -> bool {
        matches!(self, NodeTest::Name(_) | NodeTest::Wildcard | NodeTest::Kind(KindTest::Element))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub axis: Axis,
    pub test: NodeTest,
    pub predicates: Vec<Expr>,
}

impl Step {
    pub fn new(axis: Axis, test: NodeTest) -> Self {
        Step { axis, test, predicates: Vec::new() }
    }

    pub fn named(axis: Axis, name: &str) -> Self {
        Step::new(axis, NodeTest::Name(name.to_string()))
    }

    pub fn with_predicates(mut self, predicates: Vec<Expr>) -> Self {
        self.predicates = predicates;
        self
    }

    /// True if some predicate depends on the position of the node within
    /// its axis result, so the step cannot be regrouped or reordered.
    pub fn is_positional(&self) -> bool {
        self.predicates.iter().any(Expr::is_positional)
    }
}

/// Node-set produced by a value index lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexAccess {
    pub kind: IndexKind,
    pub db: String,
    pub value: String,
    /// Restricts attribute lookups to attributes of this name.
    pub name: Option<String>,
}

/// Where a path starts evaluating.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    /// Leading `/`: the document node.
    Root,
    /// Relative path: the context nodes.
    Context,
    Index(IndexAccess),
}

/// A location path. Queries, prefix/suffix halves and paths nested in
/// predicates all share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub origin: Origin,
    pub steps: Vec<Step>,
}

impl QueryAst {
    pub fn absolute(steps: Vec<Step>) -> Self {
        QueryAst { origin: Origin::Root, steps }
    }

    pub fn relative(steps: Vec<Step>) -> Self {
        QueryAst { origin: Origin::Context, steps }
    }

    /// True if evaluation does not depend on the context.
    pub fn is_absolute(&self) -> bool {
        !matches!(self.origin, Origin::Context)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator with its operands exchanged: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Function {
    /// `name()` of the argument's first node, or of the context node.
    Name(Option<Box<Expr>>),
    Count(Box<Expr>),
    Last,
    Position,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Vec<Expr>),
    And(Vec<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    Path(QueryAst),
    Number(f64),
    Literal(String),
    Call(Function),
}

impl Expr {
    pub fn compare(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Compare(op, Box::new(lhs), Box::new(rhs))
    }

    /// Conservative test for predicates whose truth depends on the
    /// context position or size. Paths nested in the expression start a new
    /// focus and are not inspected.
    pub fn is_positional(&self) -> bool {
        match self {
            // numeric predicates mean position() = n
            Expr::Number(_) => true,
            Expr::Call(Function::Count(_)) => true,
            _ => self.uses_focus(),
        }
    }

    fn uses_focus(&self) -> bool {
        match self {
            Expr::Or(v) | Expr::And(v) => v.iter().any(Expr::uses_focus),
            Expr::Compare(_, a, b) => a.uses_focus() || b.uses_focus(),
            Expr::Call(Function::Last | Function::Position) => true,
            Expr::Call(Function::Name(Some(e))) | Expr::Call(Function::Count(e)) => e.uses_focus(),
            Expr::Call(Function::Name(None)) | Expr::Path(_) | Expr::Number(_) | Expr::Literal(_) => false,
        }
    }

    /// Top-level conjuncts of the expression.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::And(v) => v.iter().flat_map(Expr::conjuncts).collect(),
            other => vec![other],
        }
    }
}

// ---------------------------------------------------------------------------
// Display: canonical text with XPath abbreviations. The output re-parses to
// an equal AST.

/// Whether the parser fuses `//` with this step into a single step.
pub(crate) fn fuses_after_double_slash(step: &Step) -> bool {
    !step.is_positional()
        && matches!(step.axis, Axis::Child | Axis::SelfAxis | Axis::Descendant | Axis::DescendantOrSelf)
}

fn is_dos_node(step: &Step) -> bool {
    step.axis == Axis::DescendantOrSelf && step.test == NodeTest::Kind(KindTest::Node) && step.predicates.is_empty()
}

impl fmt::Display for NodeTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeTest::Name(n) => f.write_str(n),
            NodeTest::Wildcard => f.write_str("*"),
            NodeTest::Kind(k) => f.write_str(k.syntax()),
        }
    }
}

fn write_predicates(f: &mut fmt::Formatter<'_>, preds: &[Expr]) -> fmt::Result {
    for p in preds {
        write!(f, "[{p}]")?;
    }
    Ok(())
}

/// Abbreviated form of a step as it appears after `/` (or at the start of a
/// relative path).
fn write_step(f: &mut fmt::Formatter<'_>, step: &Step) -> fmt::Result {
    match step.axis {
        Axis::SelfAxis if step.test == NodeTest::Kind(KindTest::Node) && step.predicates.is_empty() => {
            return f.write_str(".")
        }
        Axis::Parent if step.test == NodeTest::Kind(KindTest::Node) && step.predicates.is_empty() => {
            return f.write_str("..")
        }
        Axis::Child if !matches!(step.test, NodeTest::Kind(KindTest::Attribute)) => write!(f, "{}", step.test)?,
        Axis::Attribute if !matches!(step.test, NodeTest::Kind(_)) => write!(f, "@{}", step.test)?,
        _ => write!(f, "{}::{}", step.axis.name(), step.test)?,
    }
    write_predicates(f, &step.predicates)
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let relative = match &self.origin {
            Origin::Root if self.steps.is_empty() => return f.write_str("/"),
            Origin::Root => false,
            Origin::Context => true,
            Origin::Index(ix) => {
                write!(f, "{}({}, {}", ix.kind.function_name(), Quoted(&ix.db), Quoted(&ix.value))?;
                if let Some(name) = &ix.name {
                    write!(f, ", {}", Quoted(name))?;
                }
                f.write_str(")")?;
                false
            }
        };
        let mut i = 0;
        while i < self.steps.len() {
            let step = &self.steps[i];
            // a relative path cannot begin with `//`
            let may_abbreviate = !(relative && i == 0);
            if !may_abbreviate {
                write_step(f, step)?;
            } else if step.axis == Axis::Descendant && !step.is_positional() {
                f.write_str("//")?;
                write_step(f, &Step { axis: Axis::Child, ..step.clone() })?;
            } else if is_dos_node(step) && i + 1 < self.steps.len() && !fuses_after_double_slash(&self.steps[i + 1]) {
                f.write_str("//")?;
                write_step(f, &self.steps[i + 1])?;
                i += 1;
            } else {
                f.write_str("/")?;
                write_step(f, step)?;
            }
            i += 1;
        }
        Ok(())
    }
}

struct Quoted<'a>(&'a str);

impl fmt::Display for Quoted<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.contains('"') {
            write!(f, "'{}'", self.0)
        } else {
            write!(f, "\"{}\"", self.0)
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, n: f64) -> fmt::Result {
    write!(f, "{n}")
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(_) => 1,
            Expr::And(_) => 2,
            Expr::Compare(..) => 3,
            _ => 4,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Or(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" or ")?;
                    }
                    e.write_operand(f, 2)?;
                }
                Ok(())
            }
            Expr::And(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    e.write_operand(f, 3)?;
                }
                Ok(())
            }
            Expr::Compare(op, a, b) => {
                a.write_operand(f, 4)?;
                write!(f, " {} ", op.symbol())?;
                b.write_operand(f, 4)
            }
            Expr::Path(p) => write!(f, "{p}"),
            Expr::Number(n) => write_number(f, *n),
            Expr::Literal(s) => write!(f, "{}", Quoted(s)),
            Expr::Call(Function::Name(None)) => f.write_str("name()"),
            Expr::Call(Function::Name(Some(e))) => write!(f, "name({e})"),
            Expr::Call(Function::Count(e)) => write!(f, "count({e})"),
            Expr::Call(Function::Last) => f.write_str("last()"),
            Expr::Call(Function::Position) => f.write_str("position()"),
        }
    }
}
