//! Test support: an independent pointer-based DOM with a naive XPath
//! evaluator, random document/query generators, and fixed fixtures.
#![allow(dead_code)]

use parxpath::store::TableBuilder;
use parxpath::xpath::{Axis, CmpOp, Expr, Function, KindTest, NodeTest, Origin, QueryAst, Step};
use parxpath::{Database, NodeTable};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Document,
    Element,
    Attribute,
    Text,
}

#[derive(Debug, Clone)]
pub struct DNode {
    pub kind: Kind,
    pub name: String,
    pub value: String,
    pub parent: Option<usize>,
    pub attrs: Vec<usize>,
    pub children: Vec<usize>,
}

/// Nodes are stored in creation order; `order` gives document order
/// (document, element, its attributes, its content...).
#[derive(Debug, Clone)]
pub struct Dom {
    pub nodes: Vec<DNode>,
}

impl Dom {
    pub fn new() -> Self {
        Dom {
            nodes: vec![DNode {
                kind: Kind::Document,
                name: String::new(),
                value: String::new(),
                parent: None,
                attrs: vec![],
                children: vec![],
            }],
        }
    }

    fn push(&mut self, parent: usize, kind: Kind, name: &str, value: &str) -> usize {
        let id = self.nodes.len();
        self.nodes.push(DNode {
            kind,
            name: name.into(),
            value: value.into(),
            parent: Some(parent),
            attrs: vec![],
            children: vec![],
        });
        if kind == Kind::Attribute {
            self.nodes[parent].attrs.push(id);
        } else {
            self.nodes[parent].children.push(id);
        }
        id
    }

    pub fn element(&mut self, parent: usize, name: &str) -> usize {
        self.push(parent, Kind::Element, name, "")
    }

    pub fn attribute(&mut self, owner: usize, name: &str, value: &str) -> usize {
        self.push(owner, Kind::Attribute, name, value)
    }

    pub fn text(&mut self, parent: usize, value: &str) -> usize {
        self.push(parent, Kind::Text, "", value)
    }

    /// Document order of node ids; the position in this list is the PRE.
    pub fn order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            out.extend(self.nodes[n].attrs.iter().copied());
            stack.extend(self.nodes[n].children.iter().rev().copied());
        }
        out
    }

    pub fn pre_of(&self) -> Vec<usize> {
        let mut pre = vec![0; self.nodes.len()];
        for (i, n) in self.order().into_iter().enumerate() {
            pre[n] = i;
        }
        pre
    }

    pub fn to_xml(&self) -> String {
        fn esc(s: &str, out: &mut String) {
            for c in s.chars() {
                match c {
                    '<' => out.push_str("&lt;"),
                    '&' => out.push_str("&amp;"),
                    '"' => out.push_str("&quot;"),
                    c => out.push(c),
                }
            }
        }
        fn go(d: &Dom, n: usize, out: &mut String) {
            let node = &d.nodes[n];
            match node.kind {
                Kind::Document => node.children.iter().for_each(|&c| go(d, c, out)),
                Kind::Text => esc(&node.value, out),
                Kind::Attribute => unreachable!(),
                Kind::Element => {
                    out.push('<');
                    out.push_str(&node.name);
                    for &a in &node.attrs {
                        out.push(' ');
                        out.push_str(&d.nodes[a].name);
                        out.push_str("=\"");
                        esc(&d.nodes[a].value, out);
                        out.push('"');
                    }
                    out.push('>');
                    node.children.iter().for_each(|&c| go(d, c, out));
                    out.push_str("</");
                    out.push_str(&node.name);
                    out.push('>');
                }
            }
        }
        let mut s = String::new();
        go(self, 0, &mut s);
        s
    }

    pub fn database(&self, name: &str) -> Database {
        Database::parse(self.to_xml().as_bytes(), name).expect("generated XML parses")
    }

    pub fn string_value(&self, n: usize) -> String {
        let node = &self.nodes[n];
        match node.kind {
            Kind::Text | Kind::Attribute => node.value.clone(),
            _ => {
                let mut s = String::new();
                let mut stack = vec![n];
                while let Some(m) = stack.pop() {
                    if self.nodes[m].kind == Kind::Text {
                        s.push_str(&self.nodes[m].value);
                    }
                    stack.extend(self.nodes[m].children.iter().rev().copied());
                }
                s
            }
        }
    }
}

// ---------------------------------------------------------------------------
// random documents

pub const LABELS: [&str; 4] = ["a", "b", "c", "d"];
pub const ATTRS: [&str; 2] = ["x", "y"];
pub const VALUES: [&str; 6] = ["1", "2", "v", "10", " 3 ", "-1.5"];

/// Random document with at most `max_nodes` nodes (document node included).
/// No whitespace-only text, never two adjacent text nodes.
pub fn random_dom<R: Rng>(rng: &mut R, max_nodes: usize) -> Dom {
    let mut d = Dom::new();
    let root = d.element(0, LABELS.choose(rng).unwrap());
    let mut open = vec![root];
    let target = rng.gen_range(2..=max_nodes.max(2));
    while d.nodes.len() < target && !open.is_empty() {
        let i = rng.gen_range(0..open.len());
        let parent = open[i];
        match rng.gen_range(0..10) {
            0..=5 => {
                let e = d.element(parent, LABELS.choose(rng).unwrap());
                for a in ATTRS {
                    if d.nodes.len() < target && rng.gen_bool(0.3) {
                        d.attribute(e, a, VALUES.choose(rng).unwrap());
                    }
                }
                open.push(e);
            }
            6..=8 => {
                let last_is_text = d.nodes[parent].children.last().is_some_and(|&c| d.nodes[c].kind == Kind::Text);
                if !last_is_text {
                    d.text(parent, VALUES.choose(rng).unwrap());
                }
            }
            _ => {
                if open.len() > 1 {
                    open.swap_remove(i);
                }
            }
        }
    }
    d
}

// ---------------------------------------------------------------------------
// random queries

fn random_test<R: Rng>(rng: &mut R, axis: Axis) -> String {
    if axis == Axis::Attribute {
        return match rng.gen_range(0..4) {
            0 => "*".into(),
            1 => "node()".into(),
            _ => ATTRS.choose(rng).unwrap().to_string(),
        };
    }
    match rng.gen_range(0..16) {
        0 | 1 => "*".into(),
        2 | 3 => "node()".into(),
        4 => "text()".into(),
        5 => "element()".into(),
        6 => "document-node()".into(),
        7 => "zz".into(),
        _ => LABELS.choose(rng).unwrap().to_string(),
    }
}

fn literal<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.5) {
        format!("\"{}\"", VALUES.choose(rng).unwrap())
    } else {
        ["1", "2", "0", "10", "-1.5", "3"].choose(rng).unwrap().to_string()
    }
}

fn short_path<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..9) {
        0 => format!("@{}", ATTRS.choose(rng).unwrap()),
        1 => ".".into(),
        2 => "..".into(),
        3 => format!("./{}", LABELS.choose(rng).unwrap()),
        4 => "text()".into(),
        5 => format!("following-sibling::{}[1]", LABELS.choose(rng).unwrap()),
        6 => format!("ancestor::{}", LABELS.choose(rng).unwrap()),
        7 => format!("/{}", LABELS.choose(rng).unwrap()),
        _ => LABELS.choose(rng).unwrap().to_string(),
    }
}

fn random_predicate<R: Rng>(rng: &mut R, depth: usize) -> String {
    let ops = ["=", "!=", "<", "<=", ">", ">="];
    match rng.gen_range(0..13) {
        0 => rng.gen_range(1..4).to_string(),
        1 => "last()".into(),
        2 => format!("position() {} {}", ops.choose(rng).unwrap(), rng.gen_range(1..4)),
        3 => short_path(rng),
        4 | 5 => format!("{} {} {}", short_path(rng), ops.choose(rng).unwrap(), literal(rng)),
        6 => format!("count({}) {} {}", short_path(rng), ops.choose(rng).unwrap(), rng.gen_range(0..3)),
        7 => format!("name(.) = \"{}\"", LABELS.choose(rng).unwrap()),
        8 => format!("{} = {}", short_path(rng), short_path(rng)),
        9 if depth < 2 => format!("{} and {}", random_predicate(rng, depth + 1), random_predicate(rng, depth + 1)),
        10 if depth < 2 => format!("({}) or {}", random_predicate(rng, depth + 1), random_predicate(rng, depth + 1)),
        11 => format!("name() != \"{}\"", LABELS.choose(rng).unwrap()),
        _ => format!("{} {} {}", literal(rng), ops.choose(rng).unwrap(), short_path(rng)),
    }
}

/// Random absolute query with 1..=max_steps steps over the generator's
/// vocabulary.
pub fn random_query<R: Rng>(rng: &mut R, max_steps: usize) -> String {
    let axes = [
        Axis::Child,
        Axis::Child,
        Axis::Child,
        Axis::Descendant,
        Axis::DescendantOrSelf,
        Axis::SelfAxis,
        Axis::Parent,
        Axis::Ancestor,
        Axis::FollowingSibling,
        Axis::Attribute,
    ];
    let n = rng.gen_range(1..=max_steps);
    let mut q = String::new();
    for i in 0..n {
        let axis = if i == 0 && rng.gen_bool(0.7) { Axis::Child } else { *axes.choose(rng).unwrap() };
        let abbreviated = rng.gen_bool(if i == 0 { 0.8 } else { 0.3 });
        if abbreviated && axis == Axis::Child {
            q.push_str("//");
        } else {
            q.push('/');
        }
        let test = random_test(rng, axis);
        match axis {
            Axis::Child if rng.gen_bool(0.5) => q.push_str(&test),
            Axis::Attribute if rng.gen_bool(0.5) && test != "node()" => {
                q.push('@');
                q.push_str(&test);
            }
            _ => {
                q.push_str(axis.name());
                q.push_str("::");
                q.push_str(&test);
            }
        }
        let preds = if rng.gen_bool(0.7) { rng.gen_range(0..=1) } else { rng.gen_range(0..=2) };
        for _ in 0..preds {
            q.push('[');
            q.push_str(&random_predicate(rng, 0));
            q.push(']');
        }
    }
    q
}

// ---------------------------------------------------------------------------
// naive evaluator over the DOM

#[derive(Debug, Clone)]
enum V {
    Nodes(Vec<usize>),
    Num(f64),
    Str(String),
    Bool(bool),
}

pub struct Naive<'a> {
    pub dom: &'a Dom,
    pre: Vec<usize>,
}

fn xpath_number(s: &str) -> f64 {
    let t = s.trim_matches(|c: char| c == ' ' || c == '\t' || c == '\n' || c == '\r');
    let body = t.strip_prefix('-').unwrap_or(t);
    let ok = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.chars().filter(|&c| c == '.').count() <= 1
        && body.chars().any(|c| c.is_ascii_digit());
    if !ok {
        return f64::NAN;
    }
    t.parse().unwrap_or(f64::NAN)
}

impl<'a> Naive<'a> {
    pub fn new(dom: &'a Dom) -> Self {
        Naive { dom, pre: dom.pre_of() }
    }

    fn principal(axis: Axis) -> Kind {
        if axis == Axis::Attribute {
            Kind::Attribute
        } else {
            Kind::Element
        }
    }

    fn test(&self, axis: Axis, test: &NodeTest, n: usize) -> bool {
        let node = &self.dom.nodes[n];
        match test {
            NodeTest::Name(name) => node.kind == Self::principal(axis) && &node.name == name,
            NodeTest::Wildcard => node.kind == Self::principal(axis),
            NodeTest::Kind(KindTest::Node) => true,
            NodeTest::Kind(KindTest::Element) => node.kind == Kind::Element,
            NodeTest::Kind(KindTest::Attribute) => node.kind == Kind::Attribute,
            NodeTest::Kind(KindTest::Text) => node.kind == Kind::Text,
            NodeTest::Kind(KindTest::Document) => node.kind == Kind::Document,
        }
    }

    fn descendants(&self, n: usize, out: &mut Vec<usize>) {
        for &c in &self.dom.nodes[n].children {
            out.push(c);
            self.descendants(c, out);
        }
    }

    /// Axis in axis order (reverse axes nearest first).
    fn axis(&self, n: usize, axis: Axis) -> Vec<usize> {
        let node = &self.dom.nodes[n];
        let mut out = Vec::new();
        match axis {
            Axis::SelfAxis => out.push(n),
            Axis::Child => out.extend(node.children.iter().copied()),
            Axis::Descendant => self.descendants(n, &mut out),
            Axis::DescendantOrSelf => {
                out.push(n);
                self.descendants(n, &mut out);
            }
            Axis::Attribute => out.extend(node.attrs.iter().copied()),
            Axis::Parent => out.extend(node.parent),
            Axis::Ancestor => {
                let mut cur = node.parent;
                while let Some(p) = cur {
                    out.push(p);
                    cur = self.dom.nodes[p].parent;
                }
            }
            Axis::FollowingSibling => {
                if node.kind != Kind::Attribute {
                    if let Some(p) = node.parent {
                        let sib = &self.dom.nodes[p].children;
                        let i = sib.iter().position(|&s| s == n).unwrap();
                        out.extend(sib[i + 1..].iter().copied());
                    }
                }
            }
        }
        out
    }

    fn sort(&self, v: &mut Vec<usize>) {
        v.sort_by_key(|&n| self.pre[n]);
        v.dedup();
    }

    pub fn path(&self, q: &QueryAst, context: &[usize]) -> Vec<usize> {
        let mut cur: Vec<usize> = match &q.origin {
            Origin::Root => vec![0],
            Origin::Context => context.to_vec(),
            Origin::Index(_) => panic!("the naive evaluator has no index heads"),
        };
        for step in &q.steps {
            let mut next = Vec::new();
            for &c in &cur {
                let mut local: Vec<usize> = self.axis(c, step.axis).into_iter().filter(|&n| self.test(step.axis, &step.test, n)).collect();
                for p in &step.predicates {
                    let size = local.len();
                    local = local
                        .iter()
                        .enumerate()
                        .filter(|&(i, &n)| match self.expr(p, n, i + 1, size) {
                            V::Num(x) => x == (i + 1) as f64,
                            v => self.truth(&v),
                        })
                        .map(|(_, &n)| n)
                        .collect();
                }
                next.extend(local);
            }
            self.sort(&mut next);
            cur = next;
        }
        cur
    }

    /// Result as PRE values.
    pub fn eval(&self, q: &QueryAst) -> Vec<usize> {
        self.path(q, &[]).into_iter().map(|n| self.pre[n]).collect()
    }

    pub fn eval_from(&self, q: &QueryAst, context_pres: &[usize]) -> Vec<usize> {
        let order = self.dom.order();
        let ctx: Vec<usize> = context_pres.iter().map(|&p| order[p]).collect();
        self.path(q, &ctx).into_iter().map(|n| self.pre[n]).collect()
    }

    fn truth(&self, v: &V) -> bool {
        match v {
            V::Nodes(n) => !n.is_empty(),
            V::Num(x) => *x != 0.0 && !x.is_nan(),
            V::Str(s) => !s.is_empty(),
            V::Bool(b) => *b,
        }
    }

    fn num(&self, v: &V) -> f64 {
        match v {
            V::Nodes(n) => n.first().map_or(f64::NAN, |&x| xpath_number(&self.dom.string_value(x))),
            V::Num(x) => *x,
            V::Str(s) => xpath_number(s),
            V::Bool(b) => f64::from(u8::from(*b)),
        }
    }

    fn string(&self, v: &V) -> String {
        match v {
            V::Nodes(n) => n.first().map_or(String::new(), |&x| self.dom.string_value(x)),
            V::Str(s) => s.clone(),
            V::Bool(b) => b.to_string(),
            V::Num(x) => {
                if x.is_nan() {
                    "NaN".into()
                } else if x.fract() == 0.0 && x.abs() < 1e15 {
                    format!("{}", *x as i64)
                } else {
                    format!("{x}")
                }
            }
        }
    }

    fn cmp_num(op: CmpOp, a: f64, b: f64) -> bool {
        match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    fn cmp_atoms(&self, op: CmpOp, a: &V, b: &V) -> bool {
        match op {
            CmpOp::Eq | CmpOp::Ne => {
                let eq = if matches!(a, V::Bool(_)) || matches!(b, V::Bool(_)) {
                    self.truth(a) == self.truth(b)
                } else if matches!(a, V::Num(_)) || matches!(b, V::Num(_)) {
                    let (x, y) = (self.num(a), self.num(b));
                    return if op == CmpOp::Eq { x == y } else { x != y };
                } else {
                    self.string(a) == self.string(b)
                };
                if op == CmpOp::Eq {
                    eq
                } else {
                    !eq
                }
            }
            _ => Self::cmp_num(op, self.num(a), self.num(b)),
        }
    }

    fn compare(&self, op: CmpOp, a: &V, b: &V) -> bool {
        let atoms = |ns: &Vec<usize>| -> Vec<V> { ns.iter().map(|&n| V::Str(self.dom.string_value(n))).collect() };
        match (a, b) {
            (V::Nodes(x), V::Nodes(y)) => {
                let (xs, ys) = (atoms(x), atoms(y));
                xs.iter().any(|p| ys.iter().any(|q| self.cmp_atoms(op, p, q)))
            }
            (V::Nodes(x), V::Bool(_)) => self.cmp_atoms(op, &V::Bool(!x.is_empty()), b),
            (V::Bool(_), V::Nodes(y)) => self.cmp_atoms(op, a, &V::Bool(!y.is_empty())),
            (V::Nodes(x), other) => atoms(x).iter().any(|p| {
                let p = if matches!(other, V::Num(_)) { V::Num(self.num(p)) } else { p.clone() };
                self.cmp_atoms(op, &p, other)
            }),
            (other, V::Nodes(y)) => atoms(y).iter().any(|q| {
                let q = if matches!(other, V::Num(_)) { V::Num(self.num(q)) } else { q.clone() };
                self.cmp_atoms(op, other, &q)
            }),
            _ => self.cmp_atoms(op, a, b),
        }
    }

    fn expr(&self, e: &Expr, n: usize, pos: usize, size: usize) -> V {
        match e {
            Expr::Or(v) => V::Bool(v.iter().any(|x| self.truth(&self.expr(x, n, pos, size)))),
            Expr::And(v) => V::Bool(v.iter().all(|x| self.truth(&self.expr(x, n, pos, size)))),
            Expr::Compare(op, a, b) => V::Bool(self.compare(*op, &self.expr(a, n, pos, size), &self.expr(b, n, pos, size))),
            Expr::Path(p) => V::Nodes(self.path(p, &[n])),
            Expr::Number(x) => V::Num(*x),
            Expr::Literal(s) => V::Str(s.clone()),
            Expr::Call(Function::Last) => V::Num(size as f64),
            Expr::Call(Function::Position) => V::Num(pos as f64),
            Expr::Call(Function::Count(a)) => match self.expr(a, n, pos, size) {
                V::Nodes(v) => V::Num(v.len() as f64),
                _ => panic!("count of a non-node-set"),
            },
            Expr::Call(Function::Name(None)) => V::Str(self.name(n)),
            Expr::Call(Function::Name(Some(a))) => match self.expr(a, n, pos, size) {
                V::Nodes(v) => V::Str(v.first().map(|&x| self.name(x)).unwrap_or_default()),
                _ => panic!("name of a non-node-set"),
            },
        }
    }

    fn name(&self, n: usize) -> String {
        match self.dom.nodes[n].kind {
            Kind::Element | Kind::Attribute => self.dom.nodes[n].name.clone(),
            _ => String::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// fixtures

/// `<site>` whose `open_auction` elements sit at PRE 2, 5, 42, 81, 109 and
/// 203; the gaps are filled with empty `bidder` elements.
pub fn running_example() -> Database {
    const AT: [usize; 6] = [2, 5, 42, 81, 109, 203];
    let mut b = TableBuilder::new();
    b.start_element("site");
    for (i, &pre) in AT.iter().enumerate() {
        let next = AT.get(i + 1).copied().unwrap_or(pre + 4);
        assert_eq!(b.start_element("open_auction"), pre);
        for _ in pre + 1..next {
            b.start_element("bidder");
            b.end_element();
        }
        b.end_element();
    }
    b.end_element();
    Database::new(b.finish("xmark"))
}

pub fn table_of(xml: &str) -> NodeTable {
    Database::parse(xml.as_bytes(), "t").unwrap().table
}

/// Builds a step from parts, for hand-written ASTs.
pub fn step(axis: Axis, test: NodeTest) -> Step {
    Step::new(axis, test)
}

// ---------------------------------------------------------------------------
// oracle comparison

#[derive(Debug, Default)]
pub struct OracleOutcome {
    pub pairs: usize,
    pub nonempty: usize,
    pub mismatches: Vec<String>,
}

/// Evaluates `docs * queries_per_doc` random pairs (documents of at most
/// `max_nodes` nodes) with the engine and the
/// naive evaluator.
pub fn oracle_compare(seed: u64, docs: usize, queries_per_doc: usize, max_nodes: usize) -> OracleOutcome {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = OracleOutcome::default();
    for _ in 0..docs {
        let dom = random_dom(&mut rng, max_nodes);
        let db = dom.database("t");
        let naive = Naive::new(&dom);
        for _ in 0..queries_per_doc {
            let text = random_query(&mut rng, 4);
            out.pairs += 1;
            let ast = match parxpath::parse_xpath(&text) {
                Ok(a) => a,
                Err(e) => {
                    out.mismatches.push(format!("{text}: parse error {e}"));
                    continue;
                }
            };
            let want = naive.eval(&ast);
            out.nonempty += usize::from(!want.is_empty());
            match parxpath::evaluate(&ast, &db, &[0]) {
                Ok(got) if got == want => {}
                Ok(got) => out.mismatches.push(format!("{text} on {}: engine {got:?}, oracle {want:?}", dom.to_xml())),
                Err(e) => out.mismatches.push(format!("{text}: engine error {e}")),
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// wire helpers

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};

/// A raw protocol session that returns whole responses as text.
pub struct Raw {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    pub id: Option<String>,
}

impl Raw {
    pub fn connect(addr: SocketAddr) -> Raw {
        let s = TcpStream::connect(addr).expect("connect");
        s.set_read_timeout(Some(std::time::Duration::from_secs(30))).unwrap();
        Raw { reader: BufReader::new(s.try_clone().unwrap()), writer: s, id: None }
    }

    pub fn send_bytes(&mut self, bytes: &[u8]) {
        self.writer.write_all(bytes).unwrap();
    }

    /// Reads one response; `None` on EOF.
    pub fn read(&mut self) -> Option<String> {
        let mut head = String::new();
        if self.reader.read_line(&mut head).ok()? == 0 {
            return None;
        }
        let mut out = head.clone();
        if let Some(n) = head.strip_prefix("OK ") {
            let n: usize = n.trim().parse().expect("OK count");
            for _ in 0..n {
                let mut l = String::new();
                assert!(self.reader.read_line(&mut l).unwrap() > 0, "truncated response");
                out.push_str(&l);
            }
        } else {
            assert!(head.starts_with("ERR "), "malformed status line {head:?}");
        }
        Some(out)
    }

    pub fn call(&mut self, line: &str) -> String {
        self.send_bytes(format!("{line}\n").as_bytes());
        let r = self.read().expect("response");
        if line.starts_with("OPEN ") && r.starts_with("OK 1") {
            self.id = r.lines().nth(1).map(str::to_string);
        }
        r
    }
}

fn relative_of(q: &str) -> String {
    match q.strip_prefix("//") {
        Some(rest) => format!("descendant-or-self::node()/{rest}"),
        None => q[1..].to_string(),
    }
}

/// Random request script over databases `d0`, `d1`. `$SELF` stands for
/// the session's own id, substituted at replay time.
pub fn random_script<R: Rng>(rng: &mut R, len: usize) -> Vec<String> {
    let mut out = vec![format!("OPEN d{}", rng.gen_range(0..2))];
    for _ in 0..len {
        let q = random_query(rng, 3);
        let line = match rng.gen_range(0..20) {
            0 => format!("OPEN d{}", rng.gen_range(0..3)),
            1 => format!("OPTIMIZE {}", if rng.gen_bool(0.5) { "on" } else { "off" }),
            2..=5 => format!("XPATH {q}"),
            6 | 7 => format!("PREFIX {q}"),
            8 | 9 => format!("STOREPARTS {} {q}", rng.gen_range(1..5)),
            10..=12 => format!("SUFFIXPART {} {}", rng.gen_range(0..5), relative_of(&q)),
            13 | 14 => {
                let pres: Vec<String> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..70).to_string()).collect();
                format!("SUFFIXPRE {} ; {}", pres.join(" "), relative_of(&q))
            }
            15 => "JOIN $SELF".into(),
            16 => format!("XPATH {}", &q[..q.len() / 2]),
            17 => "BOGUS 1 2".into(),
            18 => format!("SUFFIXPART 1 {q}"),
            _ => format!("XPATH {}", relative_of(&q)),
        };
        out.push(line);
    }
    out.push("QUIT".into());
    out
}

/// Replays a script on a fresh connection; the transcript has the session
/// id replaced by `$SELF`.
pub fn replay(addr: SocketAddr, script: &[String]) -> Vec<String> {
    let mut s = Raw::connect(addr);
    let mut out = Vec::with_capacity(script.len());
    for line in script {
        let line = match &s.id {
            Some(id) => line.replace("$SELF", id),
            None => line.replace("$SELF", "999999"),
        };
        let mut r = s.call(&line);
        let echoes_id = ["OPEN", "STOREPARTS", "JOIN"].iter().any(|c| line.starts_with(c));
        if let (Some(id), true) = (&s.id, echoes_id) {
            let mut lines: Vec<String> = r.lines().map(str::to_string).collect();
            if lines[0].starts_with("ERR ") {
                // the id can only appear in the message, after `ERR CODE`
                let w: Vec<&str> = lines[0].split(' ').collect();
                let msg: Vec<&str> = w[2..].iter().map(|x| if x == id { "$SELF" } else { x }).collect();
                lines[0] = format!("{} {} {}", w[0], w[1], msg.join(" "));
            }
            for l in lines.iter_mut().skip(1) {
                if let Some((first, rest)) = l.split_once(' ') {
                    if first == id {
                        *l = format!("$SELF {rest}");
                    }
                } else if l == id {
                    *l = "$SELF".into();
                }
            }
            r = lines.join("\n");
        }
        out.push(r);
    }
    out
}

/// Two random documents registered as `d0` and `d1`.
pub fn script_registry(seed: u64) -> parxpath::wire::Registry {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut reg = parxpath::wire::Registry::new();
    for i in 0..2 {
        reg.insert(random_dom(&mut rng, 70).database(&format!("d{i}")));
    }
    reg
}
