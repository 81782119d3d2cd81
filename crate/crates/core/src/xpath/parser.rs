//! Recursive-descent parser for the supported XPath subset.

use super::ast::{
    fuses_after_double_slash, Axis, CmpOp, Expr, Function, IndexAccess, KindTest, NodeTest, Origin, QueryAst, Step,
};
use crate::error::{Error, Result};
use crate::store::IndexKind;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Slash,
    DoubleSlash,
    LBracket,
    RBracket,
    LParen,
    RParen,
    At,
    Comma,
    ColonColon,
    Dot,
    DotDot,
    Star,
    Minus,
    Cmp(CmpOp),
    Number(f64),
    Literal(String),
    Name(String),
    /// Lexically valid but outside the subset (`|`, `+`, `$x`, ...).
    Foreign(String),
    Eof,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn scan_name(src: &str, from: usize) -> usize {
    src[from..].find(|c: char| !is_name_char(c)).map_or(src.len(), |off| from + off)
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        let next = bytes.get(i + 1).copied();
        let tok = match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
                continue;
            }
            '/' if next == Some(b'/') => {
                i += 2;
                Tok::DoubleSlash
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '[' => {
                i += 1;
                Tok::LBracket
            }
            ']' => {
                i += 1;
                Tok::RBracket
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '@' => {
                i += 1;
                Tok::At
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            ':' if next == Some(b':') => {
                i += 2;
                Tok::ColonColon
            }
            '=' => {
                i += 1;
                Tok::Cmp(CmpOp::Eq)
            }
            '!' if next == Some(b'=') => {
                i += 2;
                Tok::Cmp(CmpOp::Ne)
            }
            '<' | '>' => {
                let eq = next == Some(b'=');
                i += if eq { 2 } else { 1 };
                Tok::Cmp(match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                })
            }
            '.' if next == Some(b'.') => {
                i += 2;
                Tok::DotDot
            }
            '.' if !next.is_some_and(|b| b.is_ascii_digit()) => {
                i += 1;
                Tok::Dot
            }
            '0'..='9' | '.' => {
                let len = src[i..].find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(src.len() - i);
                let text = &src[i..i + len];
                i += len;
                match text.parse::<f64>() {
                    Ok(n) if text.matches('.').count() <= 1 => Tok::Number(n),
                    _ => return Err(syntax(start, format!("malformed number `{text}`"))),
                }
            }
            '"' | '\'' => {
                let Some(len) = src[i + 1..].find(c) else {
                    return Err(syntax(start, "unterminated string literal"));
                };
                let lit = src[i + 1..i + 1 + len].to_string();
                i += len + 2;
                Tok::Literal(lit)
            }
            c if is_name_start(c) => {
                let mut end = scan_name(src, i);
                // a single colon joins a prefixed name; `::` is the axis separator
                if src[end..].starts_with(':') && !src[end..].starts_with("::") && src[end + 1..].starts_with(is_name_start) {
                    end = scan_name(src, end + 1);
                }
                let name = src[i..end].to_string();
                i = end;
                Tok::Name(name)
            }
            '|' | '+' | '$' | '#' => {
                i += c.len_utf8();
                Tok::Foreign(c.to_string())
            }
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        };
        out.push((tok, start));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax { position, message: message.into() }
}

fn unsupported(position: usize, feature: impl Into<String>) -> Error {
    Error::Unsupported { offset: position, feature: feature.into() }
}

/// Parses a query. The whole input must be a location path (optionally
/// headed by a `db:attribute`/`db:text` index call).
pub fn parse_xpath(text: &str) -> Result<QueryAst> {
    let mut p = Parser { toks: tokenize(text)?, at: 0 };
    let path = p.path()?;
    p.expect_eof()?;
    Ok(path)
}

/// Parses a standalone predicate expression.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser { toks: tokenize(text)?, at: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

const KIND_TESTS: &[(&str, KindTest)] = &[
    ("node", KindTest::Node),
    ("text", KindTest::Text),
    ("element", KindTest::Element),
    ("attribute", KindTest::Attribute),
    ("document-node", KindTest::Document),
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        match self.peek() {
            Tok::Foreign(s) => unsupported(self.pos(), format!("operator `{s}`")),
            Tok::Eof => syntax(self.pos(), format!("expected {what}, found end of input")),
            t => syntax(self.pos(), format!("expected {what}, found {t:?}")),
        }
    }

    fn expect_eof(&self) -> Result<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            Tok::Name(n) if matches!(n.as_str(), "div" | "mod" | "union") => {
                Err(unsupported(self.pos(), format!("operator `{n}`")))
            }
            _ => Err(self.unexpected("end of input")),
        }
    }

    // -- expressions --------------------------------------------------------

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.and_expr()?];
        while matches!(self.peek(), Tok::Name(n) if n == "or") {
            self.bump();
            terms.push(self.and_expr()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Or(terms) })
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.equality()?];
        while matches!(self.peek(), Tok::Name(n) if n == "and") {
            self.bump();
            terms.push(self.equality()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::And(terms) })
    }

    fn equality(&mut self) -> Result<Expr> {
        let mut lhs = self.relational()?;
        while let Tok::Cmp(op @ (CmpOp::Eq | CmpOp::Ne)) = *self.peek() {
            self.bump();
            let rhs = self.relational()?;
            lhs = Expr::compare(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> Result<Expr> {
        let mut lhs = self.primary()?;
        while let Tok::Cmp(op @ (CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge)) = *self.peek() {
            self.bump();
            let rhs = self.primary()?;
            lhs = Expr::compare(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Literal(s) => {
                self.bump();
                Ok(Expr::Literal(s))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Expr::Number(n))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Number(n) => Ok(Expr::Number(-n)),
                    _ => Err(unsupported(pos, "arithmetic")),
                }
            }
            Tok::Name(name) if *self.peek_at(1) == Tok::LParen && !is_kind_test(&name) => {
                if name.starts_with("db:") {
                    return Ok(Expr::Path(self.path()?));
                }
                self.function(name, pos)
            }
            _ => Ok(Expr::Path(self.path()?)),
        }
    }

    fn function(&mut self, name: String, pos: usize) -> Result<Expr> {
        self.bump();
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        let arity = |n: usize, args: &Vec<Expr>| {
            if args.len() == n {
                Ok(())
            } else {
                Err(syntax(pos, format!("{name}() takes {n} argument(s)")))
            }
        };
        let f = match name.as_str() {
            "last" => {
                arity(0, &args)?;
                Function::Last
            }
            "position" => {
                arity(0, &args)?;
                Function::Position
            }
            "count" => {
                arity(1, &args)?;
                Function::Count(Box::new(args.pop().unwrap()))
            }
            "name" | "local-name" if args.len() <= 1 => Function::Name(args.pop().map(Box::new)),
            _ => return Err(unsupported(pos, format!("function `{name}()`"))),
        };
        Ok(Expr::Call(f))
    }

    // -- paths ----------------------------------------------------------------

    fn path(&mut self) -> Result<QueryAst> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Slash => {
                self.bump();
                let mut steps = Vec::new();
                if self.starts_step() {
                    steps.push(self.step()?);
                    self.rest_of_path(&mut steps)?;
                }
                Ok(QueryAst::absolute(steps))
            }
            Tok::DoubleSlash => {
                self.bump();
                let mut steps = Vec::new();
                let first = self.step()?;
                push_after_double_slash(&mut steps, first);
                self.rest_of_path(&mut steps)?;
                Ok(QueryAst::absolute(steps))
            }
            Tok::Name(n) if n.starts_with("db:") && *self.peek_at(1) == Tok::LParen => {
                let access = self.index_call(n, pos)?;
                let mut steps = Vec::new();
                self.rest_of_path(&mut steps)?;
                Ok(QueryAst { origin: Origin::Index(access), steps })
            }
            _ if self.starts_step() => {
                let mut steps = vec![self.step()?];
                self.rest_of_path(&mut steps)?;
                Ok(QueryAst::relative(steps))
            }
            _ => Err(self.unexpected("a location path")),
        }
    }

    fn index_call(&mut self, name: String, pos: usize) -> Result<IndexAccess> {
        let kind = match name.as_str() {
            "db:attribute" => IndexKind::Attribute,
            "db:text" => IndexKind::Text,
            _ => return Err(unsupported(pos, format!("function `{name}()`"))),
        };
        self.bump();
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            match self.bump() {
                Tok::Literal(s) => args.push(s),
                _ => return Err(syntax(pos, format!("{name}() takes string literal arguments"))),
            }
            if self.eat(&Tok::RParen) {
                break;
            }
            self.expect(Tok::Comma, "`,` or `)`")?;
        }
        let valid = match kind {
            IndexKind::Attribute => (2..=3).contains(&args.len()),
            IndexKind::Text => args.len() == 2,
        };
        if !valid {
            return Err(syntax(pos, format!("wrong number of arguments to {name}()")));
        }
        let mut args = args.into_iter();
        let db = args.next().unwrap();
        let value = args.next().unwrap();
        Ok(IndexAccess { kind, db, value, name: args.next() })
    }

    fn rest_of_path(&mut self, steps: &mut Vec<Step>) -> Result<()> {
        loop {
            match self.peek() {
                Tok::Slash => {
                    self.bump();
                    steps.push(self.step()?);
                }
                Tok::DoubleSlash => {
                    self.bump();
                    let s = self.step()?;
                    push_after_double_slash(steps, s);
                }
                _ => return Ok(()),
            }
        }
    }

    fn starts_step(&self) -> bool {
        match self.peek() {
            Tok::Dot | Tok::DotDot | Tok::At | Tok::Star => true,
            Tok::Name(n) => !(n.starts_with("db:") && *self.peek_at(1) == Tok::LParen),
            _ => false,
        }
    }

    fn step(&mut self) -> Result<Step> {
        let pos = self.pos();
        let (axis, test) = match self.peek().clone() {
            Tok::Dot => {
                self.bump();
                return self.no_predicates_after_abbrev(Step::new(Axis::SelfAxis, NodeTest::Kind(KindTest::Node)));
            }
            Tok::DotDot => {
                self.bump();
                return self.no_predicates_after_abbrev(Step::new(Axis::Parent, NodeTest::Kind(KindTest::Node)));
            }
            Tok::At => {
                self.bump();
                (Axis::Attribute, self.node_test()?)
            }
            Tok::Name(n) if *self.peek_at(1) == Tok::ColonColon => {
                let axis = match Axis::from_name(&n) {
                    Some(a) => a,
                    None if matches!(
                        n.as_str(),
                        "ancestor-or-self" | "preceding" | "preceding-sibling" | "following" | "namespace"
                    ) =>
                    {
                        return Err(unsupported(pos, format!("axis `{n}`")))
                    }
                    None => return Err(syntax(pos, format!("unknown axis `{n}`"))),
                };
                self.bump();
                self.bump();
                (axis, self.node_test()?)
            }
            Tok::Name(_) | Tok::Star => (Axis::Child, self.node_test()?),
            _ => return Err(self.unexpected("a step")),
        };
        if axis == Axis::Attribute && matches!(test, NodeTest::Kind(k) if !matches!(k, KindTest::Node | KindTest::Attribute))
        {
            return Err(syntax(pos, "the attribute axis only combines with name, wildcard or node tests"));
        }
        let mut step = Step::new(axis, test);
        while self.eat(&Tok::LBracket) {
            step.predicates.push(self.expr()?);
            self.expect(Tok::RBracket, "`]`")?;
        }
        Ok(step)
    }

    fn no_predicates_after_abbrev(&self, step: Step) -> Result<Step> {
        if *self.peek() == Tok::LBracket {
            Err(syntax(self.pos(), "predicates are not allowed after `.` or `..`"))
        } else {
            Ok(step)
        }
    }

    fn node_test(&mut self) -> Result<NodeTest> {
        let pos = self.pos();
        match self.bump() {
            Tok::Star => Ok(NodeTest::Wildcard),
            Tok::Name(n) if *self.peek() == Tok::LParen => {
                let Some(&(_, kind)) = KIND_TESTS.iter().find(|(k, _)| *k == n) else {
                    return Err(unsupported(pos, format!("node test `{n}()`")));
                };
                self.bump();
                self.expect(Tok::RParen, "`)`")?;
                Ok(NodeTest::Kind(kind))
            }
            Tok::Name(n) if n.contains(':') => Err(unsupported(pos, "namespace prefixes")),
            Tok::Name(n) => Ok(NodeTest::Name(n)),
            Tok::Foreign(s) => Err(unsupported(pos, format!("operator `{s}`"))),
            _ => Err(syntax(pos, "expected a node test")),
        }
    }
}

fn is_kind_test(name: &str) -> bool {
    KIND_TESTS.iter().any(|(k, _)| *k == name) || matches!(name, "comment" | "processing-instruction")
}

/// `A//S` is `A/descendant-or-self::node()/S`; when `S` is not positional
/// the two steps collapse into one.
fn push_after_double_slash(steps: &mut Vec<Step>, step: Step) {
    if fuses_after_double_slash(&step) {
        let axis = match step.axis {
            Axis::Child | Axis::Descendant => Axis::Descendant,
            Axis::SelfAxis | Axis::DescendantOrSelf => Axis::DescendantOrSelf,
            _ => unreachable!(),
        };
        steps.push(Step { axis, ..step });
    } else {
        steps.push(Step::new(Axis::DescendantOrSelf, NodeTest::Kind(KindTest::Node)));
        steps.push(step);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(q: &str) -> QueryAst {
        let ast = parse_xpath(q).unwrap_or_else(|e| panic!("{q}: {e}"));
        let printed = ast.to_string();
        let again = parse_xpath(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(ast, again, "{q} printed as {printed}");
        ast
    }

    #[test]
    fn descendant_abbreviation_is_normalized() {
        let ast = roundtrip("/site//open_auction");
        assert_eq!(ast, QueryAst::absolute(vec![Step::named(Axis::Child, "site"), Step::named(Axis::Descendant, "open_auction")]));
        assert_eq!(ast.to_string(), "/site//open_auction");
    }

    #[test]
    fn positional_step_after_double_slash_keeps_both_steps() {
        let ast = roundtrip("//b[1]");
        assert_eq!(ast.steps.len(), 2);
        assert_eq!(ast.steps[0].axis, Axis::DescendantOrSelf);
        assert_eq!(ast.to_string(), "//b[1]");
        let ast = roundtrip("/a//@id");
        assert_eq!(ast.steps.len(), 3);
        assert_eq!(ast.to_string(), "/a//@id");
    }

    #[test]
    fn last_predicate() {
        let ast = roundtrip("bidder[last()]");
        assert_eq!(ast.origin, Origin::Context);
        assert_eq!(ast.steps.len(), 1);
        assert_eq!(ast.steps[0].predicates, vec![Expr::Call(Function::Last)]);
    }

    #[test]
    fn whole_query_suite_parses_and_roundtrips() {
        for q in [
            r#"/site//*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"]"#,
            r#"/site//incategory[./@category="category52"]/parent::item/@id"#,
            "/site//open_auction/bidder[last()]",
            r#"/site/regions/*/item[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name]"#,
            "/site/open_auctions/open_auction/bidder/increase",
            r#"/site/regions/*[name(.)="africa" or name(.)="asia"]/item/description/parlist/listitem"#,
            r#"descendant-or-self::*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"]"#,
            r#"self::*[./@category="category52"]/parent::item/@id"#,
            r#"db:attribute("xmark10", "category52")"#,
            "parent::incategory[ancestor::site/parent::document-node()]/parent::item/@id",
            r#"db:text("xmark10", "Creditcard")/parent::payment"#,
            r#"parent::item[parent::*/parent::regions/parent::site/parent::document-node()][location = "United States"][0.0 < quantity][description][name]"#,
            "/dblp/article/author",
            "/dblp//title",
            "descendant-or-self::*/title",
            "/dblp/book[count(./following-sibling::book[1]/author) < count(./author)]",
            "self::*[count(./following-sibling::book[1]/author) < count(./author)]",
            "/",
            "a/../b/./c",
            "//x/descendant::y[2]",
            "a[(b or c) and d]",
            "a[b = (c = d)]",
            "a[-1.5 != b]",
        ] {
            roundtrip(q);
        }
    }

    #[test]
    fn index_heads() {
        let ast = roundtrip(r#"db:attribute("xmark", "category52", "category")/parent::incategory"#);
        match &ast.origin {
            Origin::Index(ix) => {
                assert_eq!(ix.kind, IndexKind::Attribute);
                assert_eq!(ix.value, "category52");
                assert_eq!(ix.name.as_deref(), Some("category"));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_xpath("/a["), Err(Error::Syntax { .. })));
        assert!(matches!(parse_xpath("/a/"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_xpath("a b"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_xpath("/a | /b"), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_xpath("/a[contains(., 'x')]"), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_xpath("/a/preceding::b"), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_xpath("/a[b + 1]"), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_xpath("/x:a"), Err(Error::Unsupported { .. })));
        assert!(matches!(parse_xpath("/a/comment()"), Err(Error::Unsupported { .. })));
        match parse_xpath("/a[b = ]") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 7),
            other => panic!("{other:?}"),
        }
    }
}
