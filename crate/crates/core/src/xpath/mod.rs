//! XPath subset: AST, parser and evaluator.

mod ast;
mod eval;
mod parser;

pub use ast::{Axis, CmpOp, Expr, Function, IndexAccess, KindTest, NodeTest, Origin, QueryAst, Step};
pub use eval::{boolean, compare, evaluate, evaluate_query, number_value, string_value, NodeSequence, Value};
pub use parser::{parse_expr, parse_xpath};

