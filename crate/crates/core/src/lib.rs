//! Data-partitioned parallel XPath evaluation.
//!
//! A query is split into a prefix, evaluated once, and a suffix evaluated
//! in parallel from blocks of the prefix result. The pieces:
//!
//! * [`store`]: PRE-ordered node table, path summary and value index.
//! * [`xpath`]: parser and evaluator for the supported XPath subset.
//! * [`optimizer`]: path-summary and value-index rewrites.
//! * [`splitter`]: prefix/suffix split plans and block partitioning.
//! * [`wire`]: line-protocol query server.
//! * [`client`]: master/worker orchestration over the wire protocol.
//! * [`bench`]: dataset generators, query suite and metrics.

pub mod bench;
pub mod client;
pub mod error;
pub mod optimizer;
pub mod splitter;
pub mod store;
pub mod wire;
pub mod xpath;

pub use error::{Error, Result};
pub use store::{Database, NodeTable};
pub use xpath::{evaluate, parse_xpath, QueryAst};
