//! Dataset generators, the query suite, metrics and reports.

pub mod gen;
pub mod metrics;
pub mod report;
pub mod suite;

pub use gen::{generate, Dataset, GenSpec};
pub use metrics::{increase_of_work, load_balance, median};
pub use report::{json_lines, table};
pub use suite::{lookup, run_suite, BenchReport, BenchRow, QuerySpec, SuiteConfig, VariantSpec, SUITE};
