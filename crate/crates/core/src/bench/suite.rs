//! The benchmark query suite and the experiment driver.

use std::net::SocketAddr;

use log::{info, warn};
use serde::Serialize;

use super::gen::Dataset;
use super::metrics::{increase_of_work, load_balance, median};
use crate::client::{ExecutionPlan, RunMetrics, Strategy, WorkerPool};
use crate::error::{Error, Result};
use crate::splitter::{SplitKind, SplitPlan};
use crate::xpath::{parse_xpath, QueryAst};

/// `{db}` in index heads is replaced by the database name.
#[derive(Debug, Clone, Copy)]
pub struct VariantSpec {
    pub label: &'static str,
    pub prefix: &'static str,
    pub suffix: &'static str,
    pub kind: SplitKind,
    /// Rewritten form that only an optimizer would produce; not expected
    /// among the enumerated splits of the original query.
    pub optimized: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QuerySpec {
    pub key: &'static str,
    pub dataset: Dataset,
    pub query: &'static str,
    pub variants: &'static [VariantSpec],
}

const fn v(label: &'static str, prefix: &'static str, suffix: &'static str, kind: SplitKind) -> VariantSpec {
    VariantSpec { label, prefix, suffix, kind, optimized: false }
}

const fn opt(label: &'static str, prefix: &'static str, suffix: &'static str, kind: SplitKind) -> VariantSpec {
    VariantSpec { label, prefix, suffix, kind, optimized: true }
}

use SplitKind::{DescendantPushdown as Push, PredicatePeel as Peel, StepBoundary as Step};

pub const SUITE: &[QuerySpec] = &[
    QuerySpec {
        key: "XM1",
        dataset: Dataset::XmarkLike,
        query: r#"/site//*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"]"#,
        variants: &[v(
            "a",
            "/site/*",
            r#"descendant-or-self::*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"]"#,
            Push,
        )],
    },
    QuerySpec {
        key: "XM2",
        dataset: Dataset::XmarkLike,
        query: r#"/site//incategory[./@category="category52"]/parent::item/@id"#,
        variants: &[
            v("a", "/site//incategory", r#"self::*[./@category="category52"]/parent::item/@id"#, Peel),
            v("b", "/site/*", r#"descendant-or-self::incategory[./@category="category52"]/parent::item/@id"#, Push),
            opt(
                "c",
                r#"db:attribute("{db}", "category52")"#,
                "parent::incategory[ancestor::site/parent::document-node()]/parent::item/@id",
                Step,
            ),
        ],
    },
    QuerySpec {
        key: "XM3",
        dataset: Dataset::XmarkLike,
        query: "/site//open_auction/bidder[last()]",
        variants: &[
            v("a", "/site//open_auction", "bidder[last()]", Step),
            v("b", "/site/*", "descendant-or-self::open_auction/bidder[last()]", Push),
            opt("c", "/site/open_auctions/open_auction", "bidder[last()]", Step),
        ],
    },
    QuerySpec {
        key: "XM4",
        dataset: Dataset::XmarkLike,
        query: r#"/site/regions/*/item[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name]"#,
        variants: &[
            v(
                "a",
                "/site/regions/*",
                r#"item[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name]"#,
                Step,
            ),
            v(
                "b",
                "/site/regions/*/item",
                r#"self::*[./location="United States" and ./quantity > 0 and ./payment="Creditcard" and ./description and ./name]"#,
                Peel,
            ),
            opt(
                "c",
                r#"db:text("{db}", "Creditcard")/parent::payment"#,
                r#"parent::item[parent::*/parent::regions/parent::site/parent::document-node()][location = "United States"][0.0 < quantity][description][name]"#,
                Step,
            ),
        ],
    },
    QuerySpec {
        key: "XM5",
        dataset: Dataset::XmarkLike,
        query: "/site/open_auctions/open_auction/bidder/increase",
        variants: &[
            v("a", "/site/open_auctions/open_auction/bidder", "increase", Step),
            v("b", "/site/open_auctions/open_auction", "bidder/increase", Step),
        ],
    },
    QuerySpec {
        key: "XM6",
        dataset: Dataset::XmarkLike,
        query: r#"/site/regions/*[name(.)="africa" or name(.)="asia"]/item/description/parlist/listitem"#,
        variants: &[
            v("a", "/site/regions/*", r#"self::*[name(.)="africa" or name(.)="asia"]/item/description/parlist/listitem"#, Peel),
            v("b", r#"/site/regions/*[name(.)="africa" or name(.)="asia"]/item"#, "description/parlist/listitem", Step),
        ],
    },
    QuerySpec {
        key: "DB1",
        dataset: Dataset::DblpLike,
        query: "/dblp/article/author",
        variants: &[v("a", "/dblp/article", "author", Step)],
    },
    QuerySpec {
        key: "DB2",
        dataset: Dataset::DblpLike,
        query: "/dblp//title",
        variants: &[
            // relies on titles sitting directly below the records
            opt("a", "/dblp/*", "title", Push),
            opt("b", "/dblp/*", "descendant-or-self::*/title", Push),
        ],
    },
    QuerySpec {
        key: "DB3",
        dataset: Dataset::DblpLike,
        query: "/dblp/book[count(./following-sibling::book[1]/author) < count(./author)]",
        variants: &[v("a", "/dblp/book", "self::*[count(./following-sibling::book[1]/author) < count(./author)]", Peel)],
    },
];

pub fn query_spec(key: &str) -> Option<&'static QuerySpec> {
    SUITE.iter().find(|q| q.key.eq_ignore_ascii_case(key))
}

impl QuerySpec {
    pub fn ast(&self) -> QueryAst {
        parse_xpath(self.query).expect("suite queries parse")
    }

    pub fn variant(&self, label: &str) -> Option<&VariantSpec> {
        self.variants.iter().find(|v| v.label == label)
    }
}

impl VariantSpec {
    pub fn plan(&self, db_name: &str) -> Result<SplitPlan> {
        SplitPlan::parse(&self.prefix.replace("{db}", db_name), &self.suffix.replace("{db}", db_name), self.kind)
    }
}

/// Resolves `XM3(a)`-style names.
pub fn lookup(name: &str) -> Result<(&'static QuerySpec, Option<&'static VariantSpec>)> {
    let (key, label) = match name.split_once('(') {
        Some((k, rest)) => (k, Some(rest.trim_end_matches(')'))),
        None => (name, None),
    };
    let q = query_spec(key).ok_or_else(|| Error::Argument(format!("unknown suite query `{key}`")))?;
    match label {
        None => Ok((q, None)),
        Some(l) => {
            let v = q.variant(l).ok_or_else(|| Error::Argument(format!("{key} has no variant ({l})")))?;
            Ok((q, Some(v)))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub strategies: Vec<Strategy>,
    pub threads: Vec<usize>,
    pub repeats: usize,
    pub optimize: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            strategies: vec![Strategy::ClientSide, Strategy::ServerSide],
            threads: vec![1, 2, 3, 6, 12],
            repeats: 25,
            optimize: false,
        }
    }
}

/// One cell: query variant × strategy × thread count. Times in ms.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub key: String,
    pub variant: String,
    pub strategy: Strategy,
    pub p: usize,
    pub ok: bool,
    pub error: Option<String>,
    /// Original query, sequential.
    pub t_o: f64,
    /// This variant with one worker.
    pub t_s: Option<f64>,
    /// This variant with `p` workers.
    pub t_p: f64,
    pub speedup: Option<f64>,
    pub t_prefix: f64,
    pub t_suffix: f64,
    pub t_suffix_per_worker: Vec<f64>,
    pub load_balance: Option<f64>,
    pub increase_of_work: Option<f64>,
    pub prefix_count: usize,
    pub prefix_bytes: usize,
    pub result_bytes: usize,
    pub suffix_request_bytes: usize,
    pub merge: Option<String>,
    pub result_hash: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub address: String,
}

impl BenchReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }
}

/// 64-bit FNV-1a, for reporting result identity.
pub fn fnv1a(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Runs `plan` once for warm-up and `repeats` times more, checking every
/// output against `expected`. Returns the run with the median total time.
pub fn measure(pool: &mut WorkerPool, plan: &ExecutionPlan, repeats: usize, expected: Option<&[u8]>) -> Result<(Vec<u8>, RunMetrics)> {
    let (first, _) = pool.run(plan)?;
    if let Some(e) = expected {
        if first != e {
            return Err(Error::Eval("result differs from the sequential original".into()));
        }
    }
    let mut runs = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let (out, m) = pool.run(plan)?;
        if out != first {
            return Err(Error::Eval("result changed between runs".into()));
        }
        runs.push(m);
    }
    let totals: Vec<f64> = runs.iter().map(|m| m.t_total).collect();
    let med = median(&totals).unwrap();
    let pick = runs
        .into_iter()
        .min_by(|a, b| (a.t_total - med).abs().total_cmp(&(b.t_total - med).abs()))
        .unwrap();
    Ok((first, pick))
}

/// Sweeps `queries` over strategies and thread counts. Cells whose output
/// differs from the sequential original are marked failed and get no
/// speedup.
pub fn run_suite(
    addr: SocketAddr,
    db_name: &str,
    queries: &[(&QuerySpec, Vec<&VariantSpec>)],
    cfg: &SuiteConfig,
) -> Result<BenchReport> {
    let mut report = BenchReport { rows: Vec::new(), address: addr.to_string() };
    for (q, variants) in queries {
        let original = q.ast();
        let mut seq_pool = WorkerPool::connect(addr, db_name, 0, cfg.optimize)?;
        let mut seq_plan = ExecutionPlan::sequential(original.clone(), db_name);
        seq_plan.optimize = cfg.optimize;
        let (reference, seq) = measure(&mut seq_pool, &seq_plan, cfg.repeats, None)?;
        let t_o = seq.t_total;
        info!("{} original: {:.2} ms, {} bytes", q.key, t_o, reference.len());
        for variant in variants {
            let split = variant.plan(db_name)?;
            for &strategy in &cfg.strategies {
                let mut cells: Vec<BenchRow> = Vec::new();
                let mut single: Option<(f64, f64)> = None;
                let mut threads = cfg.threads.clone();
                threads.sort_unstable();
                threads.dedup();
                for &p in &threads {
                    let mut plan = ExecutionPlan::parallel(strategy, original.clone(), split.clone(), p, db_name);
                    plan.optimize = cfg.optimize;
                    let outcome = WorkerPool::connect(addr, db_name, p, cfg.optimize)
                        .and_then(|mut pool| measure(&mut pool, &plan, cfg.repeats, Some(&reference)));
                    let row = match outcome {
                        Ok((out, m)) => {
                            if p == 1 {
                                single = Some((m.t_total, m.t_suffix_per_worker.iter().sum()));
                            }
                            BenchRow {
                                key: q.key.to_string(),
                                variant: variant.label.to_string(),
                                strategy,
                                p,
                                ok: true,
                                error: None,
                                t_o,
                                t_s: None,
                                t_p: m.t_total,
                                speedup: (m.t_total > 0.0).then(|| t_o / m.t_total),
                                t_prefix: m.t_prefix,
                                t_suffix: m.t_suffix,
                                load_balance: load_balance(&m.t_suffix_per_worker).ok(),
                                increase_of_work: None,
                                t_suffix_per_worker: m.t_suffix_per_worker,
                                prefix_count: m.prefix_count,
                                prefix_bytes: m.prefix_bytes,
                                result_bytes: m.result_bytes,
                                suffix_request_bytes: m.suffix_request_bytes,
                                merge: m.merge,
                                result_hash: fnv1a(&out),
                            }
                        }
                        Err(e) => {
                            warn!("{}({}) {strategy} P={p}: {e}", q.key, variant.label);
                            BenchRow {
                                key: q.key.to_string(),
                                variant: variant.label.to_string(),
                                strategy,
                                p,
                                ok: false,
                                error: Some(e.to_string()),
                                t_o,
                                t_s: None,
                                t_p: f64::NAN,
                                speedup: None,
                                t_prefix: f64::NAN,
                                t_suffix: f64::NAN,
                                t_suffix_per_worker: Vec::new(),
                                load_balance: None,
                                increase_of_work: None,
                                prefix_count: 0,
                                prefix_bytes: 0,
                                result_bytes: 0,
                                suffix_request_bytes: 0,
                                merge: None,
                                result_hash: String::new(),
                            }
                        }
                    };
                    cells.push(row);
                }
                for row in &mut cells {
                    if let (true, Some((t_s, t11))) = (row.ok, single) {
                        row.t_s = Some(t_s);
                        row.increase_of_work = increase_of_work(&row.t_suffix_per_worker, Some(t11)).ok();
                    }
                }
                report.rows.extend(cells);
            }
        }
    }
    Ok(report)
}

/// Every suite query with every variant, for one dataset.
pub fn full_suite(dataset: Dataset) -> Vec<(&'static QuerySpec, Vec<&'static VariantSpec>)> {
    SUITE.iter().filter(|q| q.dataset == dataset).map(|q| (q, q.variants.iter().collect())).collect()
}
