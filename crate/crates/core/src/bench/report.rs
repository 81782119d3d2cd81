//! Human-readable and line-delimited JSON output for bench reports.

use std::fmt::Write as _;

use super::suite::{BenchReport, BenchRow};

/// Server-side load balance / increase of work published for the original
/// system, printed next to ours for context only.
pub const PUBLISHED_LOAD_WORK: &[(&str, [(f64, f64); 4])] = &[
    ("XM1(a)", [(1.51, 1.02), (1.59, 1.04), (2.83, 1.15), (2.87, 1.15)]),
    ("XM3(c)", [(1.95, 1.12), (2.84, 1.18), (5.38, 1.46), (9.01, 2.84)]),
    ("XM4(c)", [(1.97, 1.19), (2.82, 1.27), (2.59, 3.55), (10.25, 1.84)]),
    ("XM5(b)", [(1.91, 1.19), (2.79, 1.31), (3.97, 3.13), (11.31, 4.57)]),
    ("XM6(b)", [(1.94, 1.15), (2.76, 1.25), (5.40, 1.30), (10.35, 1.82)]),
    ("DB1(a)", [(1.95, 1.12), (2.86, 1.13), (5.69, 1.24), (10.79, 2.27)]),
    ("DB2(a)", [(1.58, 1.07), (2.38, 1.12), (4.68, 1.25), (9.80, 2.22)]),
    ("DB3(a)", [(1.16, 0.97), (1.24, 1.06), (1.45, 1.15), (1.83, 1.52)]),
];
const PUBLISHED_P: [usize; 4] = [2, 3, 6, 12];

pub fn published(key: &str, p: usize) -> Option<(f64, f64)> {
    let i = PUBLISHED_P.iter().position(|&x| x == p)?;
    PUBLISHED_LOAD_WORK.iter().find(|(k, _)| *k == key).map(|(_, v)| v[i])
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

fn bytes(n: usize) -> String {
    match n {
        n if n >= 1 << 20 => format!("{:.2} MB", n as f64 / (1 << 20) as f64),
        n if n >= 1 << 10 => format!("{:.2} KB", n as f64 / (1 << 10) as f64),
        n => format!("{n} B"),
    }
}

pub fn table(report: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "server {}", report.address);
    let _ = writeln!(
        s,
        "{:<8} {:<19} {:>3} {:>10} {:>10} {:>10} {:>7} {:>9} {:>10} {:>11} {:>10} {:>10}  check",
        "key", "strategy", "P", "orig t_o", "seq t_s", "par t_p", "t_o/t_p", "prefix", "suffix t^P", "load/work", "prefix", "final"
    );
    for r in &report.rows {
        let key = format!("{}({})", r.key, r.variant);
        let lw = match (r.load_balance, r.increase_of_work) {
            (None, None) => "-".to_string(),
            (a, b) => format!("{}/{}", opt(a), opt(b)),
        };
        let check = if r.ok { "ok".to_string() } else { format!("FAILED: {}", r.error.as_deref().unwrap_or("")) };
        let _ = writeln!(
            s,
            "{:<8} {:<19} {:>3} {:>10.2} {:>10} {:>10.2} {:>7} {:>9.2} {:>10.2} {:>11} {:>10} {:>10}  {}",
            key,
            r.strategy.to_string(),
            r.p,
            r.t_o,
            opt(r.t_s),
            r.t_p,
            opt(r.speedup),
            r.t_prefix,
            r.t_suffix,
            lw,
            bytes(r.prefix_bytes),
            bytes(r.result_bytes),
            check
        );
    }
    let context: Vec<&BenchRow> =
        report.rows.iter().filter(|r| r.ok && published(&format!("{}({})", r.key, r.variant), r.p).is_some()).collect();
    if !context.is_empty() {
        let _ = writeln!(s, "\nload/work published for the original system (context only, not asserted):");
        for r in context {
            let key = format!("{}({})", r.key, r.variant);
            let (l, w) = published(&key, r.p).unwrap();
            let _ = writeln!(
                s,
                "  {key:<8} {:<12} P={:<3} ours {}/{}  published {l:.2}/{w:.2}",
                r.strategy.to_string(),
                r.p,
                opt(r.load_balance),
                opt(r.increase_of_work)
            );
        }
    }
    let mut flagged = Vec::new();
    for w in report.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.ok && b.ok && a.key == b.key && a.variant == b.variant && a.strategy == b.strategy && b.p > a.p && b.t_suffix > a.t_suffix {
            flagged.push(format!("{}({}) {} P={}->{}", a.key, a.variant, a.strategy, a.p, b.p));
        }
    }
    if !flagged.is_empty() {
        let _ = writeln!(s, "\nnon-monotone suffix scaling (noted, not asserted): {}", flagged.join(", "));
    }
    s
}

pub fn json_lines(report: &BenchReport) -> String {
    report
        .rows
        .iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
        .collect()
}
