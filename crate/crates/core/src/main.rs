use std::fs;
use std::io::Write;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use parxpath::bench::{self, suite, Dataset, GenSpec, SuiteConfig};
use parxpath::client::{self, ExecutionPlan, Strategy};
use parxpath::optimizer::optimize_for;
use parxpath::splitter::{enumerate_splits, SplitKind, SplitPlan};
use parxpath::wire::{serve, Registry};
use parxpath::{parse_xpath, Database, Error, Result};

#[derive(Parser)]
#[command(name = "parxpath", version, about = "Data-partitioned parallel XPath evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a benchmark document.
    Gen(GenArgs),
    /// Load documents and serve them over TCP.
    Serve(ServeArgs),
    /// Run one query, split or not, against a server.
    Query(QueryArgs),
    /// Sweep the query suite over strategies and thread counts.
    Bench(BenchArgs),
    /// Print the split plans and optimizer rewrite of a query.
    Splits(SplitsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Xmark,
    Dblp,
}

impl From<DatasetArg> for Dataset {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Xmark => Dataset::XmarkLike,
            DatasetArg::Dblp => Dataset::DblpLike,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct SizeArgs {
    /// Multiplier on the full-size entity counts.
    #[arg(long, conflicts_with = "nodes")]
    scale: Option<f64>,
    /// Approximate node count; picks the scale.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl SizeArgs {
    fn spec(&self, dataset: Dataset) -> Result<GenSpec> {
        match (self.scale, self.nodes) {
            (Some(s), _) => GenSpec::new(dataset, s, self.seed),
            (None, Some(n)) => GenSpec::for_nodes(dataset, n, self.seed),
            (None, None) => GenSpec::for_nodes(dataset, 100_000, self.seed),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// `name=file.xml`; repeatable.
    #[arg(long = "db", required = true)]
    dbs: Vec<String>,
    #[arg(long, env = "PARXPATH_PORT", default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, env = "PARXPATH_ADDR", default_value = "127.0.0.1:7878")]
    addr: String,
    #[arg(long)]
    db: String,
    /// Suite entry such as `XM3(a)`, or `XM3` for the unsplit query.
    #[arg(long, conflicts_with = "query")]
    plan: Option<String>,
    /// Ad-hoc query text.
    #[arg(long)]
    query: Option<String>,
    /// Explicit split of `--query`; otherwise the default split is used.
    #[arg(long, requires = "suffix")]
    prefix: Option<String>,
    #[arg(long, requires = "prefix")]
    suffix: Option<String>,
    #[arg(long, default_value = "server_side")]
    strategy: String,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value = "off")]
    optimize: OnOff,
    /// Print the optimizer rewrite (needs `--xml` to see the summary).
    #[arg(long)]
    dump_optimized: bool,
    /// Local copy of the document, for `--dump-optimized` and default splits.
    #[arg(long)]
    xml: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// `xmark`, `dblp`, `all`, or comma-separated entries like `XM3(c),DB1`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,6,12")]
    threads_list: Vec<usize>,
    #[arg(long, default_value_t = 25)]
    repeats: usize,
    #[arg(long, value_delimiter = ',', default_value = "client_side,server_side")]
    strategies: Vec<String>,
    #[arg(long, value_enum, default_value = "off")]
    optimize: OnOff,
    /// JSON-lines output file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    size: SizeArgs,
}

#[derive(Args)]
struct SplitsArgs {
    query: String,
    /// Document to optimize against and to rank splits on.
    #[arg(long)]
    xml: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    threads: usize,
}

fn load(name: &str, path: &PathBuf) -> Result<Database> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Database::parse(&bytes, name)
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()?.next().ok_or_else(|| Error::Argument(format!("cannot resolve `{addr}`")))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let spec = a.size.spec(a.dataset.into())?;
    let xml = bench::generate(&spec);
    fs::write(&a.out, &xml)?;
    eprintln!("wrote {} ({} bytes, scale {:.6}, seed {})", a.out.display(), xml.len(), spec.scale, spec.seed);
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> Result<()> {
    let mut registry = Registry::new();
    for d in &a.dbs {
        let (name, path) = d.split_once('=').ok_or_else(|| Error::Argument(format!("expected name=file, got `{d}`")))?;
        let db = load(name, &PathBuf::from(path))?;
        eprintln!("loaded {name}: {} nodes", db.table.len());
        registry.insert(db);
    }
    let handle = serve((a.bind.as_str(), a.port), registry)?;
    eprintln!("listening on {}", handle.addr());
    handle.wait();
    Ok(())
}

fn cmd_query(a: &QueryArgs) -> Result<()> {
    let strategy: Strategy = a.strategy.parse()?;
    let local = a.xml.as_ref().map(|p| load(&a.db, p)).transpose()?;
    let (query, split) = match (&a.plan, &a.query) {
        (Some(name), _) => {
            let (q, v) = suite::lookup(name)?;
            (q.ast(), v.map(|v| v.plan(&a.db)).transpose()?)
        }
        (None, Some(text)) => {
            let ast = parse_xpath(text)?;
            let split = match (&a.prefix, &a.suffix) {
                (Some(p), Some(s)) => Some(SplitPlan::parse(p, s, SplitKind::StepBoundary)?),
                _ if strategy == Strategy::SequentialOriginal => None,
                _ => {
                    let db = local.as_ref().ok_or_else(|| Error::Argument("default split needs --xml or --prefix/--suffix".into()))?;
                    let plans = enumerate_splits(&ast);
                    let (i, _) = parxpath::splitter::choose_split(&plans, db, a.threads)?
                        .ok_or_else(|| Error::Argument(format!("`{ast}` has no split point")))?;
                    Some(plans[i].clone())
                }
            };
            (ast, split)
        }
        (None, None) => return Err(Error::Argument("give --plan or --query".into())),
    };
    if a.dump_optimized {
        let db = local.as_ref().ok_or_else(|| Error::Argument("--dump-optimized needs --xml".into()))?;
        let r = optimize_for(&query, db);
        eprintln!("original:  {}", r.input);
        eprintln!("optimized: {}", r.output);
        for (rule, note) in r.applied.iter().zip(&r.notes) {
            eprintln!("  {rule}: {note}");
        }
    }
    let plan = match (strategy, split) {
        (Strategy::SequentialOriginal, _) | (_, None) => ExecutionPlan::sequential(query, &a.db),
        (s, Some(split)) => ExecutionPlan::parallel(s, query, split, a.threads, &a.db),
    };
    let plan = ExecutionPlan { optimize: a.optimize == OnOff::On, ..plan };
    if let Some(s) = &plan.split {
        eprintln!("{} {s}", plan.strategy);
    }
    let addr = resolve(&a.addr)?;
    let (out, m) = client::run(&plan, addr)?;
    match &a.output {
        Some(p) => fs::write(p, &out)?,
        None => std::io::stdout().write_all(&out)?,
    }
    eprintln!("{}", serde_json::to_string(&m).expect("metrics serialize"));
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<bool> {
    let mut entries: Vec<(&'static suite::QuerySpec, Vec<&'static suite::VariantSpec>)> = Vec::new();
    match a.suite.as_str() {
        "all" => {
            entries.extend(suite::full_suite(Dataset::XmarkLike));
            entries.extend(suite::full_suite(Dataset::DblpLike));
        }
        "xmark" => entries.extend(suite::full_suite(Dataset::XmarkLike)),
        "dblp" => entries.extend(suite::full_suite(Dataset::DblpLike)),
        list => {
            for name in list.split(',') {
                let (q, v) = suite::lookup(name.trim())?;
                let variants = v.map_or_else(|| q.variants.iter().collect(), |v| vec![v]);
                entries.push((q, variants));
            }
        }
    }
    let cfg = SuiteConfig {
        strategies: a.strategies.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        threads: a.threads_list.clone(),
        repeats: a.repeats,
        optimize: a.optimize == OnOff::On,
    };
    let mut report = bench::BenchReport::default();
    for dataset in [Dataset::XmarkLike, Dataset::DblpLike] {
        let mine: Vec<_> = entries.iter().filter(|(q, _)| q.dataset == dataset).cloned().collect();
        if mine.is_empty() {
            continue;
        }
        let spec = a.size.spec(dataset)?;
        let name = dataset.default_db_name();
        let db = Database::parse(&bench::generate(&spec), name)?;
        info!("{name}: {} nodes (scale {:.6})", db.table.len(), spec.scale);
        eprintln!("{name}: {} nodes (scale {:.6}, seed {})", db.table.len(), spec.scale, spec.seed);
        let mut registry = Registry::new();
        registry.insert(db);
        let server = serve("127.0.0.1:0", registry)?;
        let part = suite::run_suite(server.addr(), name, &mine, &cfg);
        server.shutdown();
        let part = part?;
        report.address = part.address;
        report.rows.extend(part.rows);
    }
    print!("{}", bench::table(&report));
    if let Some(path) = &a.report {
        fs::write(path, bench::json_lines(&report))?;
    }
    Ok(report.all_ok())
}

fn cmd_splits(a: &SplitsArgs) -> Result<()> {
    let ast = parse_xpath(&a.query)?;
    let db = a.xml.as_ref().map(|p| load("db", p)).transpose()?;
    println!("query: {ast}");
    let plans = enumerate_splits(&ast);
    let chosen = match &db {
        Some(db) => parxpath::splitter::choose_split(&plans, db, a.threads)?,
        None => None,
    };
    for (i, p) in plans.iter().enumerate() {
        let mark = if chosen.map(|c| c.0) == Some(i) { "*" } else { " " };
        println!("{mark} {:<20} {p}", p.kind.to_string());
    }
    if let Some(db) = &db {
        let r = optimize_for(&ast, db);
        println!("optimized: {}", r.output);
        for (rule, note) in r.applied.iter().zip(&r.notes) {
            println!("  {rule}: {note}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a).map(|_| true),
        Cmd::Serve(a) => cmd_serve(a).map(|_| true),
        Cmd::Query(a) => cmd_query(a).map(|_| true),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Splits(a) => cmd_splits(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("correctness gate failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
