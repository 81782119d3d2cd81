//! Python bindings: load documents, run and optimize queries, enumerate
//! splits, and drive the wire server and parallel client.

use std::sync::{Arc, Mutex};

use parxpath::bench::{self, Dataset, GenSpec};
use parxpath::client::{self, ExecutionPlan, Strategy};
use parxpath::optimizer::optimize_for;
use parxpath::splitter::{self, SplitKind, SplitPlan};
use parxpath::wire::{self, Registry, ServerHandle};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(parxpath_py, ParxpathError, PyException);

fn err(e: parxpath::Error) -> PyErr {
    ParxpathError::new_err(e.to_string())
}

fn split_kind(s: &str) -> PyResult<SplitKind> {
    match s {
        "step_boundary" => Ok(SplitKind::StepBoundary),
        "predicate_peel" => Ok(SplitKind::PredicatePeel),
        "descendant_pushdown" => Ok(SplitKind::DescendantPushdown),
        other => Err(ParxpathError::new_err(format!("unknown split kind `{other}`"))),
    }
}

#[pyclass(frozen)]
struct Database {
    inner: Arc<parxpath::Database>,
}

#[pymethods]
impl Database {
    #[new]
    #[pyo3(signature = (xml, name))]
    fn new(py: Python<'_>, xml: &str, name: &str) -> PyResult<Self> {
        let bytes = xml.as_bytes().to_vec();
        let db = py.detach(|| parxpath::Database::parse(&bytes, name)).map_err(err)?;
        Ok(Database { inner: Arc::new(db) })
    }

    #[staticmethod]
    #[pyo3(signature = (path, name=None))]
    fn from_file(py: Python<'_>, path: &str, name: Option<&str>) -> PyResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| err(e.into()))?;
        let stem = std::path::Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("db").to_string();
        let name = name.map(str::to_string).unwrap_or(stem);
        let db = py.detach(|| parxpath::Database::parse(&bytes, &name)).map_err(err)?;
        Ok(Database { inner: Arc::new(db) })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.table.len()
    }

    /// `[(pre, xml), ...]` in document order.
    fn query(&self, py: Python<'_>, xpath: &str) -> PyResult<Vec<(usize, String)>> {
        let ast = parxpath::parse_xpath(xpath).map_err(err)?;
        let db = &self.inner;
        let pres = py.detach(|| parxpath::evaluate(&ast, db, &[0])).map_err(err)?;
        Ok(pres.into_iter().map(|p| (p, db.table.serialize(p))).collect())
    }

    fn serialize(&self, pre: usize) -> PyResult<String> {
        if pre >= self.inner.table.len() {
            return Err(ParxpathError::new_err(format!("PRE {pre} out of range")));
        }
        Ok(self.inner.table.serialize(pre))
    }

    /// `(rewritten query, [rule names])`.
    fn optimize(&self, xpath: &str) -> PyResult<(String, Vec<String>)> {
        let ast = parxpath::parse_xpath(xpath).map_err(err)?;
        let report = optimize_for(&ast, &self.inner);
        Ok((report.output.to_string(), report.applied.iter().map(ToString::to_string).collect()))
    }

    /// Occurrences of a rooted label path, 0 when absent.
    fn path_count(&self, path: Vec<String>) -> usize {
        let p: Vec<&str> = path.iter().map(String::as_str).collect();
        self.inner.summary.count(&p).unwrap_or(0)
    }

    /// Prefix once, suffix per block, merged.
    #[pyo3(signature = (prefix, suffix, p, kind="step_boundary"))]
    fn run_split(&self, py: Python<'_>, prefix: &str, suffix: &str, p: usize, kind: &str) -> PyResult<Vec<usize>> {
        let plan = SplitPlan::parse(prefix, suffix, split_kind(kind)?).map_err(err)?;
        let db = &self.inner;
        py.detach(|| splitter::run_plan_local(&plan, db, p)).map_err(err)
    }
}

#[pyclass(frozen)]
struct Server {
    handle: Mutex<Option<ServerHandle>>,
    addr: String,
}

#[pymethods]
impl Server {
    #[new]
    #[pyo3(signature = (databases, addr="127.0.0.1:0"))]
    fn new(databases: Vec<PyRef<'_, Database>>, addr: &str) -> PyResult<Self> {
        let mut reg = Registry::new();
        for db in &databases {
            reg.insert((*db.inner).clone());
        }
        let handle = wire::serve(addr, reg).map_err(err)?;
        let addr = handle.addr().to_string();
        Ok(Server { handle: Mutex::new(Some(handle)), addr })
    }

    #[getter]
    fn address(&self) -> String {
        self.addr.clone()
    }

    fn shutdown(&self, py: Python<'_>) {
        if let Some(h) = self.handle.lock().unwrap().take() {
            py.detach(|| h.shutdown());
        }
    }
}

/// Canonical text of a query.
#[pyfunction]
fn parse_xpath(xpath: &str) -> PyResult<String> {
    Ok(parxpath::parse_xpath(xpath).map_err(err)?.to_string())
}

/// `[(prefix, suffix, kind), ...]`.
#[pyfunction]
fn enumerate_splits(xpath: &str) -> PyResult<Vec<(String, String, String)>> {
    let ast = parxpath::parse_xpath(xpath).map_err(err)?;
    Ok(splitter::enumerate_splits(&ast)
        .into_iter()
        .map(|p| (p.prefix.to_string(), p.suffix.to_string(), p.kind.to_string()))
        .collect())
}

#[pyfunction]
fn block_partition(seq: Vec<usize>, p: usize) -> PyResult<Vec<Vec<usize>>> {
    splitter::block_partition(&seq, p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dataset, nodes, seed=42))]
fn generate(py: Python<'_>, dataset: &str, nodes: usize, seed: u64) -> PyResult<String> {
    let ds: Dataset = dataset.parse().map_err(err)?;
    let spec = GenSpec::for_nodes(ds, nodes, seed).map_err(err)?;
    let bytes = py.detach(|| bench::generate(&spec));
    String::from_utf8(bytes).map_err(|e| ParxpathError::new_err(e.to_string()))
}

#[pyfunction]
fn load_balance(times: Vec<f64>) -> PyResult<f64> {
    bench::load_balance(&times).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (times, t11))]
fn increase_of_work(times: Vec<f64>, t11: f64) -> PyResult<f64> {
    bench::increase_of_work(&times, Some(t11)).map_err(err)
}

/// Runs a query against a server. Returns `(output, metrics)`; the output
/// is the `PRE\tXML` lines the protocol returns.
#[pyfunction]
#[pyo3(signature = (address, db, query, strategy="sequential_original", p=1, prefix=None, suffix=None, kind="step_boundary", optimize=false))]
#[allow(clippy::too_many_arguments)]
fn run_query<'py>(
    py: Python<'py>,
    address: &str,
    db: &str,
    query: &str,
    strategy: &str,
    p: usize,
    prefix: Option<&str>,
    suffix: Option<&str>,
    kind: &str,
    optimize: bool,
) -> PyResult<(String, Bound<'py, PyDict>)> {
    let strategy: Strategy = strategy.parse().map_err(err)?;
    let ast = parxpath::parse_xpath(query).map_err(err)?;
    let mut plan = match (strategy, prefix, suffix) {
        (Strategy::SequentialOriginal, _, _) => ExecutionPlan::sequential(ast, db),
        (_, Some(pre), Some(suf)) => {
            let split = SplitPlan::parse(pre, suf, split_kind(kind)?).map_err(err)?;
            ExecutionPlan::parallel(strategy, ast, split, p, db)
        }
        _ => return Err(ParxpathError::new_err("parallel strategies need prefix and suffix")),
    };
    plan.optimize = optimize;
    let addr: std::net::SocketAddr = address.parse().map_err(|e| ParxpathError::new_err(format!("bad address: {e}")))?;
    let (out, m) = py.detach(|| client::run(&plan, addr)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t_total", m.t_total)?;
    d.set_item("t_prefix", m.t_prefix)?;
    d.set_item("t_suffix", m.t_suffix)?;
    d.set_item("t_suffix_per_worker", m.t_suffix_per_worker)?;
    d.set_item("prefix_count", m.prefix_count)?;
    d.set_item("result_bytes", m.result_bytes)?;
    d.set_item("prefix_request_bytes", m.prefix_request_bytes)?;
    d.set_item("suffix_request_bytes", m.suffix_request_bytes)?;
    d.set_item("merge", m.merge)?;
    let out = String::from_utf8(out).map_err(|e| ParxpathError::new_err(e.to_string()))?;
    Ok((out, d))
}

#[pymodule]
fn parxpath_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ParxpathError", m.py().get_type::<ParxpathError>())?;
    m.add_class::<Database>()?;
    m.add_class::<Server>()?;
    m.add_function(wrap_pyfunction!(parse_xpath, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_splits, m)?)?;
    m.add_function(wrap_pyfunction!(block_partition, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(load_balance, m)?)?;
    m.add_function(wrap_pyfunction!(increase_of_work, m)?)?;
    m.add_function(wrap_pyfunction!(run_query, m)?)?;
    Ok(())
}
