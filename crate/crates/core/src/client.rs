//! Master/worker orchestration over the wire protocol.
//!
//! The master issues the prefix; `P` workers, each on its own connection,
//! evaluate the suffix on one block of the prefix result. Client-side runs
//! ship PRE lists inside the suffix request, server-side runs leave the
//! partitions on the server and send only a partition index.

use std::fmt;
use std::io::{BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::splitter::{block_partition, MergeRule, SplitPlan};
use crate::wire::{read_response, Request, Response};
use crate::xpath::QueryAst;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ClientSide,
    ServerSide,
    SequentialOriginal,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::ClientSide => "client_side",
            Strategy::ServerSide => "server_side",
            Strategy::SequentialOriginal => "sequential_original",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "client_side" | "client" => Ok(Strategy::ClientSide),
            "server_side" | "server" => Ok(Strategy::ServerSide),
            "sequential_original" | "sequential" | "seq" => Ok(Strategy::SequentialOriginal),
            other => Err(Error::Argument(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecutionPlan {
    pub strategy: Strategy,
    /// The unsplit query; what `SequentialOriginal` runs.
    pub query: QueryAst,
    pub split: Option<SplitPlan>,
    pub p: usize,
    pub db_name: String,
    pub optimize: bool,
}

impl ExecutionPlan {
    pub fn sequential(query: QueryAst, db_name: &str) -> Self {
        ExecutionPlan {
            strategy: Strategy::SequentialOriginal,
            query,
            split: None,
            p: 1,
            db_name: db_name.to_string(),
            optimize: false,
        }
    }

    pub fn parallel(strategy: Strategy, query: QueryAst, split: SplitPlan, p: usize, db_name: &str) -> Self {
        ExecutionPlan { strategy, query, split: Some(split), p, db_name: db_name.to_string(), optimize: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Argument("thread count must be at least 1".into()));
        }
        match (self.strategy, &self.split) {
            (Strategy::SequentialOriginal, Some(_)) => Err(Error::Argument("sequential plan carries a split".into())),
            (Strategy::ClientSide | Strategy::ServerSide, None) => Err(Error::Argument("parallel plan needs a split".into())),
            _ => Ok(()),
        }
    }
}

/// Timings in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub t_prefix: f64,
    /// Per worker, from request to last result byte.
    pub t_suffix_per_worker: Vec<f64>,
    /// Wall time of the whole suffix phase.
    pub t_suffix: f64,
    pub t_total: f64,
    pub prefix_count: usize,
    /// Response bytes of the prefix phase.
    pub prefix_bytes: usize,
    /// Size of the merged result.
    pub result_bytes: usize,
    /// Request bytes sent by the master and by the workers.
    pub prefix_request_bytes: usize,
    pub suffix_request_bytes: usize,
    pub merge: Option<String>,
    pub address: String,
}

/// One protocol connection with byte counters.
pub struct Connection {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    pub sent: usize,
    pub received: usize,
}

impl Connection {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Connection {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            sent: 0,
            received: 0,
        })
    }

    pub fn peer(&self) -> Option<SocketAddr> {
        self.writer.get_ref().peer_addr().ok()
    }

    fn stream_clone(&self) -> Result<TcpStream> {
        Ok(self.writer.get_ref().try_clone()?)
    }

    /// Sends one request line, returns the response and the request size.
    pub fn request(&mut self, req: &Request) -> Result<(Response, usize)> {
        let line = format!("{req}\n");
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        self.sent += line.len();
        let resp = read_response(&mut self.reader)?;
        self.received += resp.bytes;
        Ok((resp, line.len()))
    }

    pub fn open(&mut self, db: &str) -> Result<u64> {
        let (r, _) = self.request(&Request::Open(db.to_string()))?;
        r.lines
            .first()
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::Protocol("OPEN reply lacks a session id".into()))
    }

    pub fn set_optimize(&mut self, on: bool) -> Result<()> {
        self.request(&Request::Optimize(on)).map(|_| ())
    }

    pub fn xpath(&mut self, q: &str) -> Result<Vec<String>> {
        Ok(self.request(&Request::XPath(q.to_string()))?.0.lines)
    }

    pub fn quit(mut self) -> Result<()> {
        self.request(&Request::Quit).map(|_| ())
    }
}

/// A master connection plus `P` worker connections, opened ahead of timing.
pub struct WorkerPool {
    pub master: Connection,
    pub workers: Vec<Connection>,
    db_name: String,
    optimize: bool,
    address: String,
}

impl WorkerPool {
    pub fn connect(addr: impl ToSocketAddrs + Copy, db_name: &str, p: usize, optimize: bool) -> Result<Self> {
        let setup = |c: &mut Connection| -> Result<()> {
            c.open(db_name)?;
            c.set_optimize(optimize)
        };
        let mut master = Connection::connect(addr)?;
        setup(&mut master)?;
        let mut workers = Vec::with_capacity(p);
        for _ in 0..p {
            let mut w = Connection::connect(addr)?;
            setup(&mut w)?;
            workers.push(w);
        }
        let address = master.peer().map(|a| a.to_string()).unwrap_or_default();
        Ok(WorkerPool { master, workers, db_name: db_name.to_string(), optimize, address })
    }

    pub fn p(&self) -> usize {
        self.workers.len()
    }

    /// Runs `plan` on this pool. The pool must match the plan's database,
    /// optimize flag and thread count.
    pub fn run(&mut self, plan: &ExecutionPlan) -> Result<(Vec<u8>, RunMetrics)> {
        plan.validate()?;
        if plan.db_name != self.db_name || plan.optimize != self.optimize {
            return Err(Error::Argument("plan does not match the pool's database or optimize flag".into()));
        }
        if plan.strategy != Strategy::SequentialOriginal && plan.p != self.p() {
            return Err(Error::Argument(format!("plan wants {} workers, pool has {}", plan.p, self.p())));
        }
        let mut m = RunMetrics { address: self.address.clone(), ..RunMetrics::default() };
        let start = Instant::now();
        let out = match plan.strategy {
            Strategy::SequentialOriginal => {
                let (resp, sent) = self.master.request(&Request::XPath(plan.query.to_string()))?;
                m.prefix_request_bytes = sent;
                m.t_suffix_per_worker = vec![ms(start)];
                join_lines(&resp.lines)
            }
            Strategy::ClientSide => self.run_client_side(plan.split.as_ref().unwrap(), &mut m, start)?,
            Strategy::ServerSide => self.run_server_side(plan.split.as_ref().unwrap(), &mut m, start)?,
        };
        m.t_total = ms(start);
        m.result_bytes = out.len();
        Ok((out, m))
    }

    fn run_client_side(&mut self, split: &SplitPlan, m: &mut RunMetrics, start: Instant) -> Result<Vec<u8>> {
        let (resp, sent) = self.master.request(&Request::Prefix(split.prefix.to_string()))?;
        let mut pres = Vec::with_capacity(resp.lines.len());
        for l in &resp.lines {
            pres.push(l.trim().parse::<usize>().map_err(|_| Error::Protocol(format!("bad PRE line `{l}`")))?);
        }
        m.t_prefix = ms(start);
        m.prefix_count = pres.len();
        m.prefix_bytes = resp.bytes;
        m.prefix_request_bytes = sent;
        let suffix = split.suffix.to_string();
        let requests: Vec<Option<Request>> = block_partition(&pres, self.p())?
            .into_iter()
            .map(|b| (!b.is_empty()).then(|| Request::SuffixPre { pres: b, query: suffix.clone() }))
            .collect();
        self.dispatch(split, requests.into_iter().map(|r| r.map(|r| vec![r])).collect(), m)
    }

    fn run_server_side(&mut self, split: &SplitPlan, m: &mut RunMetrics, start: Instant) -> Result<Vec<u8>> {
        let p = self.p();
        let (resp, sent) = self.master.request(&Request::StoreParts { p, query: split.prefix.to_string() })?;
        let reply = resp.lines.first().ok_or_else(|| Error::Protocol("STOREPARTS reply is empty".into()))?;
        let (job, count) = reply
            .split_once(' ')
            .and_then(|(j, c)| Some((j.parse::<u64>().ok()?, c.parse::<usize>().ok()?)))
            .ok_or_else(|| Error::Protocol(format!("bad STOREPARTS reply `{reply}`")))?;
        m.t_prefix = ms(start);
        m.prefix_count = count;
        m.prefix_bytes = resp.bytes;
        m.prefix_request_bytes = sent;
        let suffix = split.suffix.to_string();
        let requests = (1..=p)
            .map(|i| Some(vec![Request::Join(job), Request::SuffixPart { i, query: suffix.clone() }]))
            .collect();
        self.dispatch(split, requests, m)
    }

    /// One thread per worker, each sending its requests on its own
    /// connection. The first failure closes every other connection.
    fn dispatch(&mut self, split: &SplitPlan, requests: Vec<Option<Vec<Request>>>, m: &mut RunMetrics) -> Result<Vec<u8>> {
        let cancel = AtomicBool::new(false);
        let first_error: Mutex<Option<Error>> = Mutex::new(None);
        let streams: Vec<TcpStream> = self.workers.iter().map(Connection::stream_clone).collect::<Result<_>>()?;
        let phase = Instant::now();
        let results: Vec<(Vec<String>, f64, usize)> = thread::scope(|s| {
            let handles: Vec<_> = self
                .workers
                .iter_mut()
                .zip(requests)
                .map(|(conn, reqs)| {
                    let (cancel, first_error, streams) = (&cancel, &first_error, &streams);
                    s.spawn(move || {
                        let t = Instant::now();
                        let mut lines = Vec::new();
                        let mut sent = 0;
                        // empty partitions are no-ops
                        for req in reqs.into_iter().flatten() {
                            if cancel.load(Ordering::SeqCst) {
                                break;
                            }
                            match conn.request(&req) {
                                Ok((resp, n)) => {
                                    sent += n;
                                    lines.extend(resp.lines);
                                }
                                Err(e) => {
                                    if !cancel.swap(true, Ordering::SeqCst) {
                                        *first_error.lock().unwrap() = Some(e);
                                        for st in streams {
                                            let _ = st.shutdown(Shutdown::Both);
                                        }
                                    }
                                    break;
                                }
                            }
                        }
                        (lines, ms(t), sent)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
        });
        m.t_suffix = ms(phase);
        if let Some(e) = first_error.into_inner().unwrap() {
            return Err(e);
        }
        m.t_suffix_per_worker = results.iter().map(|r| r.1).collect();
        m.suffix_request_bytes = results.iter().map(|r| r.2).sum();
        let streams: Vec<Vec<String>> = results.into_iter().map(|r| r.0).collect();
        let downward = split.suffix.steps.iter().all(|s| s.axis.is_downward());
        let (out, rule) = if downward {
            // concatenation is right exactly when it comes out strictly ascending
            match merge_results(&streams, MergeRule::ConcatInOrder).and_then(|b| ascending(&b).map(|ok| (b, ok))) {
                Ok((b, true)) => (b, MergeRule::ConcatInOrder),
                _ => (merge_results(&streams, MergeRule::DedupSort)?, MergeRule::DedupSort),
            }
        } else {
            (merge_results(&streams, MergeRule::DedupSort)?, MergeRule::DedupSort)
        };
        debug!("merged {} partitions with {rule}", streams.len());
        m.merge = Some(rule.to_string());
        Ok(out)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn join_lines(lines: &[String]) -> Vec<u8> {
    let mut out = Vec::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        out.extend_from_slice(l.as_bytes());
        out.push(b'\n');
    }
    out
}

fn pre_key(line: &str) -> Result<usize> {
    line.split_once('\t')
        .and_then(|(p, _)| p.parse().ok())
        .ok_or_else(|| Error::Protocol(format!("result line without PRE key: `{line}`")))
}

fn ascending(bytes: &[u8]) -> Result<bool> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Protocol("result is not UTF-8".into()))?;
    let mut last = None;
    for line in text.lines() {
        let k = pre_key(line)?;
        if last.is_some_and(|l| l >= k) {
            return Ok(false);
        }
        last = Some(k);
    }
    Ok(true)
}

/// Merges per-partition result lines (`PRE\tXML`), given in partition order.
pub fn merge_results(streams: &[Vec<String>], rule: MergeRule) -> Result<Vec<u8>> {
    match rule {
        MergeRule::ConcatInOrder => Ok(join_lines(&streams.concat())),
        MergeRule::DedupSort => {
            let mut keyed = Vec::new();
            for line in streams.iter().flatten() {
                keyed.push((pre_key(line)?, line.as_str()));
            }
            keyed.sort_by_key(|k| k.0);
            keyed.dedup_by_key(|k| k.0);
            let mut out = Vec::new();
            for (_, l) in keyed {
                out.extend_from_slice(l.as_bytes());
                out.push(b'\n');
            }
            Ok(out)
        }
    }
}

/// Connects a fresh pool and runs one plan.
pub fn run(plan: &ExecutionPlan, addr: impl ToSocketAddrs + Copy) -> Result<(Vec<u8>, RunMetrics)> {
    plan.validate()?;
    let workers = if plan.strategy == Strategy::SequentialOriginal { 0 } else { plan.p };
    let mut pool = WorkerPool::connect(addr, &plan.db_name, workers, plan.optimize)?;
    pool.run(plan)
}
