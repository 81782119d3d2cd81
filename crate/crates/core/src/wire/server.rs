use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use log::{debug, warn};

use super::protocol::{write_err, write_ok, Request};
use super::temp::TempPartitionDoc;
use crate::error::{Error, Result};
use crate::optimizer::optimize_for;
use crate::splitter::block_partition;
use crate::store::Database;
use crate::xpath::{evaluate, parse_xpath, QueryAst};

/// Longest request line accepted; a client-side suffix request carries a
/// whole partition, so this is generous.
const MAX_LINE: usize = 1 << 30;

/// Loaded databases by name. Immutable once the server starts.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    dbs: HashMap<String, Arc<Database>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, db: Database) -> Arc<Database> {
        let db = Arc::new(db);
        self.dbs.insert(db.name().to_string(), db.clone());
        db
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Database>> {
        self.dbs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dbs.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.dbs.is_empty()
    }
}

struct Shared {
    registry: Registry,
    jobs: Mutex<HashMap<u64, Arc<TempPartitionDoc>>>,
    next_id: AtomicU64,
    stop: AtomicBool,
    open: Mutex<HashMap<u64, TcpStream>>,
}

/// A running server. Dropping it does not stop it; call [`shutdown`].
///
/// [`shutdown`]: ServerHandle::shutdown
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting, closes every open session and waits for the accept
    /// loop to exit.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        for s in self.shared.open.lock().unwrap().values() {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    /// Blocks until the accept loop ends (it only ends on shutdown).
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

/// Binds and starts serving in background threads, one per connection.
pub fn serve(addr: impl ToSocketAddrs, registry: Registry) -> Result<ServerHandle> {
    if registry.is_empty() {
        return Err(Error::Argument("no database loaded".into()));
    }
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        registry,
        jobs: Mutex::new(HashMap::new()),
        next_id: AtomicU64::new(1),
        stop: AtomicBool::new(false),
        open: Mutex::new(HashMap::new()),
    });
    let sh = shared.clone();
    let accept = thread::Builder::new().name("accept".into()).spawn(move || accept_loop(listener, sh))?;
    Ok(ServerHandle { addr, shared, accept: Some(accept) })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    for stream in listener.incoming() {
        if shared.stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let id = shared.next_id.fetch_add(1, Ordering::SeqCst);
        let sh = shared.clone();
        let spawned = thread::Builder::new().name(format!("session-{id}")).spawn(move || {
            if let Err(e) = run_session(id, stream, &sh) {
                debug!("session {id} ended: {e}");
            }
            sh.open.lock().unwrap().remove(&id);
            sh.jobs.lock().unwrap().remove(&id);
        });
        if let Err(e) = spawned {
            warn!("cannot spawn session thread: {e}");
        }
    }
}

struct Session<'a> {
    id: u64,
    shared: &'a Shared,
    db: Option<Arc<Database>>,
    optimize: bool,
    /// Partition document of the job this session created or joined.
    temp: Option<Arc<TempPartitionDoc>>,
}

enum Reply {
    Lines(usize, Vec<u8>),
    Quit,
}

fn run_session(id: u64, stream: TcpStream, shared: &Shared) -> Result<()> {
    stream.set_nodelay(true)?;
    shared.open.lock().unwrap().insert(id, stream.try_clone()?);
    debug!("session {id} from {:?}", stream.peer_addr().ok());
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut session = Session { id, shared, db: None, optimize: false, temp: None };
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = Read::take(&mut reader, MAX_LINE as u64).read_until(b'\n', &mut line)?;
        if n == 0 || shared.stop.load(Ordering::SeqCst) {
            return Ok(());
        }
        if n == MAX_LINE && line.last() != Some(&b'\n') {
            write_err(&mut writer, &Error::Protocol("request line too long".into()))?;
            writer.flush()?;
            return Ok(());
        }
        let reply = match std::str::from_utf8(&line) {
            Ok(text) => Request::parse(text).and_then(|r| session.handle(r)),
            Err(_) => Err(Error::Protocol("request is not UTF-8".into())),
        };
        match reply {
            Ok(Reply::Lines(n, body)) => write_ok(&mut writer, n, &body)?,
            Ok(Reply::Quit) => {
                write_ok(&mut writer, 0, &[])?;
                writer.flush()?;
                return Ok(());
            }
            Err(e) => write_err(&mut writer, &e)?,
        }
        writer.flush()?;
    }
}

fn server_error(code: &str, message: impl Into<String>) -> Error {
    Error::Server { code: code.to_string(), message: message.into() }
}

/// Appends `pre\tserialization\n`.
fn push_item(db: &Database, pre: usize, out: &mut Vec<u8>) {
    let mut s = String::new();
    s.push_str(&pre.to_string());
    s.push('\t');
    db.table.serialize_into(pre, &mut s);
    s.push('\n');
    out.extend_from_slice(s.as_bytes());
}

impl Session<'_> {
    fn db(&self) -> Result<Arc<Database>> {
        self.db.clone().ok_or_else(|| server_error("NODB", "no database opened"))
    }

    fn absolute(&self, db: &Database, text: &str) -> Result<QueryAst> {
        let ast = parse_xpath(text)?;
        if !ast.is_absolute() {
            return Err(Error::Argument(format!("`{text}` is not an absolute query")));
        }
        Ok(if self.optimize { optimize_for(&ast, db).output } else { ast })
    }

    fn relative(text: &str) -> Result<QueryAst> {
        let ast = parse_xpath(text)?;
        if ast.is_absolute() {
            return Err(Error::Argument(format!("`{text}` is not a relative query")));
        }
        Ok(ast)
    }

    /// Per-PRE suffix evaluation, concatenated in the given order.
    fn suffix_each(db: &Database, suffix: &QueryAst, pres: impl Iterator<Item = Result<usize>>) -> Result<Reply> {
        let mut body = Vec::new();
        let mut n = 0;
        for pre in pres {
            for r in evaluate(suffix, db, &[pre?])? {
                push_item(db, r, &mut body);
                n += 1;
            }
        }
        Ok(Reply::Lines(n, body))
    }

    fn handle(&mut self, req: Request) -> Result<Reply> {
        match req {
            Request::Open(name) => {
                let db = self.shared.registry.get(&name).ok_or_else(|| server_error("NODB", format!("unknown database `{name}`")))?;
                self.db = Some(db.clone());
                Ok(Reply::Lines(1, format!("{}\n", self.id).into_bytes()))
            }
            Request::Optimize(on) => {
                self.optimize = on;
                Ok(Reply::Lines(0, Vec::new()))
            }
            Request::XPath(q) => {
                let db = self.db()?;
                let ast = parse_xpath(&q)?;
                let ast = if self.optimize { optimize_for(&ast, &db).output } else { ast };
                let res = evaluate(&ast, &db, &[0])?;
                let mut body = Vec::new();
                for &pre in &res {
                    push_item(&db, pre, &mut body);
                }
                Ok(Reply::Lines(res.len(), body))
            }
            Request::Prefix(q) => {
                let db = self.db()?;
                let res = evaluate(&self.absolute(&db, &q)?, &db, &[0])?;
                let mut body = String::new();
                for pre in &res {
                    body.push_str(&pre.to_string());
                    body.push('\n');
                }
                Ok(Reply::Lines(res.len(), body.into_bytes()))
            }
            Request::StoreParts { p, query } => {
                let db = self.db()?;
                let res = evaluate(&self.absolute(&db, &query)?, &db, &[0])?;
                let doc = Arc::new(TempPartitionDoc::build(&block_partition(&res, p)?, db.name()));
                self.shared.jobs.lock().unwrap().insert(self.id, doc.clone());
                self.temp = Some(doc);
                Ok(Reply::Lines(1, format!("{} {}\n", self.id, res.len()).into_bytes()))
            }
            Request::Join(job) => {
                let doc = self.shared.jobs.lock().unwrap().get(&job).cloned();
                let doc = doc.ok_or_else(|| server_error("NOTEMP", format!("no partition document for job {job}")))?;
                self.temp = Some(doc);
                Ok(Reply::Lines(0, Vec::new()))
            }
            Request::SuffixPart { i, query } => {
                let db = self.db()?;
                let doc = self.temp.clone().ok_or_else(|| server_error("NOTEMP", "no partitions stored for this session"))?;
                if doc.db_name != db.name() {
                    return Err(server_error("NOTEMP", format!("partitions refer to `{}`, not `{}`", doc.db_name, db.name())));
                }
                let suffix = Self::relative(&query)?;
                let reply = Self::suffix_each(&db, &suffix, doc.tokens(i)?);
                reply
            }
            Request::SuffixPre { pres, query } => {
                let db = self.db()?;
                let suffix = Self::relative(&query)?;
                if let Some(&bad) = pres.iter().find(|&&p| p >= db.table.len()) {
                    return Err(Error::Range { pre: bad, len: db.table.len() });
                }
                Self::suffix_each(&db, &suffix, pres.into_iter().map(Ok))
            }
            Request::Quit => Ok(Reply::Quit),
        }
    }
}
