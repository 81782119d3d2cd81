use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Open(String),
    XPath(String),
    Prefix(String),
    StoreParts { p: usize, query: String },
    /// 1-based partition index.
    SuffixPart { i: usize, query: String },
    SuffixPre { pres: Vec<usize>, query: String },
    /// Attach to the partition document of another session's job.
    Join(u64),
    Optimize(bool),
    Quit,
}

fn arg<'a>(rest: Option<&'a str>, what: &str) -> Result<&'a str> {
    match rest.map(str::trim) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(Error::Protocol(format!("missing {what}"))),
    }
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Protocol(format!("bad {what} `{s}`")))
}

/// Splits `"<word> <rest>"`.
fn word(s: &str) -> (&str, Option<&str>) {
    let s = s.trim_start();
    match s.find(' ') {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    }
}

impl Request {
    pub fn parse(line: &str) -> Result<Request> {
        let line = line.trim_end_matches(['\r', '\n']);
        let (cmd, rest) = word(line);
        Ok(match cmd {
            "OPEN" => Request::Open(arg(rest, "database name")?.to_string()),
            "XPATH" => Request::XPath(arg(rest, "query")?.to_string()),
            "PREFIX" => Request::Prefix(arg(rest, "query")?.to_string()),
            "STOREPARTS" => {
                let (p, q) = word(arg(rest, "partition count")?);
                Request::StoreParts { p: number(p, "partition count")?, query: arg(q, "query")?.to_string() }
            }
            "SUFFIXPART" => {
                let (i, q) = word(arg(rest, "partition index")?);
                Request::SuffixPart { i: number(i, "partition index")?, query: arg(q, "query")?.to_string() }
            }
            "SUFFIXPRE" => {
                let rest = rest.ok_or_else(|| Error::Protocol("missing PRE list".into()))?;
                // PRE tokens are digits only, so the first `;` ends the list
                let (list, q) = rest.split_once(';').ok_or_else(|| Error::Protocol("missing `;` after PRE list".into()))?;
                let mut pres = Vec::new();
                for tok in list.split_ascii_whitespace() {
                    pres.push(tok.parse().map_err(|_| Error::Argument(format!("invalid PRE value `{tok}`")))?);
                }
                Request::SuffixPre { pres, query: arg(Some(q), "query")?.to_string() }
            }
            "JOIN" => Request::Join(number(arg(rest, "job id")?, "job id")?),
            "OPTIMIZE" => match arg(rest, "on|off")? {
                "on" => Request::Optimize(true),
                "off" => Request::Optimize(false),
                other => return Err(Error::Protocol(format!("OPTIMIZE expects on|off, got `{other}`"))),
            },
            "QUIT" => Request::Quit,
            "" => return Err(Error::Protocol("empty request".into())),
            other => return Err(Error::Protocol(format!("unknown command `{other}`"))),
        })
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Request::Open(db) => write!(f, "OPEN {db}"),
            Request::XPath(q) => write!(f, "XPATH {q}"),
            Request::Prefix(q) => write!(f, "PREFIX {q}"),
            Request::StoreParts { p, query } => write!(f, "STOREPARTS {p} {query}"),
            Request::SuffixPart { i, query } => write!(f, "SUFFIXPART {i} {query}"),
            Request::SuffixPre { pres, query } => {
                f.write_str("SUFFIXPRE")?;
                for p in pres {
                    write!(f, " {p}")?;
                }
                write!(f, " ; {query}")
            }
            Request::Join(id) => write!(f, "JOIN {id}"),
            Request::Optimize(on) => write!(f, "OPTIMIZE {}", if *on { "on" } else { "off" }),
            Request::Quit => f.write_str("QUIT"),
        }
    }
}

pub fn error_code(e: &Error) -> &str {
    match e {
        Error::Xml { .. } => "XML",
        Error::Unsupported { .. } => "UNSUPPORTED",
        Error::Syntax { .. } => "SYNTAX",
        Error::Range { .. } => "RANGE",
        Error::Eval(_) => "EVAL",
        Error::Argument(_) | Error::UndefinedMetric(_) => "ARG",
        Error::Protocol(_) => "PROTOCOL",
        Error::Server { code, .. } => code,
        Error::Io(_) => "IO",
    }
}

pub fn write_ok<W: Write>(w: &mut W, n: usize, body: &[u8]) -> std::io::Result<()> {
    writeln!(w, "OK {n}")?;
    w.write_all(body)
}

pub fn write_err<W: Write>(w: &mut W, e: &Error) -> std::io::Result<()> {
    let message = match e {
        Error::Server { message, .. } => message.clone(),
        other => other.to_string(),
    };
    writeln!(w, "ERR {} {}", error_code(e), message.replace(['\n', '\r'], " "))
}

/// A successful response: its result lines (without terminators) and the
/// number of bytes read off the wire.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Response {
    pub lines: Vec<String>,
    pub bytes: usize,
}

fn read_line<R: BufRead>(r: &mut R, buf: &mut Vec<u8>) -> Result<usize> {
    buf.clear();
    let n = r.read_until(b'\n', buf)?;
    if n == 0 {
        return Err(Error::Io("connection closed".into()));
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    Ok(n)
}

/// Reads one response. `ERR` lines become [`Error::Server`].
pub fn read_response<R: BufRead>(r: &mut R) -> Result<Response> {
    let mut buf = Vec::new();
    let mut bytes = read_line(r, &mut buf)?;
    let head = String::from_utf8(buf.clone()).map_err(|_| Error::Protocol("response is not UTF-8".into()))?;
    if let Some(rest) = head.strip_prefix("ERR ") {
        let (code, message) = rest.split_once(' ').unwrap_or((rest, ""));
        return Err(Error::Server { code: code.to_string(), message: message.to_string() });
    }
    let n: usize = head
        .strip_prefix("OK ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Protocol(format!("malformed response header `{head}`")))?;
    let mut lines = Vec::with_capacity(n);
    for _ in 0..n {
        bytes += read_line(r, &mut buf)?;
        lines.push(String::from_utf8(buf.clone()).map_err(|_| Error::Protocol("response is not UTF-8".into()))?);
    }
    Ok(Response { lines, bytes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_roundtrip() {
        for r in [
            Request::Open("xmark".into()),
            Request::XPath("/a/b".into()),
            Request::Prefix("/site//open_auction".into()),
            Request::StoreParts { p: 3, query: "/a".into() },
            Request::SuffixPart { i: 2, query: "bidder[last()]".into() },
            Request::SuffixPre { pres: vec![2, 5], query: "b[. = \"x;y\"]".into() },
            Request::SuffixPre { pres: vec![], query: "b".into() },
            Request::Join(7),
            Request::Optimize(true),
            Request::Quit,
        ] {
            assert_eq!(Request::parse(&r.to_string()).unwrap(), r);
        }
    }

    #[test]
    fn bad_requests() {
        assert!(matches!(Request::parse("FOO x"), Err(Error::Protocol(_))));
        assert!(matches!(Request::parse(""), Err(Error::Protocol(_))));
        assert!(matches!(Request::parse("STOREPARTS x /a"), Err(Error::Protocol(_))));
        assert!(matches!(Request::parse("SUFFIXPRE 1 2 b"), Err(Error::Protocol(_))));
        match Request::parse("SUFFIXPRE 1 x2 ; b") {
            Err(Error::Argument(m)) => assert!(m.contains("x2")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Request::parse("OPTIMIZE maybe"), Err(Error::Protocol(_))));
    }

    #[test]
    fn responses() {
        let mut out = Vec::new();
        write_ok(&mut out, 2, b"1\t<a/>\n2\tx\n").unwrap();
        write_err(&mut out, &Error::Eval("bad\nthing".into())).unwrap();
        let mut r = out.as_slice();
        let ok = read_response(&mut r).unwrap();
        assert_eq!(ok.lines, vec!["1\t<a/>", "2\tx"]);
        assert_eq!(ok.bytes, 16);
        match read_response(&mut r) {
            Err(Error::Server { code, message }) => {
                assert_eq!(code, "EVAL");
                assert_eq!(message, "evaluation error: bad thing");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_response(&mut r), Err(Error::Io(_))));
    }
}
