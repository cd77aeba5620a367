//! Networked embodiment: byte formats, framing, a TCP answer server, and the
//! retrieving client with exact download accounting.
//!
//! Payloads are scheme-tagged and little-endian throughout; frames carry a
//! big-endian u32 length prefix. One connection serves one query: read a
//! query frame, write an answer frame, close. The server never sees (W,R,S);
//! there is no field for them anywhere on the wire.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crate::choice::Chooser;
use crate::error::{Error, Result};
use crate::field::{is_prime, FieldMatrix, FieldVector};
use crate::mds::{self, MdsAnswer, MdsQuery};
use crate::model::{check_params, Database, SideInfoConfig, SideMessages};
use crate::partition::{self, PartitionAnswer, PartitionQuery};
use crate::rational::{ceil_div, ratio, Rational};

pub const TAG_MDS_QUERY: u8 = 0x01;
pub const TAG_PARTITION_QUERY: u8 = 0x02;
pub const TAG_MDS_ANSWER: u8 = 0x11;
pub const TAG_PARTITION_ANSWER: u8 = 0x12;
pub const TAG_ERROR: u8 = 0xFF;

/// Frames larger than this are rejected outright.
pub const DEFAULT_MAX_FRAME: u32 = 16 * 1024 * 1024;

const READ_TIMEOUT: Duration = Duration::from_secs(30);

/// Which retrieval scheme a query belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SchemeKind {
    Mds,
    Partition,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Mds => write!(f, "mds"),
            SchemeKind::Partition => write!(f, "partition"),
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mds" => Ok(SchemeKind::Mds),
            "partition" => Ok(SchemeKind::Partition),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme {other:?} (expected mds or partition)"
            ))),
        }
    }
}

/// Scheme choice for a retrieval: forced, or rate-optimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SchemeSelect {
    #[default]
    Auto,
    Force(SchemeKind),
}

impl std::str::FromStr for SchemeSelect {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SchemeSelect::Auto),
            other => Ok(SchemeSelect::Force(other.parse()?)),
        }
    }
}

/// The rate-optimal scheme: MDS if K−M1−M2 ≤ ⌈K/(M2+1)⌉, otherwise the
/// partition scheme. Ties go to MDS, which additionally hides S.
pub fn choose_scheme(k: usize, m1: usize, m2: usize) -> Result<SchemeKind> {
    check_params(k, m1, m2)?;
    let mds_downloads = (k - m1 - m2) as u64;
    let partition_downloads = ceil_div(k as u64, m2 as u64 + 1);
    Ok(if mds_downloads <= partition_downloads { SchemeKind::Mds } else { SchemeKind::Partition })
}

/// Scheme-tagged query payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Query {
    Mds(MdsQuery),
    Partition(PartitionQuery),
}

impl Query {
    /// Builds the query of the given kind for this configuration. The MDS
    /// query ignores both the configuration and the chooser (it is one fixed
    /// matrix); the partition query consumes randomness.
    pub fn build(
        kind: SchemeKind,
        k: usize,
        q: u32,
        cfg: &SideInfoConfig,
        chooser: &mut dyn Chooser,
    ) -> Result<Query> {
        cfg.validate_against(k)?;
        match kind {
            SchemeKind::Mds => Ok(Query::Mds(MdsQuery::build(k, cfg.m1(), cfg.m2(), q)?)),
            SchemeKind::Partition => {
                Ok(Query::Partition(PartitionQuery::build(cfg, k, chooser)?))
            }
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            Query::Mds(_) => SchemeKind::Mds,
            Query::Partition(_) => SchemeKind::Partition,
        }
    }

    pub fn message_count(&self) -> usize {
        match self {
            Query::Mds(q) => q.message_count(),
            Query::Partition(q) => q.message_count(),
        }
    }

    pub fn combination_count(&self) -> usize {
        match self {
            Query::Mds(q) => q.combination_count(),
            Query::Partition(q) => q.combination_count(),
        }
    }

    /// The P×K coefficient matrix the answer realizes. `q` supplies the
    /// field for the partition scheme; the MDS query carries its own.
    pub fn combination_matrix(&self, q: u32) -> FieldMatrix {
        match self {
            Query::Mds(query) => query.combination_matrix(),
            Query::Partition(query) => query.combination_matrix(q),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Mds(q) => write!(
                f,
                "mds {}x{} over GF({})",
                q.combination_count(),
                q.message_count(),
                q.modulus()
            ),
            Query::Partition(q) => write!(f, "{q}"),
        }
    }
}

/// Scheme-tagged answer payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Answer {
    Mds(MdsAnswer),
    Partition(PartitionAnswer),
}

impl Answer {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Answer::Mds(_) => SchemeKind::Mds,
            Answer::Partition(_) => SchemeKind::Partition,
        }
    }

    pub fn combination_count(&self) -> usize {
        match self {
            Answer::Mds(a) => a.combination_count(),
            Answer::Partition(a) => a.combination_count(),
        }
    }

    pub fn message_len(&self) -> usize {
        match self {
            Answer::Mds(a) => a.message_len(),
            Answer::Partition(a) => a.message_len(),
        }
    }

    /// Total field symbols carried: the download cost the rate is measured in.
    pub fn symbol_count(&self) -> usize {
        match self {
            Answer::Mds(a) => a.symbol_count(),
            Answer::Partition(a) => a.symbol_count(),
        }
    }

    fn vectors(&self) -> &[FieldVector] {
        match self {
            Answer::Mds(a) => a.combinations(),
            Answer::Partition(a) => a.sums(),
        }
    }
}

/// Computes the scheme answer for any well-formed query.
pub fn answer_query(query: &Query, db: &Database) -> Result<Answer> {
    match query {
        Query::Mds(q) => Ok(Answer::Mds(mds::answer(q, db)?)),
        Query::Partition(q) => Ok(Answer::Partition(partition::answer(q, db)?)),
    }
}

/// Decodes the demand message; the query and answer must be of one scheme.
pub fn decode_answer(
    query: &Query,
    answer: &Answer,
    cfg: &SideInfoConfig,
    side: &SideMessages,
) -> Result<FieldVector> {
    match (query, answer) {
        (Query::Mds(q), Answer::Mds(a)) => mds::decode(q, a, cfg, side),
        (Query::Partition(q), Answer::Partition(a)) => partition::decode(q, a, cfg, side),
        _ => Err(Error::Decode("query and answer are from different schemes".into())),
    }
}

// ---------------------------------------------------------------------------
// byte encoding

/// Sequential little-endian reader that names the field a failure occurred at.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Wire(format!("truncated: missing {what}")));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Guards a count field read off the wire: `count` items of `item_size`
    /// bytes must still fit in the payload. Keeps a hostile length field
    /// from driving a huge allocation.
    pub fn expect_items(&self, count: usize, item_size: usize, what: &str) -> Result<()> {
        let remaining = self.bytes.len() - self.pos;
        if count.checked_mul(item_size).is_none_or(|needed| needed > remaining) {
            return Err(Error::Wire(format!(
                "declared {count} {what} but only {remaining} bytes remain"
            )));
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Wire(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn serialize_query(query: &Query) -> Vec<u8> {
    let mut out = Vec::new();
    match query {
        Query::Mds(q) => {
            out.push(TAG_MDS_QUERY);
            push_u32(&mut out, q.message_count() as u32);
            push_u32(&mut out, q.m1() as u32);
            push_u32(&mut out, q.m2() as u32);
            push_u32(&mut out, q.modulus());
            push_u32(&mut out, q.combination_count() as u32);
            for &e in q.generator().entries() {
                push_u32(&mut out, e);
            }
        }
        Query::Partition(q) => {
            out.push(TAG_PARTITION_QUERY);
            push_u32(&mut out, q.message_count() as u32);
            push_u32(&mut out, q.m1() as u32);
            push_u32(&mut out, q.m2() as u32);
            push_u32(&mut out, q.combination_count() as u32);
            for part in q.parts() {
                push_u32(&mut out, part.len() as u32);
                for &index in part {
                    push_u32(&mut out, index as u32);
                }
            }
        }
    }
    out
}

pub fn deserialize_query(bytes: &[u8]) -> Result<Query> {
    let mut r = ByteReader::new(bytes);
    let tag = r.u8("scheme tag")?;
    match tag {
        TAG_MDS_QUERY => {
            let k = r.u32("K")? as usize;
            let m1 = r.u32("M1")? as usize;
            let m2 = r.u32("M2")? as usize;
            let q = r.u32("q")?;
            let p = r.u32("P")? as usize;
            if !is_prime(q) {
                return Err(Error::Wire(format!("q = {q} is not prime")));
            }
            if p != k.saturating_sub(m1 + m2) {
                return Err(Error::Wire(format!("P = {p} but K-M1-M2 = {}", k as i64 - m1 as i64 - m2 as i64)));
            }
            r.expect_items(p.saturating_mul(k), 4, "generator entries")?;
            let mut entries = Vec::with_capacity(p * k);
            for i in 0..p * k {
                let e = r.u32(&format!("generator entry {i}"))?;
                if e >= q {
                    return Err(Error::Wire(format!("generator entry {i} is {e}, not a residue mod {q}")));
                }
                entries.push(e);
            }
            r.finish()?;
            let generator = FieldMatrix::from_entries(p, k, q, entries);
            let query = MdsQuery::from_parts(k, m1, m2, q, generator)
                .map_err(|e| Error::Wire(e.to_string()))?;
            Ok(Query::Mds(query))
        }
        TAG_PARTITION_QUERY => {
            let k = r.u32("K")? as usize;
            let m1 = r.u32("M1")? as usize;
            let m2 = r.u32("M2")? as usize;
            let p = r.u32("P")? as usize;
            r.expect_items(p, 4, "parts")?;
            let mut parts = Vec::with_capacity(p);
            for i in 0..p {
                let size = r.u32(&format!("part {} size", i + 1))? as usize;
                r.expect_items(size, 4, "part indices")?;
                let mut part = Vec::with_capacity(size);
                for j in 0..size {
                    part.push(r.u32(&format!("part {} index {}", i + 1, j + 1))? as usize);
                }
                parts.push(part);
            }
            r.finish()?;
            let query = PartitionQuery::from_parts(k, m1, m2, parts)
                .map_err(|e| Error::Wire(e.to_string()))?;
            Ok(Query::Partition(query))
        }
        other => Err(Error::Wire(format!("unknown query tag 0x{other:02X}"))),
    }
}

pub fn serialize_answer(answer: &Answer) -> Vec<u8> {
    let tag = match answer {
        Answer::Mds(_) => TAG_MDS_ANSWER,
        Answer::Partition(_) => TAG_PARTITION_ANSWER,
    };
    let mut out = vec![tag];
    push_u32(&mut out, answer.combination_count() as u32);
    push_u32(&mut out, answer.message_len() as u32);
    for v in answer.vectors() {
        for &sym in v.values() {
            push_u32(&mut out, sym);
        }
    }
    out
}

/// Decodes an answer; `q` is the field the symbols live in (the answer wire
/// form does not repeat it; the client already knows its own field).
pub fn deserialize_answer(bytes: &[u8], q: u32) -> Result<Answer> {
    let mut r = ByteReader::new(bytes);
    let tag = r.u8("answer tag")?;
    if tag != TAG_MDS_ANSWER && tag != TAG_PARTITION_ANSWER {
        return Err(Error::Wire(format!("unknown answer tag 0x{tag:02X}")));
    }
    let p = r.u32("P")? as usize;
    let n = r.u32("n")? as usize;
    if p == 0 || n == 0 {
        return Err(Error::Wire(format!("degenerate answer shape P={p}, n={n}")));
    }
    r.expect_items(p.saturating_mul(n), 4, "answer symbols")?;
    let mut vectors = Vec::with_capacity(p);
    for i in 0..p {
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let sym = r.u32(&format!("combination {} symbol {}", i + 1, j + 1))?;
            if sym >= q {
                return Err(Error::Wire(format!(
                    "combination {} symbol {} is {sym}, not a residue mod {q}",
                    i + 1,
                    j + 1
                )));
            }
            values.push(sym);
        }
        vectors.push(FieldVector::new(q, values));
    }
    r.finish()?;
    Ok(match tag {
        TAG_MDS_ANSWER => Answer::Mds(MdsAnswer::new(vectors)),
        _ => Answer::Partition(PartitionAnswer::new(vectors)),
    })
}

fn encode_error_payload(message: &str) -> Vec<u8> {
    let bytes = message.as_bytes();
    let len = bytes.len().min(u16::MAX as usize);
    let mut out = vec![TAG_ERROR];
    out.extend_from_slice(&(len as u16).to_le_bytes());
    out.extend_from_slice(&bytes[..len]);
    out
}

/// If the payload is an error frame, extract its message.
pub fn parse_error_payload(bytes: &[u8]) -> Option<String> {
    if bytes.first() != Some(&TAG_ERROR) {
        return None;
    }
    let mut r = ByteReader::new(&bytes[1..]);
    let len = r.u16("error length").ok()? as usize;
    let msg = r.take(len, "error message").ok()?;
    Some(String::from_utf8_lossy(msg).into_owned())
}

// ---------------------------------------------------------------------------
// framing

/// Writes a length-prefixed frame (u32 big-endian length, then payload).
pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> Result<()> {
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame, enforcing the size cap.
pub fn read_frame(r: &mut impl Read, max_len: u32) -> Result<Vec<u8>> {
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)
        .map_err(|e| Error::Wire(format!("truncated: missing frame length ({e})")))?;
    let len = u32::from_be_bytes(len_bytes);
    if len > max_len {
        return Err(Error::Wire(format!("frame of {len} bytes exceeds cap {max_len}")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)
        .map_err(|e| Error::Wire(format!("truncated: frame body ({e})")))?;
    Ok(payload)
}

// ---------------------------------------------------------------------------
// server

/// One-query-per-connection PIR server over a read-only database.
pub struct PirServer {
    listener: TcpListener,
    db: Arc<Database>,
    shutdown: Arc<AtomicBool>,
}

impl PirServer {
    pub fn bind(endpoint: impl ToSocketAddrs, db: Database) -> Result<Self> {
        let listener = TcpListener::bind(endpoint)?;
        Ok(PirServer {
            listener,
            db: Arc::new(db),
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accept loop; returns only after [`ServerHandle::shutdown`] (or an
    /// accept error). Each connection is handled on its own thread.
    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            {
                let stream = stream?;
                let db = Arc::clone(&self.db);
                thread::spawn(move || handle_connection(stream, &db));
            }
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let shutdown = Arc::clone(&self.shutdown);
        let thread = thread::spawn(move || {
            let _ = self.run();
        });
        Ok(ServerHandle { addr, shutdown, thread })
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: thread::JoinHandle<()>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops the accept loop and joins the server thread.
    pub fn shutdown(self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        let _ = self.thread.join();
    }
}

fn handle_connection(mut stream: TcpStream, db: &Database) {
    let _ = stream.set_read_timeout(Some(READ_TIMEOUT));
    let reply = serve_one(&mut stream, db);
    let payload = match reply {
        Ok(payload) => payload,
        Err(e) => encode_error_payload(&e.to_string()),
    };
    let _ = write_frame(&mut stream, &payload);
}

fn serve_one(stream: &mut TcpStream, db: &Database) -> Result<Vec<u8>> {
    let payload = read_frame(stream, DEFAULT_MAX_FRAME)?;
    let query = deserialize_query(&payload)?;
    if query.message_count() != db.message_count() {
        return Err(Error::InvalidParameter(format!(
            "query is for K={} but this server stores K={}",
            query.message_count(),
            db.message_count()
        )));
    }
    if let Query::Mds(q) = &query {
        if q.modulus() != db.modulus() {
            return Err(Error::InvalidParameter(format!(
                "query field GF({}) differs from server field GF({})",
                q.modulus(),
                db.modulus()
            )));
        }
    }
    let answer = answer_query(&query, db)?;
    Ok(serialize_answer(&answer))
}

// ---------------------------------------------------------------------------
// client

/// Byte and symbol accounting for one retrieval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionStats {
    pub bytes_up: u64,
    pub bytes_down: u64,
    /// Field symbols in the answer, the quantity the rate is defined over.
    pub symbols_down: u64,
    /// n / symbols_down as an exact rational (equals 1/P).
    pub achieved_rate: Rational,
    pub scheme: SchemeKind,
}

impl fmt::Display for SessionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scheme={} rate={} symbols_down={} bytes_up={} bytes_down={}",
            self.scheme, self.achieved_rate, self.symbols_down, self.bytes_up, self.bytes_down
        )
    }
}

/// Full retrieval flow against a remote server: build the query for `cfg`,
/// send it, decode the answer with the side messages, return X_W and the
/// session accounting. `q` must match the server's field when the MDS scheme
/// is used.
pub fn retrieve(
    endpoint: impl ToSocketAddrs,
    k: usize,
    q: u32,
    cfg: &SideInfoConfig,
    side: &SideMessages,
    select: SchemeSelect,
    chooser: &mut dyn Chooser,
) -> Result<(FieldVector, SessionStats)> {
    let kind = match select {
        SchemeSelect::Auto => choose_scheme(k, cfg.m1(), cfg.m2())?,
        SchemeSelect::Force(kind) => kind,
    };
    let query = Query::build(kind, k, q, cfg, chooser)?;
    let query_payload = serialize_query(&query);

    let mut stream = TcpStream::connect(endpoint)?;
    let _ = stream.set_read_timeout(Some(READ_TIMEOUT));
    write_frame(&mut stream, &query_payload)?;
    let answer_payload = read_frame(&mut stream, DEFAULT_MAX_FRAME)?;
    drop(stream);

    if let Some(message) = parse_error_payload(&answer_payload) {
        return Err(Error::Server(message));
    }
    let answer = deserialize_answer(&answer_payload, q)?;
    if answer.kind() != kind {
        return Err(Error::Wire(format!(
            "asked the {kind} scheme but the answer is tagged {}",
            answer.kind()
        )));
    }
    let message = decode_answer(&query, &answer, cfg, side)?;
    let stats = SessionStats {
        bytes_up: 4 + query_payload.len() as u64,
        bytes_down: 4 + answer_payload.len() as u64,
        symbols_down: answer.symbol_count() as u64,
        achieved_rate: ratio(answer.message_len() as i64, answer.symbol_count() as i64),
        scheme: kind,
    };
    Ok((message, stats))
}

/// Side messages for R ∪ S drawn from a local database copy.
pub fn side_messages_from(db: &Database, indices: &BTreeSet<usize>) -> SideMessages {
    db.side_messages(indices)
}
