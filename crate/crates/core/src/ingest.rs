//! Interaction-log ingestion.
//!
//! Two CSV layouts are supported, both with a mandatory header and integer
//! fields:
//!
//! * event logs, `src,dst,timestamp`: one directed post per row;
//! * windowed logs, `a,b,c1,c2,c3,c4`: one undirected edge per row with
//!   cumulative counts over the last month, six months, year and the whole
//!   link lifetime.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type UserId = u64;

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = u64;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

pub const EVENT_HEADER: [&str; 3] = ["src", "dst", "timestamp"];
pub const WINDOWED_HEADER: [&str; 6] = ["a", "b", "c1", "c2", "c3", "c4"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InteractionEvent {
    pub src: UserId,
    pub dst: UserId,
    pub timestamp: Timestamp,
}

/// Cumulative interaction counts over the four nested time windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct WindowCounts([u64; 4]);

impl WindowCounts {
    pub fn new(counts: [u64; 4]) -> Result<Self> {
        if counts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument(format!(
                "window counts {counts:?} are not cumulative (c1 <= c2 <= c3 <= c4)"
            )));
        }
        Ok(WindowCounts(counts))
    }

    pub fn counts(&self) -> [u64; 4] {
        self.0
    }

    /// Interactions that fall into each window but not the previous one.
    pub fn increments(&self) -> [u64; 4] {
        let c = self.0;
        [c[0], c[1] - c[0], c[2] - c[1], c[3] - c[2]]
    }

    /// Interactions over the entire link lifetime.
    pub fn total(&self) -> u64 {
        self.0[3]
    }

    pub fn is_zero(&self) -> bool {
        self.0[3] == 0
    }

    fn doubled(&self) -> Option<Self> {
        let mut out = [0u64; 4];
        for (o, c) in out.iter_mut().zip(self.0) {
            *o = c.checked_mul(2)?;
        }
        Some(WindowCounts(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowedEdge {
    pub a: UserId,
    pub b: UserId,
    pub counts: WindowCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreKind {
    /// Directed `(src, dst)` pairs from a timestamped event log.
    Events,
    /// Undirected pairs from a windowed-count log, keyed with `a < b`.
    Windowed,
}

/// One aggregated edge.
///
/// For event stores `(a, b)` is the ordered `(src, dst)` pair and `first` the
/// earliest event; for windowed stores `a < b` and `windows` carries the
/// per-window counts, with `count == windows.total()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub a: UserId,
    pub b: UserId,
    pub count: u64,
    pub first: Option<Timestamp>,
    pub windows: Option<WindowCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStore {
    kind: StoreKind,
    span_days: f64,
    download_time: Option<Timestamp>,
    nodes: Vec<UserId>,
    edges: Vec<Edge>,
}

impl EdgeStore {
    pub fn kind(&self) -> StoreKind {
        self.kind
    }

    /// Dataset span T in days. For event logs this runs from the earliest
    /// event to the download time.
    pub fn span_days(&self) -> f64 {
        self.span_days
    }

    pub fn download_time(&self) -> Option<Timestamp> {
        self.download_time
    }

    /// Sorted node index.
    pub fn nodes(&self) -> &[UserId] {
        &self.nodes
    }

    /// Edges sorted by `(a, b)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, a: UserId, b: UserId) -> Option<&Edge> {
        let key = match self.kind {
            StoreKind::Events => (a, b),
            StoreKind::Windowed => (a.min(b), a.max(b)),
        };
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&key))
            .ok()
            .map(|i| &self.edges[i])
    }

    /// Sum of stored interaction counts.
    pub fn total_count(&self) -> u64 {
        self.edges.iter().map(|e| e.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn from_parts(
        kind: StoreKind,
        span_days: f64,
        download_time: Option<Timestamp>,
        mut edges: Vec<Edge>,
    ) -> Self {
        edges.par_sort_unstable_by_key(|e| (e.a, e.b));
        let mut nodes: Vec<UserId> = edges.iter().flat_map(|e| [e.a, e.b]).collect();
        nodes.par_sort_unstable();
        nodes.dedup();
        EdgeStore {
            kind,
            span_days,
            download_time,
            nodes,
            edges,
        }
    }
}

fn check_header(record: &csv::ByteRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<String> = record
        .iter()
        .map(|f| String::from_utf8_lossy(f).trim().to_string())
        .collect();
    if found.len() != expected.len() || found.iter().zip(expected).any(|(f, e)| f != e) {
        return Err(Error::parse(
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        ));
    }
    Ok(())
}

fn read_header<R: Read>(
    reader: &mut csv::Reader<R>,
    record: &mut csv::ByteRecord,
    expected: &[&str],
) -> Result<()> {
    if !reader.read_byte_record(record)? {
        return Err(Error::parse(
            1,
            format!("missing header `{}`", expected.join(",")),
        ));
    }
    check_header(record, expected)
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_field(record: &csv::ByteRecord, index: usize, name: &str, line: u64) -> Result<u64> {
    let raw = &record[index];
    std::str::from_utf8(raw)
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| {
            Error::parse(
                line,
                format!(
                    "field `{name}` is not a non-negative integer: `{}`",
                    String::from_utf8_lossy(raw)
                ),
            )
        })
}

fn record_line(record: &csv::ByteRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn check_arity(record: &csv::ByteRecord, expected: usize, line: u64) -> Result<()> {
    if record.len() != expected {
        return Err(Error::parse(
            line,
            format!("expected {expected} fields, found {}", record.len()),
        ));
    }
    Ok(())
}

/// Parses a `src,dst,timestamp` event log into a directed edge store with one
/// entry per ordered pair, carrying the event count and earliest timestamp.
pub fn parse_event_log<R: Read>(input: R, download_time: Timestamp) -> Result<EdgeStore> {
    let mut reader = csv_reader(input);
    let mut record = csv::ByteRecord::new();
    read_header(&mut reader, &mut record, &EVENT_HEADER)?;

    let mut tally: HashMap<(UserId, UserId), (u64, Timestamp)> = HashMap::new();
    let mut earliest = download_time;
    while reader.read_byte_record(&mut record)? {
        let line = record_line(&record);
        check_arity(&record, 3, line)?;
        let src = parse_field(&record, 0, "src", line)?;
        let dst = parse_field(&record, 1, "dst", line)?;
        let timestamp = parse_field(&record, 2, "timestamp", line)?;
        if src == dst {
            return Err(Error::validation(
                line,
                format!("self-interaction of user {src}"),
            ));
        }
        if timestamp > download_time {
            return Err(Error::validation(
                line,
                format!("timestamp {timestamp} is after the download time {download_time}"),
            ));
        }
        earliest = earliest.min(timestamp);
        match tally.entry((src, dst)) {
            Entry::Occupied(mut slot) => {
                let (count, first) = slot.get_mut();
                *count += 1;
                *first = (*first).min(timestamp);
            }
            Entry::Vacant(slot) => {
                slot.insert((1, timestamp));
            }
        }
    }

    let edges = tally
        .into_iter()
        .map(|((a, b), (count, first))| Edge {
            a,
            b,
            count,
            first: Some(first),
            windows: None,
        })
        .collect();
    let span_days = (download_time - earliest) as f64 / SECONDS_PER_DAY;
    Ok(EdgeStore::from_parts(
        StoreKind::Events,
        span_days,
        Some(download_time),
        edges,
    ))
}

/// Parses an `a,b,c1,c2,c3,c4` windowed log into an undirected edge store.
///
/// Each unordered pair may appear once; all-zero rows are kept so their
/// endpoints stay in the node index.
pub fn parse_windowed_edges<R: Read>(input: R, span_days: f64) -> Result<EdgeStore> {
    if !(span_days.is_finite() && span_days > 0.0) {
        return Err(Error::Argument(format!(
            "dataset span must be a positive number of days, got {span_days}"
        )));
    }
    let mut reader = csv_reader(input);
    let mut record = csv::ByteRecord::new();
    read_header(&mut reader, &mut record, &WINDOWED_HEADER)?;

    let mut seen: HashMap<(UserId, UserId), u64> = HashMap::new();
    let mut edges = Vec::new();
    while reader.read_byte_record(&mut record)? {
        let line = record_line(&record);
        check_arity(&record, 6, line)?;
        let a = parse_field(&record, 0, "a", line)?;
        let b = parse_field(&record, 1, "b", line)?;
        let mut counts = [0u64; 4];
        for (i, slot) in counts.iter_mut().enumerate() {
            *slot = parse_field(&record, i + 2, WINDOWED_HEADER[i + 2], line)?;
        }
        if a == b {
            return Err(Error::validation(line, format!("self-edge on user {a}")));
        }
        let windows = WindowCounts::new(counts).map_err(|_| {
            Error::validation(
                line,
                format!("edge {{{a},{b}}}: counts {counts:?} violate c1 <= c2 <= c3 <= c4"),
            )
        })?;
        let key = (a.min(b), a.max(b));
        if let Some(previous) = seen.insert(key, line) {
            return Err(Error::validation(
                line,
                format!(
                    "duplicate edge {{{},{}}} (first seen on line {previous})",
                    key.0, key.1
                ),
            ));
        }
        edges.push(Edge {
            a: key.0,
            b: key.1,
            count: windows.total(),
            first: None,
            windows: Some(windows),
        });
    }
    Ok(EdgeStore::from_parts(
        StoreKind::Windowed,
        span_days,
        None,
        edges,
    ))
}

/// Number of nodes to sample: `ceil(fraction * n)`, with products that land
/// within rounding noise of an integer treated as that integer.
pub fn sample_size(fraction: f64, n: usize) -> usize {
    let product = fraction * n as f64;
    let nearest = product.round();
    let size = if (product - nearest).abs() <= 1e-9 * product.max(1.0) {
        nearest
    } else {
        product.ceil()
    };
    (size as usize).min(n)
}

/// Imputes unobserved interaction directions.
///
/// Samples `ceil(fraction * N)` nodes without replacement and doubles the
/// counts (every window, for windowed stores) of each edge touching at least
/// one sampled node. An edge is doubled once even when both endpoints are
/// sampled; zero counts stay zero.
pub fn reconstruct_missing(store: &EdgeStore, fraction: f64, seed: u64) -> Result<EdgeStore> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Argument(format!(
            "reconstruction fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let sampled = sample_nodes(store.nodes(), fraction, seed);
    let is_sampled = |id: UserId| {
        store
            .nodes
            .binary_search(&id)
            .map(|i| sampled[i])
            .unwrap_or(false)
    };

    let edges = store
        .edges
        .par_iter()
        .map(|edge| {
            if !(is_sampled(edge.a) || is_sampled(edge.b)) {
                return Ok(edge.clone());
            }
            let overflow =
                || Error::Argument(format!("count overflow on edge ({}, {})", edge.a, edge.b));
            let count = edge.count.checked_mul(2).ok_or_else(overflow)?;
            let windows = match edge.windows {
                Some(w) => Some(w.doubled().ok_or_else(overflow)?),
                None => None,
            };
            Ok(Edge {
                count,
                windows,
                ..edge.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EdgeStore {
        edges,
        ..store.clone()
    })
}

/// Membership bitmap over `nodes` for a seeded sample without replacement.
pub fn sample_nodes(nodes: &[UserId], fraction: f64, seed: u64) -> Vec<bool> {
    let n = nodes.len();
    let mut mask = vec![false; n];
    let size = sample_size(fraction, n);
    if size == 0 {
        return mask;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in rand::seq::index::sample(&mut rng, n, size) {
        mask[i] = true;
    }
    mask
}
