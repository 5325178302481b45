//! Per-ego relationship lists weighted by contact frequency, plus the ego and
//! edge activity filters.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{EdgeStore, StoreKind, Timestamp, UserId, WindowCounts, SECONDS_PER_DAY};

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const MONTHS_PER_YEAR: f64 = 12.0;

/// Shortest duration a relationship may have: one day.
pub const MIN_DURATION_YEARS: f64 = 1.0 / DAYS_PER_YEAR;

/// Right endpoints, in days, of the first three count windows. The fourth
/// window ends at the dataset span.
pub const WINDOW_ENDS_DAYS: [f64; 3] = [30.0, 182.5, 365.25];

pub const DEFAULT_MIN_EGO_RATE: f64 = 10.0;
pub const DEFAULT_MIN_EDGE_FREQ: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relationship {
    pub alter: UserId,
    pub n_interactions: u64,
    pub duration_years: f64,
    /// Interactions per year.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoNetwork {
    pub ego: UserId,
    /// Sorted by descending frequency, ties by ascending alter id.
    pub relationships: Vec<Relationship>,
    pub span_years: f64,
}

impl EgoNetwork {
    pub fn new(ego: UserId, mut relationships: Vec<Relationship>, span_years: f64) -> Self {
        relationships.sort_by(relationship_order);
        EgoNetwork {
            ego,
            relationships,
            span_years,
        }
    }

    pub fn len(&self) -> usize {
        self.relationships.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relationships.is_empty()
    }

    pub fn total_interactions(&self) -> u64 {
        self.relationships.iter().map(|r| r.n_interactions).sum()
    }

    /// Average interactions per month over the observation span.
    pub fn monthly_rate(&self) -> Result<f64> {
        if self.span_years.is_nan() || self.span_years <= 0.0 {
            return Err(Error::Contract(format!(
                "ego {} has non-positive observation span {}",
                self.ego, self.span_years
            )));
        }
        Ok(self.total_interactions() as f64 / (self.span_years * MONTHS_PER_YEAR))
    }

    /// Frequencies in descending order.
    pub fn frequencies(&self) -> Vec<f64> {
        self.relationships.iter().map(|r| r.frequency).collect()
    }
}

fn relationship_order(x: &Relationship, y: &Relationship) -> Ordering {
    y.frequency
        .total_cmp(&x.frequency)
        .then(x.alter.cmp(&y.alter))
}

/// `n / d` with `d` clamped to at least one day.
pub fn contact_frequency(n: u64, duration_years: f64) -> f64 {
    n as f64 / duration_years.max(MIN_DURATION_YEARS)
}

/// Years from first contact to the download, clamped to at least one day.
pub fn edge_duration_events(first: Timestamp, download_time: Timestamp) -> Result<f64> {
    if first > download_time {
        return Err(Error::Validation {
            line: 0,
            message: format!(
                "first interaction {first} is after the download time {download_time}"
            ),
        });
    }
    let days = (download_time - first) as f64 / SECONDS_PER_DAY;
    Ok((days / DAYS_PER_YEAR).max(MIN_DURATION_YEARS))
}

/// Duration of a windowed edge: the right endpoint of the oldest window with a
/// nonzero incremental count, using windows ending at 30, 182.5, 365.25 and
/// `span_days` days. Endpoints beyond the dataset span are clamped to it.
pub fn edge_duration_windowed(counts: &WindowCounts, span_days: f64) -> Result<f64> {
    let increments = counts.increments();
    let oldest = increments.iter().rposition(|&c| c > 0).ok_or_else(|| {
        Error::Contract("duration of an all-zero windowed edge is undefined".into())
    })?;
    let days = match oldest {
        3 => span_days,
        i => WINDOW_ENDS_DAYS[i].min(span_days),
    };
    Ok((days / DAYS_PER_YEAR).max(MIN_DURATION_YEARS))
}

#[derive(Default)]
struct PairTally {
    count: u64,
    first: Option<Timestamp>,
    windows: Option<WindowCounts>,
}

/// Alter, interaction count, duration in years and first contact.
type Incident = (UserId, u64, f64, Option<Timestamp>);

/// Groups the store by ego. Event stores contribute both directions of a pair
/// to a single relationship; zero-count edges are ignored.
pub fn build_ego_networks(store: &EdgeStore) -> Result<Vec<EgoNetwork>> {
    // Undirected pair -> summed tally.
    let mut pairs: BTreeMap<(UserId, UserId), PairTally> = BTreeMap::new();
    for edge in store.edges().iter().filter(|e| e.count > 0) {
        let key = (edge.a.min(edge.b), edge.a.max(edge.b));
        let tally = pairs.entry(key).or_default();
        tally.count += edge.count;
        tally.first = match (tally.first, edge.first) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        tally.windows = edge.windows;
    }

    let span_days = store.span_days();
    let mut adjacency: BTreeMap<UserId, Vec<Incident>> = BTreeMap::new();
    for ((a, b), tally) in &pairs {
        let years = match (store.kind(), tally.first, tally.windows) {
            (StoreKind::Events, Some(first), _) => {
                let download = store.download_time().unwrap_or(first);
                edge_duration_events(first, download)?
            }
            (StoreKind::Windowed, _, Some(w)) => edge_duration_windowed(&w, span_days)?,
            _ => {
                return Err(Error::Contract(format!(
                    "edge {{{a},{b}}} carries no timing information"
                )))
            }
        };
        adjacency
            .entry(*a)
            .or_default()
            .push((*b, tally.count, years, tally.first));
        adjacency
            .entry(*b)
            .or_default()
            .push((*a, tally.count, years, tally.first));
    }

    let adjacency: Vec<_> = adjacency.into_iter().collect();
    Ok(adjacency
        .into_par_iter()
        .map(|(ego, alters)| {
            let span_years = match (store.kind(), store.download_time()) {
                (StoreKind::Events, Some(download)) => {
                    let earliest = alters.iter().filter_map(|a| a.3).min().unwrap_or(download);
                    edge_duration_events(earliest, download).unwrap_or(MIN_DURATION_YEARS)
                }
                _ => span_days / DAYS_PER_YEAR,
            };
            let relationships = alters
                .into_iter()
                .map(|(alter, n, years, _)| Relationship {
                    alter,
                    n_interactions: n,
                    duration_years: years,
                    frequency: contact_frequency(n, years),
                })
                .collect();
            EgoNetwork::new(ego, relationships, span_years)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveEgos {
    pub kept: Vec<EgoNetwork>,
    pub discarded: usize,
}

/// Keeps egos averaging strictly more than `min_rate` interactions per month.
pub fn filter_active_egos(egos: Vec<EgoNetwork>, min_rate: f64) -> Result<ActiveEgos> {
    let verdicts = egos
        .par_iter()
        .map(|ego| ego.monthly_rate().map(|rate| rate > min_rate))
        .collect::<Result<Vec<_>>>()?;
    let total = egos.len();
    let kept: Vec<_> = egos
        .into_iter()
        .zip(verdicts)
        .filter_map(|(ego, keep)| keep.then_some(ego))
        .collect();
    Ok(ActiveEgos {
        discarded: total - kept.len(),
        kept,
    })
}

/// Keeps relationships with frequency strictly above `min_freq`.
pub fn filter_active_edges(ego: &EgoNetwork, min_freq: f64) -> EgoNetwork {
    EgoNetwork {
        ego: ego.ego,
        relationships: ego
            .relationships
            .iter()
            .filter(|r| r.frequency > min_freq)
            .copied()
            .collect(),
        span_years: ego.span_years,
    }
}
