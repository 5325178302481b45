//! End-to-end runs: ingest, filter, cluster, nest, aggregate, report.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cluster::{kmeans_1d, select_k, KStarResult, DEFAULT_K_MAX};
use crate::density::calibrate_eps;
use crate::egonet::{build_ego_networks, filter_active_edges, filter_active_egos, EgoNetwork};
use crate::egonet::{DEFAULT_MIN_EDGE_FREQ, DEFAULT_MIN_EGO_RATE};
use crate::error::{Error, Result};
use crate::ingest::{parse_event_log, parse_windowed_edges, reconstruct_missing, UserId};
use crate::layers::{ccdf, nest_clusters, KStarSummary, LayerAccumulator, RunningStat};
use crate::report::{
    write_atomic, AnalysisReport, CcdfTables, DbscanEgo, DbscanSummary, FilterCounts, Meta,
};
use crate::synth::{generate_population, LayerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Events,
    Windowed,
}

impl InputFormat {
    fn name(self) -> &'static str {
        match self {
            InputFormat::Events => "events",
            InputFormat::Windowed => "windowed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Pick k per ego by AIC over 1..=k_max, then build layers at the modal k*.
    Select { k_max: usize },
    /// Cluster every ego with the same k.
    Fixed { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub download_time: Option<u64>,
    pub span_days: Option<f64>,
    pub reconstruct_fraction: f64,
    pub seed: Option<u64>,
    pub min_ego_rate: f64,
    pub min_edge_freq: f64,
    pub mode: Mode,
    pub dbscan_check: bool,
    /// CSV with an `ego` column; other users are not analyzed as egos.
    pub ego_list: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub report_format: ReportFormat,
    pub emit_ccdf: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, format: InputFormat) -> Self {
        RunConfig {
            input: input.into(),
            format,
            download_time: None,
            span_days: None,
            reconstruct_fraction: 0.0,
            seed: None,
            min_ego_rate: DEFAULT_MIN_EGO_RATE,
            min_edge_freq: DEFAULT_MIN_EDGE_FREQ,
            mode: Mode::Select {
                k_max: DEFAULT_K_MAX,
            },
            dbscan_check: false,
            ego_list: None,
            report: None,
            report_format: ReportFormat::Json,
            emit_ccdf: None,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        match (self.format, self.download_time, self.span_days) {
            (InputFormat::Events, None, _) => {
                return fail("event logs need --download-time".into())
            }
            (InputFormat::Events, _, Some(_)) => {
                return fail("--span-days applies to windowed logs only".into())
            }
            (InputFormat::Windowed, _, None) => {
                return fail("windowed logs need --span-days".into())
            }
            (InputFormat::Windowed, Some(_), _) => {
                return fail("--download-time applies to event logs only".into())
            }
            (InputFormat::Windowed, None, Some(t)) if !(t.is_finite() && t > 0.0) => {
                return fail(format!("--span-days must be positive, got {t}"))
            }
            _ => {}
        }
        let f = self.reconstruct_fraction;
        if !(0.0..=1.0).contains(&f) {
            return fail(format!(
                "--reconstruct-fraction must lie in [0, 1], got {f}"
            ));
        }
        match (f > 0.0, self.seed) {
            (true, None) => return fail("--seed is required with --reconstruct-fraction".into()),
            (false, Some(_)) => {
                return fail("--seed only applies together with --reconstruct-fraction".into())
            }
            _ => {}
        }
        for (flag, v) in [
            ("--min-ego-rate", self.min_ego_rate),
            ("--min-edge-freq", self.min_edge_freq),
        ] {
            if !v.is_finite() || v < 0.0 {
                return fail(format!("{flag} must be a non-negative number, got {v}"));
            }
        }
        match self.mode {
            Mode::Select { k_max: 0 } => return fail("--k-max must be at least 1".into()),
            Mode::Fixed { k: 0 } => return fail("--k must be at least 1".into()),
            _ => {}
        }
        if self.workers == Some(0) {
            return fail("--workers must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutcome {
    pub report: AnalysisReport,
    pub summary: String,
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .map_err(|e| Error::io(path, e))
}

/// Reads the `ego` column of a CSV file.
pub fn read_ego_list(path: &Path) -> Result<HashSet<UserId>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let column = reader
        .headers()?
        .iter()
        .position(|h| h == "ego")
        .ok_or_else(|| Error::parse(1, format!("{}: no `ego` column", path.display())))?;
    let mut egos = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = record.get(column).unwrap_or("");
        let id = raw
            .parse()
            .map_err(|_| Error::parse(line, format!("ego id `{raw}` is not an integer")))?;
        egos.insert(id);
    }
    Ok(egos)
}

struct EgoScan {
    ego: UserId,
    all_freqs: Vec<f64>,
    active_freqs: Vec<f64>,
    kstar: Option<KStarResult>,
}

struct EgoLayers {
    profile: Option<crate::layers::LayerProfile>,
    silhouette: Option<f64>,
    dbscan: Option<std::result::Result<DbscanEgo, ()>>,
}

fn distinct_count(sorted: &[f64]) -> usize {
    if sorted.is_empty() {
        0
    } else {
        1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

fn layers_for(scan: &EgoScan, k: usize, dbscan_check: bool) -> Result<EgoLayers> {
    let values = &scan.active_freqs;
    if distinct_count(values) < k {
        return Ok(EgoLayers {
            profile: None,
            silhouette: None,
            dbscan: None,
        });
    }
    let config = match &scan.kstar {
        Some(result) if result.k_star == k => result.config.clone(),
        _ => kmeans_1d(values, k)?,
    };
    let profile = match nest_clusters(scan.ego, values, &config) {
        Ok(p) => p,
        Err(Error::Contract(_)) => {
            return Ok(EgoLayers {
                profile: None,
                silhouette: None,
                dbscan: None,
            })
        }
        Err(e) => return Err(e),
    };
    let dbscan = if dbscan_check {
        match calibrate_eps(values, k) {
            Ok(cal) => Some(Ok(DbscanEgo {
                ego: scan.ego,
                exact: cal.exact,
                kmeans_sizes: profile.annulus_sizes.clone(),
                dbscan_sizes: cal.clustering.sizes(),
                noise: cal.clustering.noise.len(),
            })),
            Err(Error::InfeasibleTarget { .. }) => Some(Err(())),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(EgoLayers {
        silhouette: config.mean_silhouette,
        profile: Some(profile),
        dbscan,
    })
}

fn size_ccdf(sizes: impl Iterator<Item = usize>) -> Result<Vec<(f64, f64)>> {
    let values: Vec<f64> = sizes.map(|s| s as f64).collect();
    if values.is_empty() {
        Ok(Vec::new())
    } else {
        ccdf(&values)
    }
}

/// Runs the analysis and writes the requested outputs.
pub fn run_analyze(config: &RunConfig) -> Result<AnalysisOutcome> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    let report = pool.install(|| analyze(config))?;

    if let Some(path) = &config.report {
        match config.report_format {
            ReportFormat::Json => {
                let json = report.to_json()?;
                write_atomic(path, |w| std::io::Write::write_all(w, json.as_bytes()))?;
            }
            ReportFormat::Csv => write_atomic(path, |w| report.write_csv(w))?,
        }
    }
    if let Some(dir) = &config.emit_ccdf {
        report.write_ccdf_dir(dir)?;
    }
    let summary = summary_line(&report);
    Ok(AnalysisOutcome { report, summary })
}

fn summary_line(report: &AnalysisReport) -> String {
    let f = &report.filters;
    let mode = report
        .kstar_distribution
        .as_ref()
        .map_or("n/a".to_string(), |k| k.mode.to_string());
    let silhouette = report
        .mean_silhouette
        .map_or("n/a".to_string(), |s| format!("{s:.3}"));
    format!(
        "analyzed {} egos ({} skipped, {} inactive), k* mode {}, mean silhouette {}",
        f.egos_analyzed, f.egos_skipped, f.egos_inactive, mode, silhouette
    )
}

fn analyze(config: &RunConfig) -> Result<AnalysisReport> {
    let input = open(&config.input)?;
    let mut store = match config.format {
        InputFormat::Events => parse_event_log(input, config.download_time.unwrap_or_default())?,
        InputFormat::Windowed => parse_windowed_edges(input, config.span_days.unwrap_or_default())?,
    };
    if config.reconstruct_fraction > 0.0 {
        let seed = config.seed.unwrap_or_default();
        store = reconstruct_missing(&store, config.reconstruct_fraction, seed)?;
    }

    let mut egos = build_ego_networks(&store)?;
    let egos_built = egos.len();
    if let Some(path) = &config.ego_list {
        let listed = read_ego_list(path)?;
        egos.retain(|e| listed.contains(&e.ego));
    }
    let egos_unlisted = egos_built - egos.len();
    let active = filter_active_egos(egos, config.min_ego_rate)?;

    let k_max = match config.mode {
        Mode::Select { k_max } => Some(k_max),
        Mode::Fixed { .. } => None,
    };
    let scans: Vec<EgoScan> = active
        .kept
        .par_iter()
        .map(|ego: &EgoNetwork| {
            let active_net = filter_active_edges(ego, config.min_edge_freq);
            let active_freqs = active_net.frequencies();
            let kstar = match k_max {
                Some(k_max) if !active_freqs.is_empty() => Some(select_k(&active_freqs, k_max)?),
                _ => None,
            };
            Ok(EgoScan {
                ego: ego.ego,
                all_freqs: ego.frequencies(),
                active_freqs,
                kstar,
            })
        })
        .collect::<Result<_>>()?;

    let mut histogram = BTreeMap::new();
    for scan in &scans {
        if let Some(r) = &scan.kstar {
            *histogram.entry(r.k_star).or_insert(0usize) += 1;
        }
    }
    let kstar_distribution = KStarSummary::from_histogram(histogram);
    let layer_k = match config.mode {
        Mode::Fixed { k } => Some(k),
        Mode::Select { .. } => kstar_distribution.as_ref().map(|s| s.mode),
    };

    let analyzed = scans.iter().filter(|s| !s.active_freqs.is_empty()).count();
    let mut silhouette = RunningStat::default();
    if k_max.is_some() {
        for s in scans
            .iter()
            .filter_map(|s| s.kstar.as_ref()?.mean_silhouette)
        {
            silhouette.push(s);
        }
    }

    let mut layer_egos = 0;
    let mut population = None;
    let mut dbscan_layers = None;
    if let Some(k) = layer_k {
        let per_ego: Vec<EgoLayers> = scans
            .par_iter()
            .filter(|s| !s.active_freqs.is_empty())
            .map(|s| layers_for(s, k, config.dbscan_check))
            .collect::<Result<_>>()?;
        let mut acc = LayerAccumulator::new(k);
        let mut dbscan_egos = Vec::new();
        let mut infeasible = 0;
        for e in &per_ego {
            if let Some(p) = &e.profile {
                acc.push_profile(p)?;
                layer_egos += 1;
            }
            if k_max.is_none() {
                if let Some(s) = e.silhouette {
                    silhouette.push(s);
                }
            }
            match &e.dbscan {
                Some(Ok(d)) => dbscan_egos.push(d.clone()),
                Some(Err(())) => infeasible += 1,
                None => {}
            }
        }
        if layer_egos > 0 {
            population = Some(acc.finish()?);
        }
        if config.dbscan_check {
            dbscan_layers = Some(DbscanSummary::from_egos(k, dbscan_egos, infeasible));
        }
    }

    let ccdf_tables = CcdfTables {
        contact_frequency: {
            let all: Vec<f64> = scans
                .iter()
                .flat_map(|s| s.all_freqs.iter().copied())
                .collect();
            if all.is_empty() {
                Vec::new()
            } else {
                ccdf(&all)?
            }
        },
        ego_network_size: size_ccdf(scans.iter().map(|s| s.all_freqs.len()))?,
        active_network_size: size_ccdf(scans.iter().map(|s| s.active_freqs.len()))?,
    };

    let filters = FilterCounts {
        egos_built,
        egos_unlisted,
        egos_inactive: active.discarded,
        egos_active: scans.len(),
        egos_skipped: scans.len() - analyzed,
        egos_analyzed: analyzed,
        egos_below_k: if layer_k.is_some() {
            analyzed - layer_egos
        } else {
            0
        },
        relationships_total: scans.iter().map(|s| s.all_freqs.len()).sum(),
        relationships_active: scans.iter().map(|s| s.active_freqs.len()).sum(),
    };
    let (k, k_max_meta) = match config.mode {
        Mode::Fixed { k } => (Some(k), None),
        Mode::Select { k_max } => (None, Some(k_max)),
    };
    let mut report = AnalysisReport {
        meta: Meta {
            tool: "ego-layers",
            version: env!("CARGO_PKG_VERSION"),
            input_format: config.format.name(),
            mode: if k.is_some() { "fixed" } else { "select" },
            k,
            k_max: k_max_meta,
            min_ego_rate: config.min_ego_rate,
            min_edge_freq: config.min_edge_freq,
            reconstruct_fraction: config.reconstruct_fraction,
            seed: config.seed,
            download_time: store.download_time(),
            span_days: store.span_days(),
            ego_list: config.ego_list.is_some(),
            dbscan_check: config.dbscan_check,
        },
        filters,
        kstar_distribution,
        mean_silhouette: (silhouette.count() > 0).then(|| silhouette.mean()),
        k: layer_k,
        layer_egos: 0,
        layers: Vec::new(),
        scaling_ratios: Vec::new(),
        mean_ego_ratios: Vec::new(),
        dbscan_layers,
        ccdf: ccdf_tables,
    };
    report.set_population(population);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub spec: PathBuf,
    pub egos: usize,
    pub span_years: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// Generates a population and writes it to `config.out`. Returns a one-line
/// summary.
pub fn run_synth(config: &SynthConfig) -> Result<String> {
    if config.workers == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let spec = LayerSpec::from_json_file(&config.spec)?;
    let pool = thread_pool(config.workers)?;
    let population =
        pool.install(|| generate_population(&spec, config.egos, config.span_years, config.seed))?;
    population.write_dir(&config.out)?;
    Ok(format!(
        "generated {} egos, {} events into {}",
        population.egos.len(),
        population.event_count(),
        config.out.display()
    ))
}
