//! Report rendering and atomic file output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::UserId;
use crate::layers::{KStarSummary, LayerStats, PopulationReport, RunningStat};

/// Writes a file through a temporary sibling that is renamed into place, so
/// readers see either the old file or the complete new one.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&File>) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = output_file_builder()
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    {
        let mut out = BufWriter::with_capacity(1 << 20, tmp.as_file());
        fill(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(unix)]
fn output_file_builder() -> tempfile::Builder<'static, 'static> {
    use std::os::unix::fs::PermissionsExt;
    let mut builder = tempfile::Builder::new();
    builder.permissions(std::fs::Permissions::from_mode(0o644));
    builder
}

#[cfg(not(unix))]
fn output_file_builder() -> tempfile::Builder<'static, 'static> {
    tempfile::Builder::new()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_format: &'static str,
    pub mode: &'static str,
    pub k: Option<usize>,
    pub k_max: Option<usize>,
    pub min_ego_rate: f64,
    pub min_edge_freq: f64,
    pub reconstruct_fraction: f64,
    pub seed: Option<u64>,
    pub download_time: Option<u64>,
    pub span_days: f64,
    pub ego_list: bool,
    pub dbscan_check: bool,
}

/// Ego counts through the filtering stages. `analyzed + skipped = active`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterCounts {
    /// Users with at least one nonzero relationship.
    pub egos_built: usize,
    /// Dropped because they were absent from the ego list.
    pub egos_unlisted: usize,
    /// Dropped by the ego activity filter.
    pub egos_inactive: usize,
    pub egos_active: usize,
    /// Active egos with no relationship above the edge threshold.
    pub egos_skipped: usize,
    pub egos_analyzed: usize,
    /// Analyzed egos left out of the layer table for having fewer than k
    /// distinct frequencies.
    pub egos_below_k: usize,
    pub relationships_total: usize,
    pub relationships_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbscanLayer {
    pub index: usize,
    pub mean_cumulative_size: f64,
    pub sd_cumulative_size: f64,
    pub se_cumulative_size: f64,
    pub kmeans_mean_cumulative_size: f64,
    /// Mean of |DBSCAN - k-means| cumulative size over compared egos.
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbscanEgo {
    pub ego: UserId,
    pub exact: bool,
    pub kmeans_sizes: Vec<usize>,
    pub dbscan_sizes: Vec<usize>,
    pub noise: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbscanSummary {
    /// Egos whose calibration hit the k-means cluster count exactly; only
    /// these enter the per-layer statistics.
    pub egos_exact: usize,
    pub egos_inexact: usize,
    pub egos_infeasible: usize,
    pub layers: Vec<DbscanLayer>,
    pub egos: Vec<DbscanEgo>,
}

impl DbscanSummary {
    pub fn from_egos(k: usize, egos: Vec<DbscanEgo>, egos_infeasible: usize) -> Self {
        let mut dbscan = vec![RunningStat::default(); k];
        let mut kmeans = vec![RunningStat::default(); k];
        let mut diff = vec![RunningStat::default(); k];
        let mut max_diff = vec![0.0f64; k];
        for e in egos.iter().filter(|e| e.exact) {
            let cum = |sizes: &[usize]| -> Vec<f64> {
                sizes
                    .iter()
                    .scan(0usize, |acc, s| {
                        *acc += s;
                        Some(*acc as f64)
                    })
                    .collect()
            };
            let (d, m) = (cum(&e.dbscan_sizes), cum(&e.kmeans_sizes));
            for i in 0..k {
                dbscan[i].push(d[i]);
                kmeans[i].push(m[i]);
                diff[i].push((d[i] - m[i]).abs());
                max_diff[i] = max_diff[i].max((d[i] - m[i]).abs());
            }
        }
        let egos_exact = egos.iter().filter(|e| e.exact).count();
        DbscanSummary {
            egos_exact,
            egos_inexact: egos.len() - egos_exact,
            egos_infeasible,
            layers: (0..k)
                .map(|i| DbscanLayer {
                    index: i,
                    mean_cumulative_size: dbscan[i].mean(),
                    sd_cumulative_size: dbscan[i].sd(),
                    se_cumulative_size: dbscan[i].se(),
                    kmeans_mean_cumulative_size: kmeans[i].mean(),
                    mean_abs_diff: diff[i].mean(),
                    max_abs_diff: max_diff[i],
                })
                .collect(),
            egos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcdfTables {
    pub contact_frequency: Vec<(f64, f64)>,
    pub ego_network_size: Vec<(f64, f64)>,
    pub active_network_size: Vec<(f64, f64)>,
}

impl CcdfTables {
    fn named(&self) -> [(&'static str, &[(f64, f64)]); 3] {
        [
            ("contact_frequency", &self.contact_frequency),
            ("ego_network_size", &self.ego_network_size),
            ("active_network_size", &self.active_network_size),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub meta: Meta,
    pub filters: FilterCounts,
    pub kstar_distribution: Option<KStarSummary>,
    pub mean_silhouette: Option<f64>,
    /// Number of clusters behind the layer table.
    pub k: Option<usize>,
    pub layer_egos: usize,
    pub layers: Vec<LayerStats>,
    pub scaling_ratios: Vec<f64>,
    pub mean_ego_ratios: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dbscan_layers: Option<DbscanSummary>,
    pub ccdf: CcdfTables,
}

impl AnalysisReport {
    pub fn set_population(&mut self, population: Option<PopulationReport>) {
        if let Some(p) = population {
            self.k = Some(p.k);
            self.layer_egos = p.egos;
            self.layers = p.layers;
            self.scaling_ratios = p.scaling_ratios;
            self.mean_ego_ratios = p.mean_ego_ratios;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Per-layer table: one row per layer.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(
            out,
            "layer,mean_annulus_size,mean_cumulative_size,sd_cumulative_size,se_cumulative_size,\
             mean_min_freq,sd_min_freq,se_min_freq"
        )?;
        if self.dbscan_layers.is_some() {
            write!(
                out,
                ",dbscan_mean_cumulative_size,dbscan_sd_cumulative_size,dbscan_mean_abs_diff"
            )?;
        }
        writeln!(out)?;
        for (i, l) in self.layers.iter().enumerate() {
            write!(
                out,
                "{},{},{},{},{},{},{},{}",
                l.index,
                l.mean_annulus_size,
                l.mean_cumulative_size,
                l.sd_cumulative_size,
                l.se_cumulative_size,
                l.mean_min_freq,
                l.sd_min_freq,
                l.se_min_freq
            )?;
            if let Some(d) = self.dbscan_layers.as_ref().and_then(|d| d.layers.get(i)) {
                write!(
                    out,
                    ",{},{},{}",
                    d.mean_cumulative_size, d.sd_cumulative_size, d.mean_abs_diff
                )?;
            }
            writeln!(out)?;
        }
        out.flush()
    }

    /// Writes one `x,ccdf` table per distribution into `dir`.
    pub fn write_ccdf_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, table) in self.ccdf.named() {
            write_atomic(&dir.join(format!("{name}.csv")), |w| {
                writeln!(w, "x,ccdf")?;
                for (x, p) in table {
                    writeln!(w, "{x},{p}")?;
                }
                Ok(())
            })?;
        }
        Ok(())
    }
}
