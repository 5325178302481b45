//! Nesting of per-ego clusters into concentric layers and population-level
//! aggregation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cluster::{ClusterConfig, KStarResult};
use crate::error::{Error, Result};
use crate::ingest::UserId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerProfile {
    pub ego: UserId,
    pub k: usize,
    /// Members per cluster, innermost (highest frequency) first.
    pub annulus_sizes: Vec<usize>,
    pub cumulative_sizes: Vec<usize>,
    /// Smallest member frequency of each annulus.
    pub min_freq: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Turns a clustering of descending-sorted `values` into nested layers.
///
/// Fails when the clusters do not produce strictly increasing layer sizes and
/// strictly decreasing minimum frequencies, which happens only when a run of
/// equal values is split.
pub fn nest_clusters(ego: UserId, values: &[f64], config: &ClusterConfig) -> Result<LayerProfile> {
    if config.n() != values.len() {
        return Err(Error::Contract(format!(
            "configuration covers {} points but {} values were given",
            config.n(),
            values.len()
        )));
    }
    let ranges = config.ranges();
    let annulus_sizes: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
    let cumulative_sizes: Vec<usize> = annulus_sizes
        .iter()
        .scan(0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let min_freq: Vec<f64> = ranges.iter().map(|r| values[r.end - 1]).collect();

    if cumulative_sizes.windows(2).any(|w| w[0] >= w[1]) || annulus_sizes.contains(&0) {
        return Err(Error::Contract(format!(
            "ego {ego}: layer sizes {cumulative_sizes:?} are not strictly increasing"
        )));
    }
    if min_freq.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Contract(format!(
            "ego {ego}: layer minimum frequencies {min_freq:?} are not strictly decreasing"
        )));
    }
    let sizes: Vec<f64> = cumulative_sizes.iter().map(|&s| s as f64).collect();
    Ok(LayerProfile {
        ego,
        k: config.k,
        ratios: scaling_ratios(&sizes),
        annulus_sizes,
        cumulative_sizes,
        min_freq,
    })
}

/// Ratios of consecutive cumulative sizes; empty for fewer than two layers.
pub fn scaling_ratios(cumulative_sizes: &[f64]) -> Vec<f64> {
    cumulative_sizes.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Empirical `P(X >= x)` at each distinct value, in ascending order of x.
pub fn ccdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Argument("cannot build a CCDF from no values".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("CCDF input contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if i == 0 || sorted[i - 1] != x {
            out.push((x, (sorted.len() - i) as f64 / n));
        }
    }
    Ok(out)
}

/// Streaming mean and variance with an associative merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStat {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStat) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let (a, b) = (self.count as f64, other.count as f64);
        self.mean += delta * b / count as f64;
        self.m2 += other.m2 + delta * delta * a * b / count as f64;
        self.count = count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; zero for fewer than two observations.
    pub fn sd(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt()
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sd() / (self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStat {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut stat = RunningStat::default();
        for x in iter {
            stat.push(x);
        }
        stat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStats {
    pub index: usize,
    pub mean_annulus_size: f64,
    pub mean_cumulative_size: f64,
    pub sd_cumulative_size: f64,
    pub se_cumulative_size: f64,
    pub mean_min_freq: f64,
    pub sd_min_freq: f64,
    pub se_min_freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KStarSummary {
    pub mean: f64,
    pub median: f64,
    pub mode: usize,
    pub histogram: BTreeMap<usize, usize>,
}

impl KStarSummary {
    pub fn from_histogram(histogram: BTreeMap<usize, usize>) -> Option<Self> {
        let total: usize = histogram.values().sum();
        if total == 0 {
            return None;
        }
        let sum: usize = histogram.iter().map(|(k, c)| k * c).sum();
        let mode = histogram
            .iter()
            .fold(
                (0, 0),
                |best, (&k, &c)| if c > best.1 { (k, c) } else { best },
            )
            .0;
        let nth = |rank: usize| {
            let mut seen = 0;
            for (&k, &c) in &histogram {
                seen += c;
                if seen > rank {
                    return k;
                }
            }
            unreachable!("rank below total")
        };
        let median = if total % 2 == 1 {
            nth(total / 2) as f64
        } else {
            (nth(total / 2 - 1) + nth(total / 2)) as f64 / 2.0
        };
        Some(KStarSummary {
            mean: sum as f64 / total as f64,
            median,
            mode,
            histogram,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationReport {
    pub k: usize,
    pub egos: usize,
    pub layers: Vec<LayerStats>,
    /// Ratios of consecutive mean cumulative sizes.
    pub scaling_ratios: Vec<f64>,
    /// Per-ego ratios averaged over the population.
    pub mean_ego_ratios: Vec<f64>,
    pub kstar: Option<KStarSummary>,
    pub mean_silhouette: Option<f64>,
}

/// Mergeable partial aggregate of layer profiles sharing one k.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAccumulator {
    k: usize,
    annulus: Vec<RunningStat>,
    cumulative: Vec<RunningStat>,
    min_freq: Vec<RunningStat>,
    ratios: Vec<RunningStat>,
    kstars: BTreeMap<usize, usize>,
    silhouette: RunningStat,
}

impl LayerAccumulator {
    pub fn new(k: usize) -> Self {
        LayerAccumulator {
            k,
            annulus: vec![RunningStat::default(); k],
            cumulative: vec![RunningStat::default(); k],
            min_freq: vec![RunningStat::default(); k],
            ratios: vec![RunningStat::default(); k.saturating_sub(1)],
            kstars: BTreeMap::new(),
            silhouette: RunningStat::default(),
        }
    }

    pub fn push_profile(&mut self, profile: &LayerProfile) -> Result<()> {
        if profile.k != self.k {
            return Err(Error::Contract(format!(
                "ego {} was clustered with k = {}, expected {}",
                profile.ego, profile.k, self.k
            )));
        }
        for i in 0..self.k {
            self.annulus[i].push(profile.annulus_sizes[i] as f64);
            self.cumulative[i].push(profile.cumulative_sizes[i] as f64);
            self.min_freq[i].push(profile.min_freq[i]);
        }
        for (stat, &r) in self.ratios.iter_mut().zip(&profile.ratios) {
            stat.push(r);
        }
        Ok(())
    }

    pub fn push_kstar(&mut self, result: &KStarResult) {
        *self.kstars.entry(result.k_star).or_default() += 1;
        if let Some(s) = result.mean_silhouette {
            self.silhouette.push(s);
        }
    }

    pub fn push_silhouette(&mut self, s: f64) {
        self.silhouette.push(s);
    }

    pub fn merge(&mut self, other: &LayerAccumulator) -> Result<()> {
        if other.k != self.k {
            return Err(Error::Contract(format!(
                "cannot merge aggregates for k = {} and k = {}",
                self.k, other.k
            )));
        }
        let pairs = [
            (&mut self.annulus, &other.annulus),
            (&mut self.cumulative, &other.cumulative),
            (&mut self.min_freq, &other.min_freq),
            (&mut self.ratios, &other.ratios),
        ];
        for (mine, theirs) in pairs {
            for (m, t) in mine.iter_mut().zip(theirs) {
                m.merge(t);
            }
        }
        for (&k, &c) in &other.kstars {
            *self.kstars.entry(k).or_default() += c;
        }
        self.silhouette.merge(&other.silhouette);
        Ok(())
    }

    pub fn egos(&self) -> usize {
        self.cumulative.first().map_or(0, |s| s.count() as usize)
    }

    pub fn finish(&self) -> Result<PopulationReport> {
        if self.egos() == 0 {
            return Err(Error::Argument("no layer profiles to aggregate".into()));
        }
        let layers: Vec<LayerStats> = (0..self.k)
            .map(|i| LayerStats {
                index: i,
                mean_annulus_size: self.annulus[i].mean(),
                mean_cumulative_size: self.cumulative[i].mean(),
                sd_cumulative_size: self.cumulative[i].sd(),
                se_cumulative_size: self.cumulative[i].se(),
                mean_min_freq: self.min_freq[i].mean(),
                sd_min_freq: self.min_freq[i].sd(),
                se_min_freq: self.min_freq[i].se(),
            })
            .collect();
        let means: Vec<f64> = layers.iter().map(|l| l.mean_cumulative_size).collect();
        Ok(PopulationReport {
            k: self.k,
            egos: self.egos(),
            scaling_ratios: scaling_ratios(&means),
            mean_ego_ratios: self.ratios.iter().map(RunningStat::mean).collect(),
            layers,
            kstar: KStarSummary::from_histogram(self.kstars.clone()),
            mean_silhouette: (self.silhouette.count() > 0).then(|| self.silhouette.mean()),
        })
    }
}

/// Aggregates profiles computed at one fixed k, together with the k*
/// selections of the same population.
pub fn aggregate(profiles: &[LayerProfile], kstars: &[KStarResult]) -> Result<PopulationReport> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Argument("no layer profiles to aggregate".into()))?;
    let mut acc = LayerAccumulator::new(first.k);
    for profile in profiles {
        acc.push_profile(profile)?;
    }
    for result in kstars {
        acc.push_kstar(result);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::kmeans_1d;

    fn profile(ego: UserId, cumulative: &[usize]) -> LayerProfile {
        let mut annulus = Vec::new();
        let mut prev = 0;
        for &c in cumulative {
            annulus.push(c - prev);
            prev = c;
        }
        let sizes: Vec<f64> = cumulative.iter().map(|&c| c as f64).collect();
        LayerProfile {
            ego,
            k: cumulative.len(),
            annulus_sizes: annulus,
            cumulative_sizes: cumulative.to_vec(),
            min_freq: (0..cumulative.len())
                .rev()
                .map(|i| (i + 1) as f64)
                .collect(),
            ratios: scaling_ratios(&sizes),
        }
    }

    fn bands(annuli: &[usize]) -> Vec<f64> {
        annuli
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| std::iter::repeat_n(1000.0 / 4f64.powi(i as i32), a))
            .collect()
    }

    #[test]
    fn prefix_sums() {
        let values = bands(&[2, 3, 10, 35]);
        let config = kmeans_1d(&values, 4).unwrap();
        let p = nest_clusters(9, &values, &config).unwrap();
        assert_eq!(p.annulus_sizes, vec![2, 3, 10, 35]);
        assert_eq!(p.cumulative_sizes, vec![2, 5, 15, 50]);
        assert_eq!(p.min_freq, vec![1000.0, 250.0, 62.5, 15.625]);
    }

    #[test]
    fn single_layer() {
        let values = bands(&[7]);
        let config = kmeans_1d(&values, 1).unwrap();
        let p = nest_clusters(1, &values, &config).unwrap();
        assert_eq!(p.cumulative_sizes, vec![7]);
        assert!(p.ratios.is_empty());
    }

    #[test]
    fn split_tie_is_rejected() {
        let values = [5.0, 5.0, 5.0];
        let config = kmeans_1d(&values, 2).unwrap();
        assert!(matches!(
            nest_clusters(1, &values, &config),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ratio_arithmetic() {
        let r = scaling_ratios(&[5.0, 15.0, 50.0, 150.0]);
        assert_eq!(r, vec![3.0, 50.0 / 15.0, 3.0]);
        let r = scaling_ratios(&[1.68, 5.28, 14.92, 40.93]);
        for (got, want) in r.iter().zip([3.143, 2.826, 2.743]) {
            assert!((got - want).abs() < 5e-4);
        }
        assert!(scaling_ratios(&[4.0]).is_empty());
    }

    #[test]
    fn ccdf_counts() {
        let c = ccdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(c, vec![(1.0, 1.0), (2.0, 2.0 / 3.0), (3.0, 1.0 / 3.0)]);
        assert_eq!(ccdf(&[4.0; 5]).unwrap(), vec![(4.0, 1.0)]);
        assert!(ccdf(&[]).is_err());
    }

    #[test]
    fn one_ego_population() {
        let report = aggregate(&[profile(1, &[2, 6])], &[]).unwrap();
        assert_eq!(report.egos, 1);
        assert_eq!(report.layers[1].mean_cumulative_size, 6.0);
        assert_eq!(report.layers[1].se_cumulative_size, 0.0);
        assert_eq!(report.kstar, None);
    }

    #[test]
    fn two_ego_population() {
        let report = aggregate(&[profile(1, &[2, 6]), profile(2, &[4, 10])], &[]).unwrap();
        let means: Vec<_> = report
            .layers
            .iter()
            .map(|l| l.mean_cumulative_size)
            .collect();
        let sds: Vec<_> = report.layers.iter().map(|l| l.sd_cumulative_size).collect();
        assert_eq!(means, vec![3.0, 8.0]);
        assert!((sds[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((sds[1] - 8f64.sqrt()).abs() < 1e-12);
        assert!((report.layers[0].se_cumulative_size - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_or_mixed_k() {
        assert!(aggregate(&[], &[]).is_err());
        let mixed = [profile(1, &[2, 6]), profile(2, &[1, 3, 9])];
        assert!(matches!(aggregate(&mixed, &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn kstar_summary() {
        let hist = BTreeMap::from([(3, 2), (4, 2), (6, 1)]);
        let s = KStarSummary::from_histogram(hist).unwrap();
        assert_eq!(s.mode, 3);
        assert_eq!(s.median, 4.0);
        assert_eq!(s.mean, 20.0 / 5.0);
        let even = KStarSummary::from_histogram(BTreeMap::from([(3, 1), (4, 1)])).unwrap();
        assert_eq!(even.median, 3.5);
    }

    #[test]
    fn merge_matches_single_pass() {
        let profiles: Vec<_> = (0..9)
            .map(|i| {
                profile(
                    i,
                    &[1 + i as usize % 3, 6 + i as usize, 20 + 2 * i as usize],
                )
            })
            .collect();
        let whole = aggregate(&profiles, &[]).unwrap();
        let mut left = LayerAccumulator::new(3);
        let mut right = LayerAccumulator::new(3);
        for (i, p) in profiles.iter().enumerate() {
            if i % 2 == 0 { &mut left } else { &mut right }
                .push_profile(p)
                .unwrap();
        }
        left.merge(&right).unwrap();
        let merged = left.finish().unwrap();
        for (a, b) in whole.layers.iter().zip(&merged.layers) {
            assert!((a.mean_cumulative_size - b.mean_cumulative_size).abs() < 1e-12);
            assert!((a.sd_cumulative_size - b.sd_cumulative_size).abs() < 1e-12);
        }
    }
}
