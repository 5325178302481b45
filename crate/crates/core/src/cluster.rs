//! Exact one-dimensional k-means, AIC model selection and silhouette scoring.
//!
//! All functions take values sorted in descending order, so cluster 0 is the
//! highest-frequency group. Optimal 1-D clusters are contiguous runs of the
//! sorted sequence, which lets a dynamic program over cut points find the
//! global optimum in `O(k n²)`.

use crate::error::{Error, Result};

pub const DEFAULT_K_MAX: usize = 20;

/// Relative floor applied to WCSS inside the AIC logarithm.
const WCSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    /// Index of the first member of clusters 1..k, strictly increasing.
    pub boundaries: Vec<usize>,
    /// Cluster means, highest first.
    pub centroids: Vec<f64>,
    pub sizes: Vec<usize>,
    pub wcss: f64,
    pub ss_tot: f64,
    pub aic: f64,
    /// `None` when k = 1.
    pub mean_silhouette: Option<f64>,
}

impl ClusterConfig {
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Half-open index range of each cluster.
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut starts = Vec::with_capacity(self.k + 1);
        starts.push(0);
        starts.extend_from_slice(&self.boundaries);
        starts.push(self.n());
        starts.windows(2).map(|w| w[0]..w[1]).collect()
    }

    /// Cluster label of every point.
    pub fn labels(&self) -> Vec<usize> {
        self.ranges()
            .into_iter()
            .enumerate()
            .flat_map(|(c, r)| std::iter::repeat_n(c, r.len()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KScore {
    pub k: usize,
    pub wcss: f64,
    pub var_exp: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStarResult {
    pub k_star: usize,
    pub per_k: Vec<KScore>,
    pub mean_silhouette: Option<f64>,
    pub config: ClusterConfig,
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Argument("no values to cluster".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("non-finite value {bad}")));
    }
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Argument(
            "values are not sorted in descending order".into(),
        ));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-pass sum of squared deviations; exactly zero for constant runs.
fn sum_squares(xs: &[f64]) -> f64 {
    if xs.first() == xs.last() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Cut-point tables of the suffix dynamic program.
///
/// `cut[m][i]` is the optimal end of the first cluster when splitting
/// `values[i..]` into `m` clusters. Scanning cut points in ascending order and
/// replacing only on strict improvement yields the lexicographically smallest
/// boundary vector among optimal partitions.
struct Dp {
    cut: Vec<Vec<usize>>,
}

impl Dp {
    fn solve(values: &[f64], k_max: usize) -> Dp {
        let n = values.len();
        // cost of values[i..n] as one cluster, via Welford from the right
        let mut prev = vec![f64::INFINITY; n + 1];
        let (mut mean, mut m2) = (0.0, 0.0);
        for i in (0..n).rev() {
            let count = (n - i) as f64;
            let delta = values[i] - mean;
            mean += delta / count;
            m2 += delta * (values[i] - mean);
            prev[i] = m2;
        }
        let mut cut = vec![Vec::new(), vec![n; n + 1]];
        for m in 2..=k_max {
            let mut cur = vec![f64::INFINITY; n + 1];
            let mut best_cut = vec![n; n + 1];
            for i in 0..=n - m {
                let (mut mean, mut m2) = (0.0, 0.0);
                let mut best = f64::INFINITY;
                for j in i + 1..=n - m + 1 {
                    let x = values[j - 1];
                    let count = (j - i) as f64;
                    let delta = x - mean;
                    mean += delta / count;
                    m2 += delta * (x - mean);
                    let total = m2 + prev[j];
                    if total < best {
                        best = total;
                        best_cut[i] = j;
                    }
                }
                cur[i] = best;
            }
            cut.push(best_cut);
            prev = cur;
        }
        Dp { cut }
    }

    fn boundaries(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(k - 1);
        let mut i = 0;
        for m in (2..=k).rev() {
            i = self.cut[m][i];
            out.push(i);
        }
        out
    }
}

fn config_from_boundaries(values: &[f64], boundaries: Vec<usize>, ss_tot: f64) -> ClusterConfig {
    let k = boundaries.len() + 1;
    let mut starts = Vec::with_capacity(k + 1);
    starts.push(0);
    starts.extend_from_slice(&boundaries);
    starts.push(values.len());
    let mut centroids = Vec::with_capacity(k);
    let mut sizes = Vec::with_capacity(k);
    let mut wcss = 0.0;
    for w in starts.windows(2) {
        let members = &values[w[0]..w[1]];
        centroids.push(mean(members));
        sizes.push(members.len());
        wcss += sum_squares(members);
    }
    let wcss = wcss.min(ss_tot);
    let mut config = ClusterConfig {
        k,
        boundaries,
        centroids,
        sizes,
        wcss,
        ss_tot,
        aic: 0.0,
        mean_silhouette: None,
    };
    config.aic = aic_score(&config, values.len());
    config
}

/// Globally optimal k-means clustering of descending-sorted values.
pub fn kmeans_1d(values: &[f64], k: usize) -> Result<ClusterConfig> {
    check_values(values)?;
    if k == 0 || k > values.len() {
        return Err(Error::Argument(format!(
            "k = {k} is outside 1..={}",
            values.len()
        )));
    }
    let dp = Dp::solve(values, k);
    let mut config = config_from_boundaries(values, dp.boundaries(k), sum_squares(values));
    config.mean_silhouette = silhouette_mean(values, &config);
    Ok(config)
}

/// `(SS_TOT - WCSS) / SS_TOT`, or 1 when all values coincide.
pub fn variance_explained(config: &ClusterConfig) -> f64 {
    if config.ss_tot == 0.0 {
        return 1.0;
    }
    ((config.ss_tot - config.wcss) / config.ss_tot).clamp(0.0, 1.0)
}

/// `n ln(WCSS / n) + 2k`, with WCSS floored at `1e-12 * SS_TOT` (or `1e-12`
/// when SS_TOT is zero) so perfect fits stay finite.
pub fn aic_score(config: &ClusterConfig, n: usize) -> f64 {
    let floor = if config.ss_tot > 0.0 {
        WCSS_FLOOR * config.ss_tot
    } else {
        WCSS_FLOOR
    };
    let n = n as f64;
    n * (config.wcss.max(floor) / n).ln() + 2.0 * config.k as f64
}

/// Scans k = 1..=min(k_max, n) and keeps the AIC minimum, preferring the
/// smaller k on ties.
pub fn select_k(values: &[f64], k_max: usize) -> Result<KStarResult> {
    check_values(values)?;
    if k_max == 0 {
        return Err(Error::Argument("k_max must be at least 1".into()));
    }
    let k_hi = k_max.min(values.len());
    let ss_tot = sum_squares(values);
    let dp = Dp::solve(values, k_hi);

    let mut per_k = Vec::with_capacity(k_hi);
    let mut best: Option<ClusterConfig> = None;
    for k in 1..=k_hi {
        let config = config_from_boundaries(values, dp.boundaries(k), ss_tot);
        per_k.push(KScore {
            k,
            wcss: config.wcss,
            var_exp: variance_explained(&config),
            aic: config.aic,
        });
        if best.as_ref().is_none_or(|b| config.aic < b.aic) {
            best = Some(config);
        }
    }
    let mut config = best.expect("at least one k is scanned");
    config.mean_silhouette = silhouette_mean(values, &config);
    Ok(KStarResult {
        k_star: config.k,
        per_k,
        mean_silhouette: config.mean_silhouette,
        config,
    })
}

/// Per-point silhouette `(b - a) / max(a, b)`, with 0 for members of
/// singleton clusters and for points where `a = b = 0`.
///
/// Returns `None` when k = 1. Because clusters are contiguous, the nearest
/// other cluster of any point is one of its two neighbours.
pub fn silhouettes(values: &[f64], config: &ClusterConfig) -> Option<Vec<f64>> {
    if config.k < 2 {
        return None;
    }
    let ranges = config.ranges();
    let mean_dist = |x: f64, r: &std::ops::Range<usize>| {
        values[r.clone()].iter().map(|y| (x - y).abs()).sum::<f64>() / r.len() as f64
    };
    let mut out = Vec::with_capacity(values.len());
    for (c, range) in ranges.iter().enumerate() {
        for i in range.clone() {
            if range.len() == 1 {
                out.push(0.0);
                continue;
            }
            let x = values[i];
            let a = values[range.clone()]
                .iter()
                .map(|y| (x - y).abs())
                .sum::<f64>()
                / (range.len() - 1) as f64;
            let mut b = f64::INFINITY;
            if c > 0 {
                b = b.min(mean_dist(x, &ranges[c - 1]));
            }
            if c + 1 < ranges.len() {
                b = b.min(mean_dist(x, &ranges[c + 1]));
            }
            let scale = a.max(b);
            out.push(if scale > 0.0 { (b - a) / scale } else { 0.0 });
        }
    }
    Some(out)
}

/// Mean silhouette over all points, or `None` when k = 1.
pub fn silhouette_mean(values: &[f64], config: &ClusterConfig) -> Option<f64> {
    silhouettes(values, config).map(|s| mean(&s))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: [f64; 6] = [12.0, 11.0, 10.0, 3.0, 2.0, 1.0];

    #[test]
    fn separated_pair() {
        let c = kmeans_1d(&PAIR, 2).unwrap();
        assert_eq!(c.boundaries, vec![3]);
        assert_eq!(c.centroids, vec![11.0, 2.0]);
        assert_eq!(c.sizes, vec![3, 3]);
        assert!((c.wcss - 4.0).abs() < 1e-12);
        assert!((c.ss_tot - 125.5).abs() < 1e-12);
        assert!((variance_explained(&c) - 121.5 / 125.5).abs() < 1e-12);
        assert_eq!(c.labels(), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn one_cluster_is_total() {
        let c = kmeans_1d(&PAIR, 1).unwrap();
        assert_eq!(c.centroids, vec![6.5]);
        assert_eq!(c.wcss, c.ss_tot);
        assert_eq!(variance_explained(&c), 0.0);
        assert_eq!(c.mean_silhouette, None);
    }

    #[test]
    fn k_equal_n_explains_everything() {
        let c = kmeans_1d(&PAIR, 6).unwrap();
        assert_eq!(c.wcss, 0.0);
        assert_eq!(variance_explained(&c), 1.0);
        assert!(c.aic.is_finite());
    }

    #[test]
    fn bad_k() {
        assert!(matches!(kmeans_1d(&PAIR, 0), Err(Error::Argument(_))));
        assert!(matches!(kmeans_1d(&PAIR, 7), Err(Error::Argument(_))));
        assert!(matches!(kmeans_1d(&[1.0, 2.0], 1), Err(Error::Argument(_))));
        assert!(matches!(select_k(&[], 20), Err(Error::Argument(_))));
    }

    #[test]
    fn ties_take_smallest_boundaries() {
        let values = [100.0, 100.0, 100.0, 5.0, 5.0, 5.0];
        assert_eq!(kmeans_1d(&values, 3).unwrap().boundaries, vec![1, 3]);
    }

    #[test]
    fn aic_penalty_and_floor() {
        let mut c = kmeans_1d(&PAIR, 2).unwrap();
        let two = aic_score(&c, 6);
        c.k = 3;
        assert!(two < aic_score(&c, 6));
        c.wcss = 0.0;
        assert!(aic_score(&c, 6).is_finite());
        let one = kmeans_1d(&PAIR, 1).unwrap();
        assert!(two < one.aic);
    }

    #[test]
    fn selection_edge_cases() {
        let single = select_k(&[7.0], 20).unwrap();
        assert_eq!(single.k_star, 1);
        assert_eq!(single.per_k.len(), 1);

        let flat = select_k(&[3.0; 50], 20).unwrap();
        assert_eq!(flat.k_star, 1);
        assert_eq!(flat.per_k.len(), 20);
    }

    #[test]
    fn noiseless_bands_are_recovered() {
        let mut values = vec![100.0; 2];
        values.extend([20.0; 3]);
        values.extend([4.0; 10]);
        let result = select_k(&values, 20).unwrap();
        assert_eq!(result.k_star, 3);
        assert_eq!(result.config.sizes, vec![2, 3, 10]);
    }

    #[test]
    fn perfect_separation_silhouette() {
        let values = [100.0, 100.0, 100.0, 5.0, 5.0, 5.0];
        let c = kmeans_1d(&values, 2).unwrap();
        assert_eq!(c.mean_silhouette, Some(1.0));
    }

    #[test]
    fn singleton_scores_zero() {
        let values = [50.0, 10.0, 9.0, 8.0];
        let c = kmeans_1d(&values, 2).unwrap();
        assert_eq!(c.sizes, vec![1, 3]);
        let s = silhouettes(&values, &c).unwrap();
        assert_eq!(s[0], 0.0);
        assert!(s[1..].iter().all(|&x| x > 0.9));
    }
}
