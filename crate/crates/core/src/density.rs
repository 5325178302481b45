//! One-dimensional DBSCAN and the decreasing-ε calibration loop used to
//! cross-check k-means cluster counts.

use crate::error::{Error, Result};

pub const DEFAULT_MIN_PTS: usize = 2;

/// Multiplicative ε step of the calibration loop.
pub const EPS_DECAY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityClustering {
    pub eps: f64,
    pub min_pts: usize,
    /// Member indices of each cluster, ascending and contiguous apart from
    /// interleaved noise, highest-frequency cluster first.
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

impl DensityClustering {
    pub fn achieved_k(&self) -> usize {
        self.clusters.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub clustering: DensityClustering,
    /// The achieved cluster count equals the target.
    pub exact: bool,
    /// Number of ε reductions performed.
    pub iterations: usize,
}

fn check_sorted(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("values must be finite".into()));
    }
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Argument(
            "values are not sorted in descending order".into(),
        ));
    }
    Ok(())
}

/// DBSCAN over descending-sorted values. A point is core when at least
/// `min_pts` points, itself included, lie within `eps` of it. Border points
/// reachable from two clusters join the higher-frequency one.
pub fn dbscan_1d(values: &[f64], eps: f64, min_pts: usize) -> Result<DensityClustering> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    if min_pts < 2 {
        return Err(Error::Argument(format!(
            "min_pts must be at least 2, got {min_pts}"
        )));
    }
    check_sorted(values)?;
    Ok(dbscan_sorted(values, eps, min_pts))
}

fn dbscan_sorted(values: &[f64], eps: f64, min_pts: usize) -> DensityClustering {
    let n = values.len();
    let core: Vec<bool> = values
        .iter()
        .map(|&vi| {
            let lo = values.partition_point(|&v| v - vi > eps);
            let hi = values.partition_point(|&v| vi - v <= eps);
            hi - lo >= min_pts
        })
        .collect();

    // Cluster id per core point: runs of cores with gaps within eps.
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut k = 0;
    let mut last_core: Option<usize> = None;
    for i in (0..n).filter(|&i| core[i]) {
        match last_core {
            Some(j) if values[j] - values[i] <= eps => {}
            _ => k += 1,
        }
        label[i] = Some(k - 1);
        last_core = Some(i);
    }

    let mut above: Option<usize> = None;
    let mut next_below = vec![None; n];
    let mut below = None;
    for i in (0..n).rev() {
        next_below[i] = below;
        if core[i] {
            below = Some(i);
        }
    }
    for i in 0..n {
        if core[i] {
            above = Some(i);
            continue;
        }
        let reach = |j: Option<usize>| j.filter(|&j| (values[j] - values[i]).abs() <= eps);
        if let Some(j) = reach(above).or_else(|| reach(next_below[i])) {
            label[i] = label[j];
        }
    }

    let mut clusters = vec![Vec::new(); k];
    let mut noise = Vec::new();
    for (i, l) in label.into_iter().enumerate() {
        match l {
            Some(c) => clusters[c].push(i),
            None => noise.push(i),
        }
    }
    DensityClustering {
        eps,
        min_pts,
        clusters,
        noise,
    }
}

/// Smallest positive gap between consecutive sorted values.
fn min_positive_gap(values: &[f64]) -> Option<f64> {
    values
        .windows(2)
        .map(|w| w[0] - w[1])
        .filter(|&g| g > 0.0)
        .min_by(f64::total_cmp)
}

/// Shrinks ε geometrically from the value range until DBSCAN (MinPts = 2)
/// finds at least `target_k` clusters, or until ε drops below the smallest
/// gap between distinct values. Returns the clustering whose count is
/// closest to the target, preferring larger ε on ties.
pub fn calibrate_eps(values: &[f64], target_k: usize) -> Result<Calibration> {
    if target_k == 0 {
        return Err(Error::Argument(
            "target cluster count must be at least 1".into(),
        ));
    }
    check_sorted(values)?;
    let n = values.len();
    if target_k > n / DEFAULT_MIN_PTS {
        return Err(Error::InfeasibleTarget {
            target: target_k,
            needed: DEFAULT_MIN_PTS * target_k,
            available: n,
        });
    }
    let range = values[0] - values[n - 1];
    let mut eps = if range > 0.0 {
        range
    } else {
        f64::MIN_POSITIVE
    };
    let min_gap = min_positive_gap(values);

    let mut best: Option<(usize, DensityClustering, usize)> = None;
    let mut iterations = 0;
    loop {
        let clustering = dbscan_sorted(values, eps, DEFAULT_MIN_PTS);
        let achieved = clustering.achieved_k();
        let distance = achieved.abs_diff(target_k);
        if best.as_ref().is_none_or(|b| distance < b.0) {
            best = Some((distance, clustering, iterations));
        }
        if achieved >= target_k {
            break;
        }
        let next = eps * EPS_DECAY;
        match min_gap {
            Some(gap) if next >= gap => {
                eps = next;
                iterations += 1;
            }
            _ => break,
        }
    }
    let (distance, clustering, _) = best.expect("loop runs at least once");
    Ok(Calibration {
        clustering,
        exact: distance == 0,
        iterations,
    })
}
