//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

/// Sum of squared deviations from the mean, computed directly.
pub fn ss(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

/// Minimum WCSS over every split of `values` into `k` contiguous runs.
pub fn brute_force_wcss(values: &[f64], k: usize) -> f64 {
    fn go(values: &[f64], k: usize) -> f64 {
        if k == 1 {
            return ss(values);
        }
        (1..=values.len() - (k - 1))
            .map(|cut| ss(&values[..cut]) + go(&values[cut..], k - 1))
            .fold(f64::INFINITY, f64::min)
    }
    go(values, k)
}

/// Mean silhouette straight from the definition, comparing each point with
/// every other cluster.
pub fn naive_silhouette(values: &[f64], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let n = values.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        let size = labels.iter().filter(|&&l| l == own).count();
        if size == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += (values[i] - values[j]).abs();
                counts[labels[j]] += 1;
            }
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

pub fn sorted_desc(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
