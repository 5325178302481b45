//! Reference implementations the acceptance criteria compare against.

/// Sum of squared deviations from the mean.
pub fn ss(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

/// Minimum WCSS over every split of `values` into `k` contiguous runs,
/// enumerating all `C(n-1, k-1)` cut sets.
pub fn brute_force_wcss(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let mut best = f64::INFINITY;
    let mut cuts: Vec<usize> = (1..k).collect();
    loop {
        let mut bounds = vec![0];
        bounds.extend_from_slice(&cuts);
        bounds.push(n);
        let wcss: f64 = bounds.windows(2).map(|w| ss(&values[w[0]..w[1]])).sum();
        best = best.min(wcss);
        // next combination of k-1 cut points from 1..n
        let mut i = cuts.len();
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if cuts[i] < n - (cuts.len() - i) {
                cuts[i] += 1;
                for j in i + 1..cuts.len() {
                    cuts[j] = cuts[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Mean silhouette from the definition: for every point, the mean distance
/// to its own cluster and to each other cluster.
pub fn naive_silhouette(values: &[f64], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let n = values.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in (0..n).filter(|&j| j != i) {
            sums[labels[j]] += (values[i] - values[j]).abs();
            counts[labels[j]] += 1;
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
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
