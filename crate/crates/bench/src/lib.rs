//! Fixtures shared by the benchmarks.

use ego_layers_core::{generate_ego, generate_population, CountModel, LayerSpec};

/// Four-layer profile with ratios near 3.
pub fn four_layer_spec() -> LayerSpec {
    LayerSpec {
        cumulative_sizes: vec![1.68, 5.28, 14.92, 40.93],
        layer_freqs: vec![77.4, 30.3, 11.2, 2.5],
        freq_noise: 0.2,
        size_jitter: 0.0,
        count_model: CountModel::Expected,
    }
}

/// Planted contact frequencies of one ego, sorted descending, repeated until
/// there are at least `n` values.
pub fn planted_values(n: usize, seed: u64) -> Vec<f64> {
    let mut values = Vec::with_capacity(n);
    let mut ego = 1;
    while values.len() < n {
        let planted = generate_ego(&four_layer_spec(), ego, 3.0, seed).expect("valid spec");
        values.extend(planted.alters.iter().map(|a| a.true_freq));
        ego += 1;
    }
    values.truncate(n);
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Event log CSV for `egos` planted egos, with its download time.
pub fn event_log(egos: usize, seed: u64) -> (Vec<u8>, u64) {
    let pop = generate_population(&four_layer_spec(), egos, 3.0, seed).expect("valid spec");
    let mut out = Vec::new();
    pop.write_events(&mut out).expect("in-memory write");
    (out, pop.download_time)
}
