mod common;

use ego_layers_core::cluster::silhouettes;
use ego_layers_core::layers::LayerAccumulator;
use ego_layers_core::*;
use proptest::prelude::*;

fn sorted_values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1000.0, 1..=max_len).prop_map(common::sorted_desc)
}

/// Values drawn from a coarse grid so ties and repeated runs are common.
fn gridded_values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..40).prop_map(|v| v as f64 * 2.5), 1..=max_len)
        .prop_map(common::sorted_desc)
}

fn windowed_log() -> impl Strategy<Value = String> {
    prop::collection::btree_map(
        (1u64..40, 1u64..40).prop_filter("no self edges", |(a, b)| a < b),
        prop::array::uniform4(0u64..6),
        1..60,
    )
    .prop_map(|edges| {
        let mut csv = String::from("a,b,c1,c2,c3,c4\n");
        for ((a, b), inc) in edges {
            let c: Vec<u64> = inc
                .iter()
                .scan(0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect();
            csv.push_str(&format!("{a},{b},{},{},{},{}\n", c[0], c[1], c[2], c[3]));
        }
        csv
    })
}

proptest! {
    #[test]
    fn dp_matches_enumeration(values in sorted_values(9), k in 1usize..=4) {
        prop_assume!(k <= values.len());
        let config = kmeans_1d(&values, k).unwrap();
        let oracle = common::brute_force_wcss(&values, k);
        prop_assert!((config.wcss - oracle).abs() <= 1e-9 * oracle.max(1e-9));
    }

    #[test]
    fn wcss_and_variance_explained_are_monotone(values in gridded_values(30)) {
        let result = select_k(&values, 20).unwrap();
        for w in result.per_k.windows(2) {
            prop_assert!(w[1].wcss <= w[0].wcss);
            prop_assert!(w[1].var_exp >= w[0].var_exp);
        }
        for s in &result.per_k {
            prop_assert!((0.0..=1.0).contains(&s.var_exp));
        }
        prop_assert!(result.k_star >= 1 && result.k_star <= values.len().min(20));
        let best = result.per_k.iter().map(|s| s.aic).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(result.per_k[result.k_star - 1].aic, best);
    }

    #[test]
    fn silhouettes_are_bounded_and_match_definition(values in sorted_values(15), k in 2usize..=3) {
        prop_assume!(k <= values.len());
        let config = kmeans_1d(&values, k).unwrap();
        let per_point = silhouettes(&values, &config).unwrap();
        prop_assert!(per_point.iter().all(|s| (-1.0..=1.0).contains(s)));
        let oracle = common::naive_silhouette(&values, &config.labels());
        prop_assert!((config.mean_silhouette.unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn selection_is_scale_covariant(values in sorted_values(25), p in -6i32..=6) {
        let c = 2f64.powi(p);
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let a = select_k(&values, 20).unwrap();
        let b = select_k(&scaled, 20).unwrap();
        prop_assert_eq!(a.k_star, b.k_star);
        prop_assert_eq!(&a.config.boundaries, &b.config.boundaries);
        match (a.mean_silhouette, b.mean_silhouette) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn clustering_is_deterministic(values in gridded_values(40), k in 1usize..=6) {
        prop_assume!(k <= values.len());
        prop_assert_eq!(kmeans_1d(&values, k).unwrap(), kmeans_1d(&values, k).unwrap());
    }

    #[test]
    fn nesting_is_strict(values in gridded_values(40), k in 1usize..=5) {
        let mut distinct = values.clone();
        distinct.dedup();
        prop_assume!(distinct.len() >= k);
        let config = kmeans_1d(&values, k).unwrap();
        let profile = nest_clusters(1, &values, &config).unwrap();
        prop_assert!(profile.cumulative_sizes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(profile.min_freq.windows(2).all(|w| w[0] > w[1]));
        prop_assert_eq!(*profile.cumulative_sizes.last().unwrap(), values.len());
        prop_assert!(profile.ratios.iter().all(|&r| r > 1.0));
    }

    #[test]
    fn ccdf_starts_at_one_and_falls(values in prop::collection::vec(-50.0f64..50.0, 1..200)) {
        let table = ccdf(&values).unwrap();
        prop_assert_eq!(table[0].1, 1.0);
        prop_assert!(table.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
        prop_assert!(table.iter().all(|&(_, p)| p > 0.0 && p <= 1.0));
    }

    #[test]
    fn dbscan_refines_as_eps_shrinks(values in gridded_values(40), steps in 1usize..30) {
        let mut eps = values[0] - values[values.len() - 1] + 1.0;
        let mut previous = 0;
        for _ in 0..steps {
            let c = dbscan_1d(&values, eps, 2).unwrap();
            let refined = c.achieved_k() + c.noise.len();
            prop_assert!(refined >= previous);
            previous = refined;
            let covered: usize = c.sizes().iter().sum::<usize>() + c.noise.len();
            prop_assert_eq!(covered, values.len());
            for cluster in &c.clusters {
                prop_assert!(cluster.windows(2).all(|w| values[w[0]] - values[w[1]] <= eps));
            }
            eps *= 0.8;
        }
    }

    #[test]
    fn isolated_points_are_noise(values in sorted_values(30), eps in 0.1f64..50.0) {
        let c = dbscan_1d(&values, eps, 2).unwrap();
        for i in 0..values.len() {
            let nearest = (0..values.len())
                .filter(|&j| j != i)
                .map(|j| (values[i] - values[j]).abs())
                .fold(f64::INFINITY, f64::min);
            if nearest > eps {
                prop_assert!(c.noise.contains(&i));
            }
        }
    }

    #[test]
    fn aggregation_merges_associatively(
        sizes in prop::collection::vec(prop::array::uniform3(1usize..20), 1..40),
        split in 0usize..40,
    ) {
        let profiles: Vec<LayerProfile> = sizes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let cumulative = vec![a[0], a[0] + a[1], a[0] + a[1] + a[2]];
                let fs: Vec<f64> = cumulative.iter().map(|&c| c as f64).collect();
                LayerProfile {
                    ego: i as u64,
                    k: 3,
                    annulus_sizes: a.to_vec(),
                    ratios: scaling_ratios(&fs),
                    cumulative_sizes: cumulative,
                    min_freq: vec![30.0, 20.0, 10.0],
                }
            })
            .collect();
        let whole = aggregate(&profiles, &[]).unwrap();
        let split = split.min(profiles.len());
        let mut left = LayerAccumulator::new(3);
        let mut right = LayerAccumulator::new(3);
        profiles[..split].iter().for_each(|p| left.push_profile(p).unwrap());
        profiles[split..].iter().for_each(|p| right.push_profile(p).unwrap());
        left.merge(&right).unwrap();
        let merged = left.finish().unwrap();
        prop_assert_eq!(merged.egos, profiles.len());
        for (a, b) in whole.layers.iter().zip(&merged.layers) {
            prop_assert!((a.mean_cumulative_size - b.mean_cumulative_size).abs() < 1e-9);
            prop_assert!((a.sd_cumulative_size - b.sd_cumulative_size).abs() < 1e-9);
        }
    }

    #[test]
    fn reconstruction_only_scales_counts(log in windowed_log(), f in 0.0f64..=1.0, seed: u64) {
        let store = parse_windowed_edges(log.as_bytes(), 900.0).unwrap();
        let rebuilt = reconstruct_missing(&store, f, seed).unwrap();
        prop_assert_eq!(store.nodes(), rebuilt.nodes());
        let mut all_doubled = true;
        for (a, b) in store.edges().iter().zip(rebuilt.edges()) {
            prop_assert_eq!((a.a, a.b), (b.a, b.b));
            let wa = a.windows.unwrap().counts();
            let wb = b.windows.unwrap().counts();
            let doubled = wb == wa.map(|c| 2 * c);
            prop_assert!(doubled || wa == wb);
            if a.count > 0 && !doubled {
                all_doubled = false;
            }
        }
        let (t0, t1) = (store.total_count(), rebuilt.total_count());
        prop_assert!(t1 <= 2 * t0);
        prop_assert_eq!(t1 == 2 * t0, all_doubled);
        prop_assert_eq!(&rebuilt, &reconstruct_missing(&store, f, seed).unwrap());
    }

    #[test]
    fn ego_filters_are_monotone(log in windowed_log(), lo in 0.0f64..3.0, extra in 0.0f64..3.0) {
        let store = parse_windowed_edges(log.as_bytes(), 900.0).unwrap();
        let egos = build_ego_networks(&store).unwrap();
        for ego in &egos {
            for r in &ego.relationships {
                prop_assert!(r.frequency > 0.0);
                let mirror = egos.iter().find(|e| e.ego == r.alter).unwrap();
                let back = mirror.relationships.iter().find(|x| x.alter == ego.ego).unwrap();
                prop_assert_eq!(back.n_interactions, r.n_interactions);
            }
            let mut resorted = ego.clone();
            resorted.relationships.reverse();
            let resorted = EgoNetwork::new(resorted.ego, resorted.relationships, resorted.span_years);
            prop_assert_eq!(&resorted, ego);
            let loose = filter_active_edges(ego, lo).len();
            let strict = filter_active_edges(ego, lo + extra).len();
            prop_assert!(strict <= loose);
        }
        let loose = filter_active_egos(egos.clone(), lo).unwrap().kept.len();
        let strict = filter_active_egos(egos, lo + extra).unwrap().kept.len();
        prop_assert!(strict <= loose);
    }
}
