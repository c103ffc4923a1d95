mod oracles;

use archlens::cluster::{
    adjusted_rand_index, cluster_characters, cluster_vocabulary, kmeans, kmeans_with, pca_project, read_coords_csv,
    ClusterOptions, KMeansConfig,
};
use archlens::model::Category;
use archlens::synth::{gaussian_blobs, planted_corpus, PlantedConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Labels from the nearest true blob center, the best any clusterer can do.
fn nearest_center(rows: &[Vec<f64>], k: usize, separation: f64) -> Vec<usize> {
    let scale = separation / std::f64::consts::SQRT_2;
    rows.iter()
        .map(|p| {
            let d = |c: usize| p.iter().enumerate().map(|(j, x)| (x - if j == c { scale } else { 0.0 }).powi(2)).sum::<f64>();
            (0..k).min_by(|&a, &b| d(a).total_cmp(&d(b))).unwrap()
        })
        .collect()
}

#[test]
fn planted_blobs_recovered() {
    let mut total = 0.0;
    for seed in 0..10 {
        let (rows, truth) = gaussian_blobs(3, 100, 3, 6.0, seed);
        let r = kmeans(&rows, 3, seed, 10).unwrap();
        let ari = adjusted_rand_index(&r.assignments, &truth);
        let ideal = adjusted_rand_index(&nearest_center(&rows, 3, 6.0), &truth);
        assert!(ari >= ideal - 0.02, "seed {seed}: {ari} vs ideal {ideal}");
        total += ari;
    }
    assert!(total / 10.0 >= 0.99, "mean {}", total / 10.0);
}

#[test]
fn inertia_trace_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..20 {
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        for restarts in [1, 4] {
            let r = kmeans(&rows, 1 + seed as usize % 6, seed, restarts).unwrap();
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", r.trace);
            assert!((r.trace.last().unwrap() - r.inertia).abs() < 1e-9);
        }
    }
}

#[test]
fn agrees_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..30 {
        let n = rng.random_range(4..=12);
        let k = rng.random_range(2..=3.min(n - 1));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let best = oracles::exhaustive_kmeans(&rows, k);
        let got = kmeans_with(&rows, &KMeansConfig { restarts: 20, ..KMeansConfig::new(k, case) }).unwrap();
        assert!(got.inertia >= best - 1e-9);
        assert!((got.inertia - best).abs() < 1e-9, "case {case}: {} vs {best}", got.inertia);
    }
}

#[test]
fn ari_matches_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        assert!((adjusted_rand_index(&a, &b) - oracles::pairwise_ari(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn pca_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // Distinct variances per axis give a clear eigengap, then a rotation mixes them.
    for (n, d) in [(200, 5), (6, 9)] {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|j| rng.random_range(-1.0..1.0) * (d - j) as f64).collect();
                (0..d).map(|i| z[i] + 0.3 * z[(i + 1) % d]).collect()
            })
            .collect();
        let p = pca_project(&rows, 2).unwrap();
        let oracle = oracles::power_iteration_pca(&rows, 2);
        for (j, (lambda, v)) in oracle.iter().enumerate() {
            assert!((p.explained_variance[j] - lambda).abs() < 1e-8 * lambda.max(1.0));
            for (a, b) in p.components[j].iter().zip(v) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
        // Reconstruction error equals the variance left in the dropped axes.
        let dropped = (p.total_variance - p.explained_variance.iter().sum::<f64>()) * (n - 1) as f64;
        assert!((p.reconstruction_error(&rows) - dropped).abs() < 1e-8 * dropped.max(1.0));
    }
}

fn planted() -> archlens::Dataset {
    planted_corpus(&PlantedConfig { detectives: 60, others: 60, embedding_dim: 8, ..Default::default() })
}

#[test]
fn clustered_characters_are_labelled_by_mean_year() {
    let d = planted();
    let ids: Vec<String> = d.characters.iter().map(|c| c.character_id.clone()).collect();
    let r = cluster_characters(&d, &ids, &KMeansConfig::new(3, 1), &ClusterOptions::default()).unwrap();
    let mean_year = |k: usize| {
        let ys: Vec<f64> = r.members.iter().filter(|m| m.cluster == k).map(|m| f64::from(m.year)).collect();
        ys.iter().sum::<f64>() / ys.len() as f64
    };
    assert!(mean_year(0) <= mean_year(1) && mean_year(1) <= mean_year(2));
    assert!(r.members.iter().all(|m| m.coords.is_some()));
    assert_eq!(r.sizes().iter().sum::<usize>(), ids.len());
}

#[test]
fn external_coordinates_drive_two_d_clustering() {
    let d = planted();
    let ids: Vec<String> = d.characters.iter().map(|c| c.character_id.clone()).collect();
    let mut csv = String::from("character_id,x,y\n");
    for (i, id) in ids.iter().enumerate() {
        csv += &format!("{id},{},{}\n", (i % 2) as f64 * 100.0, i as f64 * 1e-3);
    }
    let coords = read_coords_csv(csv.as_bytes()).unwrap();
    let options = ClusterOptions { coords: Some(&coords), on_2d: true };
    let r = cluster_characters(&d, &ids, &KMeansConfig::new(2, 1), &options).unwrap();
    for (i, m) in r.members.iter().enumerate() {
        assert_eq!(m.coords, Some(coords[&ids[i]]));
        assert_eq!(m.cluster == r.members[0].cluster, i % 2 == 0);
    }
    assert!(read_coords_csv("character_id,x\nc,1\n".as_bytes()).is_err());
}

#[test]
fn cluster_vocabulary_is_positive_and_bounded() {
    let d = planted();
    let ids: Vec<String> = d.characters.iter().map(|c| c.character_id.clone()).collect();
    let r = cluster_characters(&d, &ids, &KMeansConfig::new(2, 3), &ClusterOptions::default()).unwrap();
    let vocab = cluster_vocabulary(&d.characters, &r, 14, &Category::DEFAULT).unwrap();
    assert_eq!(vocab.len(), 2);
    for v in &vocab {
        for category in Category::DEFAULT {
            let rows: Vec<_> = v.rows.iter().filter(|r| r.category == category).collect();
            assert!(rows.len() <= 14);
            assert!(rows.windows(2).all(|w| w[0].raw_z >= w[1].raw_z));
        }
        assert!(v.rows.iter().all(|r| r.raw_z > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kmeans_invariants(seed in 0u64..500, n in 3usize..40, k in 1usize..5) {
        prop_assume!(k <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let r = kmeans(&rows, k, seed, 3).unwrap();
        prop_assert!(r.assignments.iter().all(|&a| a < k));
        prop_assert!(r.inertia >= 0.0);
        // Every point sits with its nearest centroid at convergence.
        for (row, &a) in rows.iter().zip(&r.assignments) {
            let d = |c: &Vec<f64>| row.iter().zip(c).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            let own = d(&r.centroids[a]);
            prop_assert!(r.centroids.iter().all(|c| own <= d(c) + 1e-9));
        }
    }

    #[test]
    fn ari_is_label_permutation_invariant(labels in prop::collection::vec(0usize..4, 2..50)) {
        let permuted: Vec<usize> = labels.iter().map(|&l| (l + 1) % 4).collect();
        prop_assert!((adjusted_rand_index(&labels, &permuted) - 1.0).abs() < 1e-12);
    }
}
