mod common;

use common::TestRng;
use fjlt::estimators::{deviation_norm, estimate_e_alpha, evaluate_objective, rip_constant_bruteforce};
use fjlt::linalg::{spectral_norm, SymmetricMatrix, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use fjlt::transform::{dense_matrix, sample_transform, FastJLTransform, RowSampling};
use fjlt::{fwht_in_place, RowIndexSet};

#[test]
fn fwht_matches_dense_hadamard() {
    let mut rng = TestRng(7);
    for p in 0..=8 {
        let n = 1 << p;
        let x = rng.vector(n);
        let want = common::naive_transform(&x);
        let mut got = x.clone();
        fwht_in_place(&mut got).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * (n as f64), "n={n}");
        }
    }
}

#[test]
fn power_iteration_agrees_with_jacobi() {
    let mut rng = TestRng(11);
    for _ in 0..20 {
        let n = 16;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.symmetric();
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let flat: Vec<f64> = a.iter().flatten().copied().collect();
        let m = SymmetricMatrix::new(n, flat, 0.0).unwrap();
        let got = spectral_norm(&m, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let want = common::spectral_norm(&a);
        assert!((got.value - want).abs() <= 1e-6, "{} vs {}", got.value, want);
    }
}

#[test]
fn dense_matrix_matches_explicit_product() {
    let t = sample_transform(32, 12, 5).unwrap();
    let want = common::dense_transform(t.rows().indices(), t.signs().as_slice());
    let got = dense_matrix(&t).unwrap();
    for (i, row) in want.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((got.get(i, j) - v).abs() < 1e-15);
        }
    }
}

#[test]
fn rip_exhaustive_matches_oracle() {
    for seed in 0..5 {
        let t = sample_transform(16, 8, seed).unwrap();
        let got = rip_constant_bruteforce(t.rows(), 8, 2, 1000, 0).unwrap();
        assert!(got.exhaustive);
        assert_eq!(got.supports_checked, 120);
        let want = common::rip_constant(t.rows().indices(), 16, 2);
        assert!((got.delta_hat - want).abs() <= 1e-6, "seed {seed}: {} vs {want}", got.delta_hat);
    }
}

#[test]
fn deviation_norm_matches_oracle() {
    let mut rng = TestRng(3);
    for seed in 0..5 {
        let t = sample_transform(32, 8, seed).unwrap();
        let y = rng.unit_vector(32);
        let got = deviation_norm(t.rows(), &y, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let want = common::deviation(t.rows().indices(), &y);
        assert!((got.value - want).abs() <= 1e-6);
        assert!((evaluate_objective(t.rows(), &y) - want).abs() <= 1e-6);
    }
}

#[test]
fn ealpha_never_exceeds_the_true_supremum_on_its_witness() {
    let t = sample_transform(16, 4, 2).unwrap();
    let est = estimate_e_alpha(t.rows(), 4, 0.5, 16, 4, 9).unwrap();
    let want = common::deviation(t.rows().indices(), &est.witness);
    assert!((est.lower_bound - want).abs() <= 1e-6);
}

#[test]
fn row_frequencies_are_uniform() {
    let (n, k, seeds) = (1024usize, 64usize, 10_000u64);
    let mut counts = vec![0u64; n];
    for seed in 0..seeds {
        let t = FastJLTransform::sample(n, k, seed, RowSampling::WithReplacement).unwrap();
        for &r in t.rows().indices() {
            counts[r] += 1;
        }
    }
    let draws = (k as u64 * seeds) as f64;
    let p = 1.0 / n as f64;
    let mean = draws * p;
    let sd = (draws * p * (1.0 - p)).sqrt();
    for (r, &c) in counts.iter().enumerate() {
        assert!((c as f64 - mean).abs() <= 5.0 * sd, "row {r}: {c} vs {mean}");
    }
}

#[test]
fn without_replacement_rows_are_distinct() {
    for seed in 0..50 {
        let t = FastJLTransform::sample(64, 64, seed, RowSampling::WithoutReplacement).unwrap();
        let mut idx = t.rows().indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, (0..64).collect::<Vec<_>>());
    }
}

#[test]
fn full_selection_is_an_isometry() {
    let rows = RowIndexSet::full(64).unwrap();
    assert!(common::rip_constant(rows.indices(), 64, 1) < 1e-12);
    let mut rng = TestRng(5);
    let y = rng.unit_vector(64);
    assert!(common::deviation(rows.indices(), &y) < 1e-12);
}
