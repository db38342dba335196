use crate::error::{require_len, Result};
use crate::hadamard::{entry_sign, fwht_unchecked, RowIndexSet};
use crate::linalg::{power_iteration, SpectralNorm, SymmetricMatrix, SymmetricOperator};

use super::check_k;

/// Above this dimension `deviation_matrix` fills entries from the Gram profile
/// instead of summing over rows.
const DIRECT_ENTRY_MAX_N: usize = 512;

/// `g` with `(1/k) (ΦᵗΦ)_{ij} = g[i ^ j]`.
///
/// `H(r, i) H(r, j) = H(r, i ^ j)`, so the Gram matrix depends only on `i ^ j`
/// and `g = (1/k) H c` where `c` is the row histogram.
pub fn gram_profile(rows: &RowIndexSet) -> Vec<f64> {
    let mut g = rows.histogram();
    fwht_unchecked(&mut g);
    let inv_k = 1.0 / rows.k() as f64;
    g.iter_mut().for_each(|v| *v *= inv_k);
    g
}

/// `D_y² − (1/k) D_y ΦᵗΦ D_y` as a dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationMatrix(pub SymmetricMatrix);

pub fn deviation_matrix(rows: &RowIndexSet, y: &[f64], k: usize) -> Result<DeviationMatrix> {
    require_len(rows.n(), y.len())?;
    check_k(rows, k)?;
    let n = rows.n();
    let inv_k = 1.0 / k as f64;
    let m = if n <= DIRECT_ENTRY_MAX_N {
        let idx = rows.indices();
        SymmetricMatrix::from_fn(n, |i, j| {
            let gram: f64 = idx.iter().map(|&r| entry_sign(r, i) * entry_sign(r, j)).sum::<f64>() * inv_k;
            let id = if i == j { 1.0 } else { 0.0 };
            y[i] * y[j] * (id - gram)
        })
    } else {
        let g = gram_profile(rows);
        SymmetricMatrix::from_fn(n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            y[i] * y[j] * (id - g[i ^ j])
        })
    };
    Ok(DeviationMatrix(m))
}

/// Matrix-free `v -> D_y (I − (1/k)ΦᵗΦ) D_y v`, two fast transforms per product.
#[derive(Debug, Clone)]
pub struct DeviationOperator {
    weights: Vec<f64>,
    counts: Vec<f64>,
    inv_k: f64,
    identity: bool,
}

impl DeviationOperator {
    pub fn new(rows: &RowIndexSet, y: &[f64]) -> Result<Self> {
        require_len(rows.n(), y.len())?;
        Ok(Self { weights: y.to_vec(), counts: rows.histogram(), inv_k: 1.0 / rows.k() as f64, identity: true })
    }

    /// `v -> (1/k) D_y ΦᵗΦ D_y v`, the positive semidefinite part alone.
    pub fn gram_only(rows: &RowIndexSet, y: &[f64]) -> Result<Self> {
        let mut op = Self::new(rows, y)?;
        op.identity = false;
        Ok(op)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `out = (1/k) ΦᵗΦ w`.
    pub fn gram_apply(&self, w: &[f64], out: &mut [f64]) {
        out.copy_from_slice(w);
        fwht_unchecked(out);
        for (o, c) in out.iter_mut().zip(&self.counts) {
            *o *= c * self.inv_k;
        }
        fwht_unchecked(out);
    }
}

impl SymmetricOperator for DeviationOperator {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let w: Vec<f64> = x.iter().zip(&self.weights).map(|(a, b)| a * b).collect();
        self.gram_apply(&w, out);
        for ((o, wi), yi) in out.iter_mut().zip(&w).zip(&self.weights) {
            let v = if self.identity { wi - *o } else { *o };
            *o = yi * v;
        }
    }
}

/// `‖D_y² − (1/k) D_y ΦᵗΦ D_y‖` without materializing the matrix.
pub fn deviation_norm(rows: &RowIndexSet, y: &[f64], tol: f64, max_iters: usize) -> Result<SpectralNorm> {
    let op = DeviationOperator::new(rows, y)?;
    Ok(power_iteration(&op, tol, max_iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_norm;
    use crate::transform::{dense_matrix, sample_transform, FastJLTransform, SignPattern};

    #[test]
    fn zero_vector_gives_zero_matrix() {
        let t = sample_transform(16, 4, 1).unwrap();
        let m = deviation_matrix(t.rows(), &[0.0; 16], 4).unwrap();
        assert!(m.0.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_selection_gives_zero_matrix() {
        let rows = RowIndexSet::full(32).unwrap();
        let y: Vec<f64> = (0..32).map(|i| (i as f64).cos()).collect();
        let m = deviation_matrix(&rows, &y, 32).unwrap();
        assert!(m.0.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn matches_dense_oracle() {
        let (n, k) = (32, 8);
        let t = sample_transform(n, k, 77).unwrap();
        let y: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.13).sin()).collect();
        // unsigned Φ / sqrt(k) from the dense path
        let unsigned = FastJLTransform::from_parts(t.rows().clone(), SignPattern::all_positive(n), 0).unwrap();
        let phi = dense_matrix(&unsigned).unwrap();
        let m = deviation_matrix(t.rows(), &y, k).unwrap();
        for i in 0..n {
            for j in 0..n {
                let gram: f64 = (0..k).map(|s| phi.get(s, i) * phi.get(s, j)).sum();
                let want = y[i] * y[j] * (if i == j { 1.0 } else { 0.0 } - gram);
                assert!((m.0.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profile_path_matches_direct_path() {
        let n = 1024;
        let t = sample_transform(n, 40, 5).unwrap();
        let y: Vec<f64> = (0..n).map(|i| ((i % 17) as f64 - 8.0) / 50.0).collect();
        let big = deviation_matrix(t.rows(), &y, 40).unwrap();
        let idx = t.rows().indices();
        for &(i, j) in &[(0usize, 0usize), (3, 900), (511, 512), (1023, 1)] {
            let gram: f64 = idx.iter().map(|&r| entry_sign(r, i) * entry_sign(r, j)).sum::<f64>() / 40.0;
            let want = y[i] * y[j] * (if i == j { 1.0 } else { 0.0 } - gram);
            assert!((big.0.get(i, j) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_matches_matrix() {
        let (n, k) = (64, 9);
        let t = sample_transform(n, k, 3).unwrap();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() / 4.0).collect();
        let m = deviation_matrix(t.rows(), &y, k).unwrap();
        let op = DeviationOperator::new(t.rows(), &y).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        m.0.apply(&x, &mut a);
        op.apply(&x, &mut b);
        for i in 0..n {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
        let dn = deviation_norm(t.rows(), &y, 1e-13, 50_000).unwrap().value;
        let sn = spectral_norm(&m.0, 1e-13, 50_000).unwrap().value;
        assert!((dn - sn).abs() < 1e-9 * sn.max(1.0));
    }

    #[test]
    fn diagonal_part_norm_is_linf_squared() {
        let y = [0.1, -0.7, 0.3, 0.2, 0.0, 0.05, -0.4, 0.1];
        let d2 = SymmetricMatrix::diagonal(&y.iter().map(|v| v * v).collect::<Vec<_>>());
        let norm = spectral_norm(&d2, 1e-14, 10_000).unwrap().value;
        assert!((norm - 0.49).abs() < 1e-12);
    }
}
