//! Spectral norms of symmetric, possibly indefinite, operators.

use rand::Rng;

use crate::error::{invalid, require_len, Result};
use crate::rng::rng_from_seed;

/// Seed of the fixed pseudo-random start vector. Re-evaluating the same
/// operator therefore reproduces the same estimate bit for bit.
const START_SEED: u64 = 0x05EE_D0FA_11CE;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 20_000;

/// Anything that can compute `out = M x` for a symmetric `M`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// Dense row-major symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Accepts `data` if `|m_ij - m_ji| <= tol * max(1, max|m|)`.
    pub fn new(n: usize, data: Vec<f64>, tol: f64) -> Result<Self> {
        require_len(n * n, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!("matrix entry {i} is not finite"));
        }
        let m = Self { n, data };
        m.check_symmetric(tol)?;
        Ok(m)
    }

    fn check_symmetric(&self, tol: f64) -> Result<()> {
        let n = self.n;
        let scale = self.data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                if (a - b).abs() > tol * scale {
                    return invalid(format!("not symmetric at ({i}, {j}): {a} vs {b}"));
                }
            }
        }
        Ok(())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Principal submatrix on `support`.
    pub fn principal(&self, support: &[usize]) -> Self {
        Self::from_fn(support.len(), |a, b| self.get(support[a], support[b]))
    }
}

impl SymmetricOperator for SymmetricMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralNorm {
    /// `max |λ|`; a lower bound when not converged.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Unit vector in the dominant invariant subspace of `M²`.
    pub vector: Vec<f64>,
}

/// Spectral norm of a symmetric matrix; see [`power_iteration`].
pub fn spectral_norm(m: &SymmetricMatrix, tol: f64, max_iters: usize) -> Result<SpectralNorm> {
    m.check_symmetric(1e-9)?;
    Ok(power_iteration(m, tol, max_iters))
}

/// Largest absolute eigenvalue of a symmetric operator.
///
/// Iterates on `M²` by applying `M` twice and returns the square root of the
/// Rayleigh quotient, so `±λ` pairs need no shift. Stops when the estimate's
/// relative change drops below `tol`.
pub fn power_iteration<M: SymmetricOperator + ?Sized>(m: &M, tol: f64, max_iters: usize) -> SpectralNorm {
    let n = m.dim();
    if n == 0 {
        return SpectralNorm { value: 0.0, iterations: 0, converged: true, vector: vec![] };
    }
    let mut rng = rng_from_seed(START_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) + 0.1).collect();
    normalize(&mut v);
    let mut mv = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0f64;
    for iter in 1..=max_iters {
        m.apply(&v, &mut mv);
        let rayleigh: f64 = mv.iter().map(|x| x * x).sum();
        if rayleigh == 0.0 {
            return SpectralNorm { value: 0.0, iterations: iter, converged: true, vector: v };
        }
        let next = rayleigh.sqrt();
        m.apply(&mv, &mut w);
        let done = iter > 1 && (next - estimate).abs() <= tol * next;
        estimate = estimate.max(next);
        if done {
            return SpectralNorm { value: estimate, iterations: iter, converged: true, vector: v };
        }
        std::mem::swap(&mut v, &mut w);
        normalize(&mut v);
    }
    SpectralNorm { value: estimate, iterations: max_iters, converged: false, vector: v }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let id = SymmetricMatrix::diagonal(&[1.0; 4]);
        assert!((spectral_norm(&id, 1e-12, 1000).unwrap().value - 1.0).abs() < 1e-12);
        let d = SymmetricMatrix::diagonal(&[3.0, 1.0, -5.0]);
        let s = spectral_norm(&d, 1e-12, 1000).unwrap();
        assert!((s.value - 5.0).abs() < 1e-9);
        assert!(s.converged);
    }

    #[test]
    fn indefinite_pair_has_no_sign_trouble() {
        // eigenvalues +2 and -2
        let m = SymmetricMatrix::new(2, vec![0.0, 2.0, 2.0, 0.0], 1e-12).unwrap();
        assert!((spectral_norm(&m, 1e-12, 1000).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let z = SymmetricMatrix::diagonal(&[0.0; 5]);
        let s = spectral_norm(&z, 1e-12, 10).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.converged);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(SymmetricMatrix::new(2, vec![1.0, 2.0, 0.0, 1.0], 1e-9).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let d = SymmetricMatrix::diagonal(&[1.0, 0.999_999, 0.5]);
        let s = spectral_norm(&d, 1e-16, 3).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 3);
        assert!(s.value <= 1.0 + 1e-12);
    }

    #[test]
    fn deterministic() {
        let m = SymmetricMatrix::from_fn(6, |i, j| ((i * 7 + j * 7) % 5) as f64 - 2.0);
        let a = spectral_norm(&m, 1e-12, 1000).unwrap();
        let b = spectral_norm(&m, 1e-12, 1000).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
