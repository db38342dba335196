//! The random projection `y -> (1/sqrt(k)) Φ D_b y`: a random sign flip,
//! a fast Walsh-Hadamard transform, a gather of `k` rows, and a scale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_len, require_pow2, Error, Result};
use crate::hadamard::{entry_sign, fwht_unchecked, RowIndexSet};
use crate::rng::{rng_from_seed, uniform_index, uniform_signs, GENERATOR_ID};

/// Largest `n` for which [`dense_matrix`] materializes by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

const TRANSFORM_MAGIC: &[u8; 4] = b"FJLT";
const TRANSFORM_VERSION: u16 = 1;
/// Serialized transform size in bytes.
pub const TRANSFORM_HEADER_LEN: usize = 24;

/// Problem size and distortion target from which `k` and `r` are derived.
///
/// Logarithms are base 2; `c_k` and `c_r` are the otherwise unspecified
/// leading constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub n: usize,
    pub point_count: u128,
    pub delta: f64,
    pub c_k: f64,
    pub c_r: f64,
}

impl TransformParams {
    pub fn new(n: usize, point_count: u128, delta: f64) -> Result<Self> {
        Self::with_constants(n, point_count, delta, 1.0, 1.0)
    }

    pub fn with_constants(n: usize, point_count: u128, delta: f64, c_k: f64, c_r: f64) -> Result<Self> {
        let p = Self { n, point_count, delta, c_k, c_r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_pow2(self.n)?;
        if self.point_count < 2 {
            return invalid("point count must be at least 2");
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return invalid(format!("delta = {} outside (0, 1/2]", self.delta));
        }
        for (name, c) in [("c_k", self.c_k), ("c_r", self.c_r)] {
            if !(c.is_finite() && c > 0.0) {
                return invalid(format!("{name} = {c} must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Result of [`target_dimension`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetDimension {
    pub k: usize,
    /// Unclamped formula value.
    pub raw: f64,
    /// The formula exceeded `n` and `k` was clamped to `n`.
    pub clamped: bool,
}

/// Result of [`sparsity_level`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityLevel {
    pub r: usize,
    /// `1 / sqrt(r)`.
    pub alpha: f64,
    pub raw: f64,
    pub clamped: bool,
}

/// `ceil(x)`, except that values within float rounding of an integer snap to it.
pub(crate) fn ceil_snapped(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

fn clamp_count(raw: f64, n: usize) -> (usize, bool) {
    let c = ceil_snapped(raw).max(1.0);
    if c > n as f64 {
        (n, true)
    } else {
        (c as usize, false)
    }
}

/// `k = clamp(ceil(c_k * delta^-4 * log2(N) * log2(n)^4), 1, n)`.
pub fn target_dimension(params: &TransformParams) -> Result<TargetDimension> {
    params.validate()?;
    let log_n = (params.n as f64).log2();
    let raw = params.c_k * params.delta.powi(-4) * (params.point_count as f64).log2() * log_n.powi(4);
    let (k, clamped) = clamp_count(raw, params.n);
    Ok(TargetDimension { k, raw, clamped })
}

/// `r = clamp(ceil(c_r * delta^-2 * log2(N)), 1, n)` and `alpha = 1/sqrt(r)`.
pub fn sparsity_level(params: &TransformParams) -> Result<SparsityLevel> {
    params.validate()?;
    let raw = params.c_r / (params.delta * params.delta) * (params.point_count as f64).log2();
    let (r, clamped) = clamp_count(raw, params.n);
    Ok(SparsityLevel { r, alpha: 1.0 / (r as f64).sqrt(), raw, clamped })
}

/// How the `k` rows are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowSampling {
    /// i.i.d. uniform rows; repeats possible.
    #[default]
    WithReplacement,
    /// `k` distinct rows.
    WithoutReplacement,
}

impl RowSampling {
    fn code(self) -> u8 {
        match self {
            RowSampling::WithReplacement => 0,
            RowSampling::WithoutReplacement => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(RowSampling::WithReplacement),
            1 => Ok(RowSampling::WithoutReplacement),
            c => Err(Error::Format(format!("unknown sampling mode {c}"))),
        }
    }
}

/// The diagonal of `D_b`: `n` entries, each exactly `+1.0` or `-1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignPattern(Vec<f64>);

impl SignPattern {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        if let Some(i) = signs.iter().position(|&s| s != 1.0 && s != -1.0) {
            return invalid(format!("sign {i} is {} (expected +1 or -1)", signs[i]));
        }
        Ok(Self(signs))
    }

    pub fn all_positive(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A sampled fast JL transform. Immutable once built; reconstructible from
/// `(n, k, seed, sampling)` when produced by [`sample_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct FastJLTransform {
    rows: RowIndexSet,
    signs: SignPattern,
    seed: u64,
    sampling: RowSampling,
    scale: f64,
}

/// Samples rows with replacement and uniform signs from `seed`.
pub fn sample_transform(n: usize, k: usize, seed: u64) -> Result<FastJLTransform> {
    FastJLTransform::sample(n, k, seed, RowSampling::WithReplacement)
}

impl FastJLTransform {
    /// Draw order from the seeded generator: `k` row indices first, then
    /// `n` signs packed 64 per word.
    pub fn sample(n: usize, k: usize, seed: u64, sampling: RowSampling) -> Result<Self> {
        require_pow2(n)?;
        if k < 1 || k > n {
            return invalid(format!("k = {k} outside [1, n = {n}]"));
        }
        let mut rng = rng_from_seed(seed);
        let indices = match sampling {
            RowSampling::WithReplacement => (0..k).map(|_| uniform_index(&mut rng, n)).collect(),
            RowSampling::WithoutReplacement => {
                let mut perm: Vec<usize> = (0..n).collect();
                for i in 0..k {
                    let j = i + uniform_index(&mut rng, n - i);
                    perm.swap(i, j);
                }
                perm.truncate(k);
                perm
            }
        };
        let signs = uniform_signs(&mut rng, n);
        Ok(Self {
            rows: RowIndexSet::new(n, indices)?,
            signs: SignPattern(signs),
            seed,
            sampling,
            scale: 1.0 / (k as f64).sqrt(),
        })
    }

    /// Builds a transform from explicit parts. The seed is recorded but does
    /// not regenerate these parts.
    pub fn from_parts(rows: RowIndexSet, signs: SignPattern, seed: u64) -> Result<Self> {
        require_len(rows.n(), signs.len())?;
        let scale = 1.0 / (rows.k() as f64).sqrt();
        Ok(Self { rows, signs, seed, sampling: RowSampling::WithReplacement, scale })
    }

    /// `k = n` with every row selected once; the map is then an isometry.
    pub fn full_selection(n: usize, signs: SignPattern) -> Result<Self> {
        Self::from_parts(RowIndexSet::full(n)?, signs, 0)
    }

    pub fn n(&self) -> usize {
        self.rows.n()
    }

    pub fn k(&self) -> usize {
        self.rows.k()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampling(&self) -> RowSampling {
        self.sampling
    }

    pub fn rows(&self) -> &RowIndexSet {
        &self.rows
    }

    pub fn signs(&self) -> &SignPattern {
        &self.signs
    }

    /// `(1/sqrt(k)) Φ (b ⊙ y)` in `O(n log n)`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        require_len(self.n(), y.len())?;
        let mut buf: Vec<f64> = y.iter().zip(self.signs.as_slice()).map(|(v, s)| v * s).collect();
        fwht_unchecked(&mut buf);
        Ok(self.rows.indices().iter().map(|&r| buf[r] * self.scale).collect())
    }

    /// Elementwise [`apply`](Self::apply), in parallel; output order matches input order.
    pub fn apply_batch<V: AsRef<[f64]> + Sync>(&self, ys: &[V]) -> Result<Vec<Vec<f64>>> {
        ys.par_iter()
            .enumerate()
            .map(|(index, y)| {
                self.apply(y.as_ref())
                    .map_err(|e| Error::BatchItem { index, source: Box::new(e) })
            })
            .collect()
    }

    /// Fixed-size binary header; the transform is stored by seed, never as a matrix.
    ///
    /// Layout (little-endian): `"FJLT"`, version `u16`, generator id `u8`,
    /// sampling mode `u8`, `n: u32`, `k: u32`, `seed: u64`.
    pub fn to_bytes(&self) -> [u8; TRANSFORM_HEADER_LEN] {
        let mut out = [0u8; TRANSFORM_HEADER_LEN];
        out[0..4].copy_from_slice(TRANSFORM_MAGIC);
        out[4..6].copy_from_slice(&TRANSFORM_VERSION.to_le_bytes());
        out[6] = GENERATOR_ID;
        out[7] = self.sampling.code();
        out[8..12].copy_from_slice(&(self.n() as u32).to_le_bytes());
        out[12..16].copy_from_slice(&(self.k() as u32).to_le_bytes());
        out[16..24].copy_from_slice(&self.seed.to_le_bytes());
        out
    }

    /// Regenerates a transform from its header.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != TRANSFORM_HEADER_LEN {
            return Err(Error::Format(format!("transform header is {} bytes", bytes.len())));
        }
        if &bytes[0..4] != TRANSFORM_MAGIC {
            return Err(Error::Format("bad transform magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != TRANSFORM_VERSION {
            return Err(Error::Format(format!("unsupported transform version {version}")));
        }
        if bytes[6] != GENERATOR_ID {
            return Err(Error::Format(format!("unknown generator id {}", bytes[6])));
        }
        let sampling = RowSampling::from_code(bytes[7])?;
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let k = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        Self::sample(n, k, seed, sampling)
    }
}

/// A row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        require_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Materializes `(1/sqrt(k)) Φ D_b` with the default size cap.
pub fn dense_matrix(t: &FastJLTransform) -> Result<DenseMatrix> {
    dense_matrix_capped(t, DEFAULT_DENSE_CAP)
}

pub fn dense_matrix_capped(t: &FastJLTransform, cap: usize) -> Result<DenseMatrix> {
    let n = t.n();
    if n > cap {
        return Err(Error::ResourceLimit(format!("dense matrix needs n = {n} <= cap {cap}")));
    }
    let signs = t.signs().as_slice();
    let mut data = Vec::with_capacity(t.k() * n);
    for &r in t.rows().indices() {
        data.extend((0..n).map(|j| t.scale * entry_sign(r, j) * signs[j]));
    }
    Ok(DenseMatrix { rows: t.k(), cols: n, data })
}
