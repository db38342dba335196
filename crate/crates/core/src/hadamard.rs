//! The unnormalized Walsh-Hadamard matrix in natural (Hadamard) ordering,
//! `H[i][j] = (-1)^popcount(i & j)`, used only as an implicit operator.

use crate::error::{invalid, require_len, require_pow2, Error, Result};

/// Stages with butterfly span below this many elements run block by block so
/// each block stays resident in L1.
const L1_BLOCK: usize = 1 << 11;

/// A finite real vector whose length is a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        require_pow2(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("entry {i} is not finite"));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for RealVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RealVector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// `k` row indices into an `n x n` Hadamard matrix. Duplicates are allowed so
/// that sampling with replacement is representable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl RowIndexSet {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        require_pow2(n)?;
        if indices.is_empty() {
            return invalid("row index set must be non-empty");
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return invalid(format!("row index {bad} out of range for n = {n}"));
        }
        Ok(Self { n, indices })
    }

    /// All `n` rows in order; `subsampled_apply` with this set is the full transform.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Multiplicity of each row in `[0, n)`.
    pub fn histogram(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.n];
        for &i in &self.indices {
            counts[i] += 1.0;
        }
        counts
    }
}

/// `(-1)^popcount(row & col)` as the sign bit; cheaper than the `f64` form in loops.
#[inline]
pub(crate) fn entry_sign(row: usize, col: usize) -> f64 {
    if (row & col).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Entry `(row, col)` of the unnormalized `n x n` Hadamard matrix.
pub fn hadamard_entry(row: usize, col: usize, n: usize) -> Result<f64> {
    require_pow2(n)?;
    if row >= n || col >= n {
        return invalid(format!("index ({row}, {col}) out of range for n = {n}"));
    }
    Ok(entry_sign(row, col))
}

/// Replaces `x` with `H x` using `n log2 n` butterfly additions and subtractions.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    require_pow2(x.len())?;
    fwht_unchecked(x);
    Ok(())
}

pub(crate) fn fwht_unchecked(x: &mut [f64]) {
    let n = x.len();
    let block = n.min(L1_BLOCK);
    for chunk in x.chunks_exact_mut(block) {
        butterfly_stages(chunk, 1, block);
    }
    // stages that span blocks are memory bound; fuse them in pairs
    let mut h = block;
    while 4 * h <= n {
        radix4_stage(x, h);
        h *= 4;
    }
    butterfly_stages(x, h, n);
}

/// The stages with half-spans `h` and `2h` in one pass over memory.
#[inline]
fn radix4_stage(x: &mut [f64], h: usize) {
    for group in x.chunks_exact_mut(4 * h) {
        let (lo, hi) = group.split_at_mut(2 * h);
        let (a, b) = lo.split_at_mut(h);
        let (c, d) = hi.split_at_mut(h);
        for (((a, b), c), d) in a.iter_mut().zip(b.iter_mut()).zip(c.iter_mut()).zip(d.iter_mut()) {
            let (s0, d0) = (*a + *b, *a - *b);
            let (s1, d1) = (*c + *d, *c - *d);
            *a = s0 + s1;
            *b = d0 + d1;
            *c = s0 - s1;
            *d = d0 - d1;
        }
    }
}

/// Runs the stages with half-span `h` for `start <= h < end`.
#[inline]
fn butterfly_stages(x: &mut [f64], start: usize, end: usize) {
    let mut h = start;
    while h < end {
        for pair in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = pair.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// `H x` by the direct `O(n^2)` double loop over [`hadamard_entry`].
pub fn naive_hadamard_apply(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    require_pow2(n)?;
    Ok((0..n)
        .map(|i| x.iter().enumerate().map(|(j, &v)| entry_sign(i, j) * v).sum())
        .collect())
}

/// `Φ x`: one fast transform of a copy of `x`, then a gather at `rows`.
pub fn subsampled_apply(x: &[f64], rows: &RowIndexSet) -> Result<Vec<f64>> {
    require_len(rows.n(), x.len())?;
    let mut buf = x.to_vec();
    fwht_unchecked(&mut buf);
    Ok(rows.indices().iter().map(|&r| buf[r]).collect())
}
