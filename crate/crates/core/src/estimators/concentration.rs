use rayon::prelude::*;

use crate::error::{invalid, require_len, Result};
use crate::hadamard::{fwht_unchecked, RowIndexSet};
use crate::linalg::power_iteration;
use crate::rng::{derive_seed, rng_from_seed, uniform_signs};
use crate::split::HeavyLightSplit;

use super::check_k;
use super::deviation::DeviationOperator;

/// Tail thresholds, as multiples of `σ`, at which exceedance is reported.
pub const TAIL_MULTIPLES: [f64; 3] = [1.0, 2.0, 3.0];

const SIGMA_TOL: f64 = 1e-13;
const SIGMA_MAX_ITERS: usize = 50_000;

/// Monte-Carlo mean and standard deviation of
/// `Z = (1/k) bᵗ D_heavy ΦᵗΦ D_light b` over uniform sign vectors `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossTermStats {
    pub mean: f64,
    /// Sample standard deviation (`trials − 1` denominator).
    pub std: f64,
    pub trials: usize,
}

impl CrossTermStats {
    pub fn standard_error(&self) -> f64 {
        self.std / (self.trials as f64).sqrt()
    }
}

/// `(1/sqrt(k)) Φ (w ⊙ b)`.
fn project(rows: &RowIndexSet, w: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    let mut buf: Vec<f64> = w.iter().zip(b).map(|(x, s)| x * s).collect();
    fwht_unchecked(&mut buf);
    rows.indices().iter().map(|&r| buf[r] * scale).collect()
}

fn trial_signs(seed: u64, trial: usize, n: usize) -> Vec<f64> {
    uniform_signs(&mut rng_from_seed(derive_seed(seed, trial as u64)), n)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
    (m, var.sqrt())
}

pub fn cross_term_stats(rows: &RowIndexSet, k: usize, split: &HeavyLightSplit, trials: usize, seed: u64) -> Result<CrossTermStats> {
    check_k(rows, k)?;
    require_len(rows.n(), split.n())?;
    if trials < 2 {
        return invalid("cross-term statistics need at least 2 trials");
    }
    let n = rows.n();
    let scale = 1.0 / (k as f64).sqrt();
    let zs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let b = trial_signs(seed, t, n);
            let h = project(rows, &split.heavy, &b, scale);
            let l = project(rows, &split.light, &b, scale);
            h.iter().zip(&l).map(|(a, c)| a * c).sum()
        })
        .collect();
    let (mean, std) = mean_std(&zs);
    Ok(CrossTermStats { mean, std, trials })
}

/// Spread of `X = ‖(1/sqrt(k)) Φ D_light b‖` over uniform sign vectors `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub trials: usize,
    pub median: f64,
    /// `sqrt(E[X²])`.
    pub rms: f64,
    /// `‖(1/sqrt(k)) Φ D_light‖`.
    pub sigma: f64,
    pub sigma_converged: bool,
    /// `|median − rms| / σ`; zero when both the gap and `σ` vanish.
    pub normalized_gap: f64,
    /// Fraction of samples with `X > median + tσ`, per entry of [`TAIL_MULTIPLES`].
    pub tail_upper: [f64; 3],
    /// Fraction with `X < median − tσ`.
    pub tail_lower: [f64; 3],
    /// Cross-term statistics when the caller also holds the heavy part.
    pub cross: Option<CrossTermStats>,
}

impl ConcentrationReport {
    pub fn tail_two_sided(&self, i: usize) -> f64 {
        self.tail_upper[i] + self.tail_lower[i]
    }
}

pub fn concentration_check(rows: &RowIndexSet, k: usize, light: &[f64], trials: usize, seed: u64) -> Result<ConcentrationReport> {
    check_k(rows, k)?;
    require_len(rows.n(), light.len())?;
    if trials < 100 {
        return invalid("concentration check needs at least 100 trials");
    }
    let n = rows.n();
    let scale = 1.0 / (k as f64).sqrt();
    let xs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let b = trial_signs(seed, t, n);
            project(rows, light, &b, scale).iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();

    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = trials / 2;
    let median = if trials % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    let rms = (xs.iter().map(|x| x * x).sum::<f64>() / trials as f64).sqrt();

    // σ² is the top eigenvalue of (1/k) D_light ΦᵗΦ D_light
    let gram = DeviationOperator::gram_only(rows, light)?;
    let top = power_iteration(&gram, SIGMA_TOL, SIGMA_MAX_ITERS);
    let sigma = top.value.sqrt();

    let gap = (median - rms).abs();
    let normalized_gap = if gap == 0.0 { 0.0 } else { gap / sigma };
    let frac = |pred: &dyn Fn(f64) -> bool| xs.iter().filter(|&&x| pred(x)).count() as f64 / trials as f64;
    let mut tail_upper = [0.0; 3];
    let mut tail_lower = [0.0; 3];
    for (i, m) in TAIL_MULTIPLES.iter().enumerate() {
        tail_upper[i] = frac(&|x| x > median + m * sigma);
        tail_lower[i] = frac(&|x| x < median - m * sigma);
    }
    Ok(ConcentrationReport {
        trials,
        median,
        rms,
        sigma,
        sigma_converged: top.converged,
        normalized_gap,
        tail_upper,
        tail_lower,
        cross: None,
    })
}
