use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::hadamard::RowIndexSet;
use crate::linalg::{power_iteration, SymmetricOperator};
use crate::rng::{derive_seed, rng_from_seed, uniform_subset};
use crate::transform::ceil_snapped;

use super::check_k;
use super::deviation::DeviationOperator;
use super::rip::binomial;

/// Flat supports are enumerated in lexicographic order (one per trial) when
/// there are at most this many of them; otherwise they are sampled.
const FLAT_ENUMERATION_CAP: u128 = 1 << 16;
const EVAL_TOL: f64 = 1e-12;
const EVAL_MAX_ITERS: usize = 5_000;
const SATURATE_STEPS: usize = 200;

/// Lower bound on `sup_{y ∈ B₂ ∩ αB_∞} ‖D_y² − (1/k) D_y ΦᵗΦ D_y‖` for one `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EAlphaEstimate {
    pub alpha: f64,
    pub lower_bound: f64,
    pub witness: Vec<f64>,
    pub samples: usize,
    pub ascent_iters: usize,
    /// Support size of the flat vectors tried.
    pub flat_size: usize,
    /// Trial whose refinement produced the witness.
    pub witness_trial: usize,
}

impl EAlphaEstimate {
    pub fn witness_l2(&self) -> f64 {
        self.witness.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖D_y²‖ = ‖y‖_∞²` for the witness.
    pub fn witness_linf_sq(&self) -> f64 {
        self.witness.iter().fold(0.0f64, |m, v| m.max(v * v))
    }
}

/// `⌈1/α²⌉`, capped at `n`.
pub fn flat_support_size(alpha: f64, n: usize) -> usize {
    (ceil_snapped(1.0 / (alpha * alpha)) as usize).clamp(1, n)
}

/// Scales `w` radially and clips it to `[-α, α]` so the result lies in
/// `B₂ ∩ αB_∞` with unit norm whenever some scale reaches it.
pub fn saturate(w: &[f64], alpha: f64) -> Vec<f64> {
    let clipped = |t: f64| -> Vec<f64> { w.iter().map(|v| (t * v).clamp(-alpha, alpha)).collect() };
    let norm_sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let max_abs = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return w.to_vec();
    }
    // at this scale every nonzero entry is clipped
    let mut hi = alpha / w.iter().filter(|v| **v != 0.0).fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if norm_sq(&clipped(hi)) <= 1.0 {
        return clipped(hi);
    }
    let mut lo = 0.0;
    for _ in 0..SATURATE_STEPS {
        let mid = 0.5 * (lo + hi);
        if norm_sq(&clipped(mid)) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    clipped(lo)
}

fn objective(rows: &RowIndexSet, y: &[f64]) -> (f64, Vec<f64>) {
    let op = DeviationOperator::new(rows, y).expect("dimension checked by caller");
    let s = power_iteration(&op, EVAL_TOL, EVAL_MAX_ITERS);
    (s.value, s.vector)
}

/// Gradient of `|vᵀ D_y A D_y v|` in `y` for the current top vector `v`,
/// where `A = I − (1/k)ΦᵗΦ`.
fn ascent_direction(rows: &RowIndexSet, y: &[f64], v: &[f64]) -> Vec<f64> {
    let op = DeviationOperator::new(rows, y).expect("dimension checked by caller");
    let mut mv = vec![0.0; y.len()];
    op.apply(v, &mut mv);
    let sign = if v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let w: Vec<f64> = y.iter().zip(v).map(|(a, b)| a * b).collect();
    let mut gw = vec![0.0; y.len()];
    op.gram_apply(&w, &mut gw);
    v.iter().zip(w.iter().zip(&gw)).map(|(vi, (wi, gi))| 2.0 * sign * vi * (wi - gi)).collect()
}

struct TrialResult {
    value: f64,
    point: Vec<f64>,
}

fn run_trial(rows: &RowIndexSet, alpha: f64, flat_size: usize, ascent_iters: usize, seed: u64, trial: usize) -> TrialResult {
    let n = rows.n();
    let mut rng = rng_from_seed(derive_seed(seed, trial as u64));

    let direction: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let random_point = saturate(&direction, alpha);

    let total_flat = binomial(n, flat_size);
    let support = if total_flat <= FLAT_ENUMERATION_CAP && (trial as u128) < total_flat {
        unrank_combination(n, flat_size, trial as u128)
    } else {
        uniform_subset(&mut rng, n, flat_size)
    };
    let magnitude = alpha.min(1.0 / (flat_size as f64).sqrt());
    let mut flat_point = vec![0.0; n];
    for &i in &support {
        flat_point[i] = if rng.random::<bool>() { magnitude } else { -magnitude };
    }

    let (rv, rvec) = objective(rows, &random_point);
    let (fv, fvec) = objective(rows, &flat_point);
    let (mut value, mut point, mut top) =
        if fv >= rv { (fv, flat_point, fvec) } else { (rv, random_point, rvec) };

    // greedy projected ascent: only improvements are kept, so the trial
    // value never decreases with more iterations
    let mut step = 0.5;
    for _ in 0..ascent_iters {
        if value == 0.0 {
            break;
        }
        let grad = ascent_direction(rows, &point, &top);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let candidate: Vec<f64> = point.iter().zip(&grad).map(|(p, g)| p + step * g / gnorm).collect();
        let candidate = saturate(&candidate, alpha);
        let (cv, cvec) = objective(rows, &candidate);
        if cv > value {
            value = cv;
            point = candidate;
            top = cvec;
            step = (step * 1.5).min(2.0);
        } else {
            step *= 0.5;
        }
    }
    TrialResult { value, point }
}

/// The `rank`-th `size`-subset of `[0, n)` in lexicographic order.
fn unrank_combination(n: usize, size: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(size);
    let mut next = 0;
    for slot in 0..size {
        loop {
            let remaining = binomial(n - next - 1, size - slot - 1);
            if rank < remaining {
                break;
            }
            rank -= remaining;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Monte-Carlo lower bound on the deviation supremum over `B₂ ∩ αB_∞`.
///
/// Each of the `samples` trials draws from its own sub-stream of `seed`, so the
/// estimate is non-decreasing in both `samples` and `ascent_iters`. A trial
/// evaluates a random boundary point and a flat vector with `⌈1/α²⌉` entries
/// of magnitude `α`, then refines the better one with `ascent_iters` steps of
/// projected gradient ascent.
pub fn estimate_e_alpha(
    rows: &RowIndexSet,
    k: usize,
    alpha: f64,
    samples: usize,
    ascent_iters: usize,
    seed: u64,
) -> Result<EAlphaEstimate> {
    check_k(rows, k)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("alpha = {alpha} outside (0, 1]"));
    }
    if samples < 1 {
        return invalid("samples must be at least 1");
    }
    let flat_size = flat_support_size(alpha, rows.n());
    let trials: Vec<TrialResult> = (0..samples)
        .into_par_iter()
        .map(|t| run_trial(rows, alpha, flat_size, ascent_iters, seed, t))
        .collect();
    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.value > trials[best].value {
            best = i;
        }
    }
    let winner = &trials[best];
    Ok(EAlphaEstimate {
        alpha,
        lower_bound: winner.value,
        witness: winner.point.clone(),
        samples,
        ascent_iters,
        flat_size,
        witness_trial: best,
    })
}

/// The estimator objective at `y`, evaluated exactly as the estimator does.
pub fn evaluate_objective(rows: &RowIndexSet, y: &[f64]) -> f64 {
    objective(rows, y).0
}
