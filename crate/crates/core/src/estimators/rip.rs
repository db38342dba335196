use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::hadamard::RowIndexSet;
use crate::linalg::{power_iteration, SymmetricMatrix};
use crate::rng::{rng_from_seed, uniform_subset};

use super::check_k;
use super::deviation::gram_profile;

const SUPPORT_TOL: f64 = 1e-14;
const SUPPORT_MAX_ITERS: usize = 100_000;

/// Empirical restricted-isometry constant at sparsity `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RipReport {
    pub r: usize,
    /// `max_T ‖id_T − (1/k) id_T ΦᵗΦ id_T‖` over the visited supports.
    pub delta_hat: f64,
    pub witness_support: Vec<usize>,
    pub supports_checked: usize,
    /// Every `r`-subset was visited, so `delta_hat` is the exact maximum.
    pub exhaustive: bool,
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Advances `c` to the next `r`-combination of `[0, n)` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if c[i] < n - r + i {
            c[i] += 1;
            for j in (i + 1)..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn support_norm(profile: &[f64], support: &[usize]) -> f64 {
    let m = SymmetricMatrix::from_fn(support.len(), |a, b| {
        let (i, j) = (support[a], support[b]);
        if i == j {
            profile[0] - 1.0
        } else {
            profile[i ^ j]
        }
    });
    power_iteration(&m, SUPPORT_TOL, SUPPORT_MAX_ITERS).value
}

/// `‖id_T − (1/k) id_T ΦᵗΦ id_T‖` for a single support `T`.
pub fn evaluate_support(rows: &RowIndexSet, support: &[usize]) -> Result<f64> {
    if let Some(&bad) = support.iter().find(|&&i| i >= rows.n()) {
        return invalid(format!("support index {bad} out of range"));
    }
    Ok(support_norm(&gram_profile(rows), support))
}

/// Largest deviation from the identity over `r`-sparse supports.
///
/// Enumerates all `C(n, r)` supports when that count is at most `budget`;
/// otherwise visits `budget` distinct supports drawn uniformly from `seed`.
pub fn rip_constant_bruteforce(rows: &RowIndexSet, k: usize, r: usize, budget: usize, seed: u64) -> Result<RipReport> {
    check_k(rows, k)?;
    let n = rows.n();
    if r < 1 || r > n {
        return invalid(format!("r = {r} outside [1, n = {n}]"));
    }
    if budget < 1 {
        return invalid("support budget must be at least 1");
    }
    let total = binomial(n, r);
    let exhaustive = total <= budget as u128;
    let supports: Vec<Vec<usize>> = if exhaustive {
        let mut c: Vec<usize> = (0..r).collect();
        let mut out = Vec::with_capacity(total as usize);
        loop {
            out.push(c.clone());
            if !next_combination(&mut c, n) {
                break;
            }
        }
        out
    } else {
        let mut rng = rng_from_seed(seed);
        let mut seen = HashSet::with_capacity(budget);
        let mut out = Vec::with_capacity(budget);
        while out.len() < budget {
            let s = uniform_subset(&mut rng, n, r);
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
        out
    };

    let profile = gram_profile(rows);
    let norms: Vec<f64> = supports.par_iter().map(|s| support_norm(&profile, s)).collect();
    // first maximum wins, so the witness does not depend on scheduling
    let (best, &delta_hat) = norms
        .iter()
        .enumerate()
        .fold((0, &norms[0]), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    Ok(RipReport {
        r,
        delta_hat,
        witness_support: supports[best].clone(),
        supports_checked: supports.len(),
        exhaustive,
    })
}
