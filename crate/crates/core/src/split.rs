//! Heavy/light decomposition `y = heavy + light`, where `heavy` keeps the `r`
//! largest-magnitude coordinates.

use std::cmp::Ordering;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyLightSplit {
    pub heavy: Vec<f64>,
    pub light: Vec<f64>,
    /// Sorted ascending. May be shorter than `r` when `y` has fewer nonzeros.
    pub heavy_support: Vec<usize>,
    pub r: usize,
}

impl HeavyLightSplit {
    pub fn n(&self) -> usize {
        self.heavy.len()
    }

    pub fn heavy_norm_sq(&self) -> f64 {
        self.heavy.iter().map(|v| v * v).sum()
    }

    pub fn light_norm_sq(&self) -> f64 {
        self.light.iter().map(|v| v * v).sum()
    }

    pub fn light_max_abs(&self) -> f64 {
        self.light.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Orders by magnitude descending, then index ascending (lowest index wins ties).
fn heavier(y: &[f64], a: usize, b: usize) -> Ordering {
    y[b].abs()
        .partial_cmp(&y[a].abs())
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

pub fn split_heavy_light(y: &[f64], r: usize) -> Result<HeavyLightSplit> {
    let n = y.len();
    if r < 1 || r > n {
        return invalid(format!("r = {r} outside [1, n = {n}]"));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return invalid(format!("entry {i} is not finite"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if r < n {
        order.select_nth_unstable_by(r - 1, |&a, &b| heavier(y, a, b));
    }
    let mut heavy_support: Vec<usize> = order[..r].iter().copied().filter(|&i| y[i] != 0.0).collect();
    heavy_support.sort_unstable();

    let mut heavy = vec![0.0; n];
    let mut light = y.to_vec();
    for &i in &heavy_support {
        heavy[i] = y[i];
        light[i] = 0.0;
    }
    Ok(HeavyLightSplit { heavy, light, heavy_support, r })
}

/// `‖heavy‖² + ‖light‖² − ‖y‖²`, evaluated without rounding error and rounded once.
///
/// Zero iff the two parts' squared entries sum exactly to `y`'s.
pub fn pythagoras_defect(y: &[f64], split: &HeavyLightSplit) -> f64 {
    let mut acc = Expansion::default();
    for &v in split.heavy.iter().chain(&split.light) {
        acc.add_square(v, 1.0);
    }
    for &v in y {
        acc.add_square(v, -1.0);
    }
    acc.estimate()
}

/// A nonoverlapping floating-point expansion (Shewchuk) holding an exact sum.
#[derive(Debug, Default)]
struct Expansion {
    terms: Vec<f64>,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl Expansion {
    fn grow(&mut self, mut q: f64) {
        let mut out = Vec::with_capacity(self.terms.len() + 1);
        for &t in &self.terms {
            let (s, e) = two_sum(q, t);
            if e != 0.0 {
                out.push(e);
            }
            q = s;
        }
        if q != 0.0 {
            out.push(q);
        }
        self.terms = out;
    }

    /// Adds `sign * v * v` exactly; the product is split with a fused multiply-add.
    fn add_square(&mut self, v: f64, sign: f64) {
        let p = v * v;
        let e = v.mul_add(v, -p);
        self.grow(sign * p);
        self.grow(sign * e);
    }

    fn estimate(&self) -> f64 {
        self.terms.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn basic_example() {
        let s = split_heavy_light(&[0.8, 0.6, 0.0, 0.0], 1).unwrap();
        assert_eq!(s.heavy, vec![0.8, 0.0, 0.0, 0.0]);
        assert_eq!(s.light, vec![0.0, 0.6, 0.0, 0.0]);
        assert_eq!(s.heavy_support, vec![0]);
    }

    #[test]
    fn everything_heavy_at_r_equals_n() {
        let n = 16;
        let y = vec![1.0 / (n as f64).sqrt(); n];
        let s = split_heavy_light(&y, n).unwrap();
        assert!(s.light.iter().all(|&v| v == 0.0));
        assert_eq!(s.heavy, y);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let y = [0.5, -0.5, 0.5, -0.5];
        let s = split_heavy_light(&y, 2).unwrap();
        assert_eq!(s.heavy_support, vec![0, 1]);
        assert_eq!(s.light_max_abs(), 0.5);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(s.light_max_abs() <= norm / 2f64.sqrt());
    }

    #[test]
    fn sparse_input_gives_short_support() {
        let s = split_heavy_light(&[0.0, 3.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(s.heavy_support, vec![1]);
        assert!(s.light.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_r() {
        assert!(split_heavy_light(&[1.0, 2.0], 0).is_err());
        assert!(split_heavy_light(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn defect_detects_a_changed_entry() {
        let y = [0.3, 0.1, 0.7, 0.2];
        let mut s = split_heavy_light(&y, 2).unwrap();
        assert_eq!(pythagoras_defect(&y, &s), 0.0);
        s.light[1] = 0.1 + 1e-17 * 8.0;
        assert_ne!(pythagoras_defect(&y, &s), 0.0);
    }

    fn unit_vector(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    proptest! {
        #[test]
        fn invariants_hold(log_n in 0u32..9, r_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let n = 1usize << log_n;
            let r = 1 + ((n - 1) as f64 * r_frac) as usize;
            let y = unit_vector(n, seed);
            let s = split_heavy_light(&y, r).unwrap();
            prop_assert!(s.heavy_support.len() <= r);
            for i in 0..n {
                prop_assert!(s.heavy[i] == 0.0 || s.light[i] == 0.0);
                prop_assert_eq!(s.heavy[i] + s.light[i], y[i]);
            }
            prop_assert_eq!(pythagoras_defect(&y, &s), 0.0);
            let min_heavy = s.heavy_support.iter().map(|&i| y[i].abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(s.light_max_abs() <= min_heavy);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(s.light_max_abs() <= norm / (r as f64).sqrt() * (1.0 + 1e-12));

            let again = split_heavy_light(&s.heavy, r).unwrap();
            prop_assert_eq!(&again.heavy, &s.heavy);
            prop_assert!(again.light.iter().all(|&v| v == 0.0));
        }

        #[test]
        fn permutation_equivariance(log_n in 1u32..8, seed in any::<u64>(), r_frac in 0.0f64..1.0) {
            let n = 1usize << log_n;
            let r = 1 + ((n - 1) as f64 * r_frac) as usize;
            let y = unit_vector(n, seed);
            let mut rng = rng_from_seed(seed ^ 0xABCD);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let py: Vec<f64> = perm.iter().map(|&p| y[p]).collect();
            let s = split_heavy_light(&y, r).unwrap();
            let ps = split_heavy_light(&py, r).unwrap();
            for i in 0..n {
                prop_assert_eq!(ps.heavy[i], s.heavy[perm[i]]);
            }
        }
    }
}
