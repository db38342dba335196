use crate::error::{invalid, require_len, Result};
use crate::transform::FastJLTransform;

/// Squared-norm ratios `‖apply(y)‖² / ‖y‖²` over a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `max |ratio − 1|`.
    pub max_deviation: f64,
    pub delta: f64,
    /// Fraction of ratios inside `[1 − δ, 1 + δ]`.
    pub success_fraction: f64,
    /// Input positions of zero vectors, for which the ratio is undefined.
    pub skipped: Vec<usize>,
}

pub fn distortion_stats<V: AsRef<[f64]> + Sync>(t: &FastJLTransform, ys: &[V], delta: f64) -> Result<DistortionReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return invalid(format!("delta = {delta} must be finite and non-negative"));
    }
    for y in ys {
        require_len(t.n(), y.as_ref().len())?;
    }
    let skipped: Vec<usize> = ys
        .iter()
        .enumerate()
        .filter(|(_, y)| y.as_ref().iter().all(|&v| v == 0.0))
        .map(|(i, _)| i)
        .collect();
    let kept: Vec<&[f64]> = ys.iter().map(|y| y.as_ref()).filter(|y| y.iter().any(|&v| v != 0.0)).collect();
    if kept.is_empty() {
        return invalid("no nonzero vectors to measure");
    }
    let embedded = t.apply_batch(&kept)?;
    let ratios: Vec<f64> = kept
        .iter()
        .zip(&embedded)
        .map(|(y, e)| e.iter().map(|v| v * v).sum::<f64>() / y.iter().map(|v| v * v).sum::<f64>())
        .collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_deviation = ratios.iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs()));
    let inside = ratios.iter().filter(|r| (*r - 1.0).abs() <= delta).count();
    Ok(DistortionReport {
        success_fraction: inside as f64 / ratios.len() as f64,
        ratios,
        min,
        max,
        mean,
        max_deviation,
        delta,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{sample_transform, FastJLTransform, SignPattern};

    #[test]
    fn identical_vectors_have_identical_ratios() {
        let t = sample_transform(64, 8, 1).unwrap();
        let y: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        let rep = distortion_stats(&t, &[y.clone(), y.clone(), y], 0.5).unwrap();
        assert_eq!(rep.min, rep.max);
        assert!((rep.mean - rep.min).abs() <= 1e-15 * rep.min);
    }

    #[test]
    fn full_selection_preserves_norms() {
        let t = FastJLTransform::full_selection(32, SignPattern::all_positive(32)).unwrap();
        let ys: Vec<Vec<f64>> = (0..10).map(|s| (0..32).map(|i| ((i * s) as f64).cos()).collect()).collect();
        let rep = distortion_stats(&t, &ys, 1e-9).unwrap();
        assert!(rep.max_deviation <= 1e-9);
        assert_eq!(rep.success_fraction, 1.0);
    }

    #[test]
    fn zero_vectors_are_skipped() {
        let t = sample_transform(8, 4, 1).unwrap();
        let ys = vec![vec![0.0; 8], vec![1.0; 8]];
        let rep = distortion_stats(&t, &ys, 0.5).unwrap();
        assert_eq!(rep.skipped, vec![0]);
        assert_eq!(rep.ratios.len(), 1);
        assert!(distortion_stats(&t, &ys[..1], 0.5).is_err());
    }

    #[test]
    fn mismatched_dimension_is_an_error() {
        let t = sample_transform(8, 4, 1).unwrap();
        assert!(distortion_stats(&t, &[vec![1.0; 4]], 0.5).is_err());
    }
}
