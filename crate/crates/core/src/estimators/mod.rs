//! Empirical checks of the restricted-isometry, deviation-supremum,
//! distortion, cross-term, and concentration behaviour of the transform.

mod concentration;
mod deviation;
mod distortion;
mod ealpha;
mod rip;

pub use concentration::{concentration_check, cross_term_stats, ConcentrationReport, CrossTermStats, TAIL_MULTIPLES};
pub use deviation::{deviation_matrix, deviation_norm, gram_profile, DeviationMatrix, DeviationOperator};
pub use distortion::{distortion_stats, DistortionReport};
pub use ealpha::{estimate_e_alpha, evaluate_objective, flat_support_size, saturate, EAlphaEstimate};
pub use rip::{binomial, evaluate_support, rip_constant_bruteforce, RipReport};

use crate::error::{invalid, Result};
use crate::hadamard::RowIndexSet;

fn check_k(rows: &RowIndexSet, k: usize) -> Result<()> {
    if rows.k() != k {
        return invalid(format!("k = {k} but the row set has {} rows", rows.k()));
    }
    Ok(())
}
