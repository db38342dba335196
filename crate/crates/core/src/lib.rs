//! Fast Johnson-Lindenstrauss transform: a random sign flip followed by `k`
//! sampled rows of the unnormalized Walsh-Hadamard matrix, applied in
//! `O(n log n)`, plus Monte-Carlo estimators for its restricted-isometry,
//! deviation-supremum, distortion, and concentration behaviour.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod hadamard;
pub mod linalg;
pub mod report;
pub mod rng;
pub mod split;
pub mod transform;

pub use error::{Error, Result};
pub use hadamard::{fwht_in_place, hadamard_entry, naive_hadamard_apply, subsampled_apply, RealVector, RowIndexSet};
pub use split::{split_heavy_light, HeavyLightSplit};
pub use transform::{
    dense_matrix, sample_transform, sparsity_level, target_dimension, FastJLTransform, RowSampling, SignPattern,
    TransformParams,
};
