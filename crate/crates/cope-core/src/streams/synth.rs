//! Synthetic Gaussian-cluster datasets: a fast, dataset-free double for the
//! property suites and smoke runs.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::Rng;

use super::Dataset;

/// `k` isotropic unit-variance Gaussian clusters whose means sit pairwise
/// `separation` apart (requires `dim >= k`), then affinely mapped to [0, 1]
/// with a single global scale so relative geometry is preserved.
pub fn synth_gaussians(
    k_classes: usize,
    dim: usize,
    separation: f64,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(separation > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "separation must be positive, got {separation}"
        )));
    }
    if k_classes == 0 || n_per_class == 0 {
        return Err(Error::InvalidConfig("need at least one class and one sample".into()));
    }
    if dim < k_classes {
        return Err(Error::InvalidConfig(format!(
            "dim {dim} must be at least the class count {k_classes}"
        )));
    }
    let mut rng = Rng::from_seed(seed).child("synth");
    let n = k_classes * n_per_class;
    let mut inputs = Array2::<f64>::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    // Means at (separation / sqrt(2)) * e_c are exactly `separation` apart.
    let radius = separation / std::f64::consts::SQRT_2;
    for c in 0..k_classes {
        for i in 0..n_per_class {
            let row = c * n_per_class + i;
            for j in 0..dim {
                let mean = if j == c { radius } else { 0.0 };
                inputs[(row, j)] = mean + rng.normal();
            }
            labels.push(c);
            let _ = i;
        }
    }
    // Single global affine map into [0, 1].
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in inputs.iter() {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    inputs.mapv_inplace(|x| (x - lo) / span);
    Dataset::new(
        format!("synth-{k_classes}x{n_per_class}-d{dim}"),
        inputs,
        labels,
    )
}
