//! Dense f64 vector/matrix helpers, seedable RNG, and a finite-difference
//! gradient checker. Storage is `ndarray`; everything here works on views so
//! callers keep ownership.

mod rng;

pub use rng::Rng;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Row-major matrix of f64, shape (rows, cols).
pub type Matrix = Array2<f64>;
/// Dense f64 vector.
pub type Vector = Array1<f64>;

/// Norms below this are treated as zero; legitimate inputs are many orders
/// of magnitude above it.
const DEGENERATE_NORM: f64 = 1e-150;

/// Scale `v` to unit Euclidean norm, preserving direction.
pub fn l2_normalize(v: ArrayView1<'_, f64>) -> Result<Vector> {
    let norm = v.dot(&v).sqrt();
    if norm < DEGENERATE_NORM {
        return Err(Error::DegenerateNorm);
    }
    Ok(v.mapv(|x| x / norm))
}

/// Gradient of `l2_normalize` at `v` applied to `upstream`:
/// `(I - u uᵀ) upstream / ‖v‖` with `u = v/‖v‖`.
pub fn l2_normalize_backward(
    v: ArrayView1<'_, f64>,
    upstream: ArrayView1<'_, f64>,
) -> Result<Vector> {
    if v.len() != upstream.len() {
        return Err(Error::ShapeMismatch(format!(
            "l2_normalize_backward: v has {} elements, upstream has {}",
            v.len(),
            upstream.len()
        )));
    }
    let norm = v.dot(&v).sqrt();
    if norm < DEGENERATE_NORM {
        return Err(Error::DegenerateNorm);
    }
    let u = v.mapv(|x| x / norm);
    let radial = u.dot(&upstream);
    Ok((&upstream - &(u * radial)) / norm)
}

/// Normalize every row of `m` to unit norm.
pub fn l2_normalize_rows(m: ArrayView2<'_, f64>) -> Result<Matrix> {
    let mut out = m.to_owned();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateNorm);
        }
        row.mapv_inplace(|x| x / norm);
    }
    Ok(out)
}

/// Row-wise counterpart of [`l2_normalize_backward`]: `pre` holds the
/// unnormalized rows, `upstream` the gradient w.r.t. the normalized rows.
pub fn l2_normalize_rows_backward(
    pre: ArrayView2<'_, f64>,
    upstream: ArrayView2<'_, f64>,
) -> Result<Matrix> {
    if pre.dim() != upstream.dim() {
        return Err(Error::ShapeMismatch(format!(
            "l2_normalize_rows_backward: {:?} vs {:?}",
            pre.dim(),
            upstream.dim()
        )));
    }
    let mut out = Matrix::zeros(pre.raw_dim());
    for ((p, u), mut o) in pre
        .rows()
        .into_iter()
        .zip(upstream.rows())
        .zip(out.rows_mut())
    {
        o.assign(&l2_normalize_backward(p, u)?);
    }
    Ok(out)
}

/// Mean over rows; errors on an empty matrix.
pub fn mean_rows(m: ArrayView2<'_, f64>) -> Result<Vector> {
    m.mean_axis(Axis(0))
        .ok_or_else(|| Error::ShapeMismatch("mean_rows of an empty matrix".into()))
}

/// Return an error if any element of `values` is NaN or infinite.
pub fn ensure_finite<'a, I>(context: &str, values: I) -> Result<()>
where
    I: IntoIterator<Item = &'a f64>,
{
    for v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(context.to_string()));
        }
    }
    Ok(())
}

/// Max-over-coordinates relative error between `analytic` and a central
/// finite-difference estimate of `f`'s gradient at `point`:
/// `max_i |analytic_i - fd_i| / max(1, |analytic_i|)`.
pub fn grad_check<F>(mut f: F, point: ArrayView1<'_, f64>, analytic: ArrayView1<'_, f64>, eps: f64) -> f64
where
    F: FnMut(ArrayView1<'_, f64>) -> f64,
{
    assert_eq!(
        point.len(),
        analytic.len(),
        "grad_check: point and analytic gradient must have equal length"
    );
    let mut probe = point.to_owned();
    let mut worst = 0.0f64;
    for i in 0..probe.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = f(probe.view());
        probe[i] = orig - eps;
        let minus = f(probe.view());
        probe[i] = orig;
        let fd = (plus - minus) / (2.0 * eps);
        let err = (analytic[i] - fd).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}
