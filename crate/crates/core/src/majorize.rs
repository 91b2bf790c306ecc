use crate::error::{invalid, Result};

/// `x` majorizes `y`: equal sums and every prefix sum of the descending
/// sort of `x` dominates that of `y`.
///
/// Comparisons allow a relative slack of `1e-12` to absorb rounding.
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return invalid(format!("vectors of lengths {} and {}", x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return invalid("non-finite entry");
    }
    let scale = 1.0 + x.iter().chain(y).map(|v| v.abs()).sum::<f64>();
    let tol = 1e-12 * scale;
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    ys.sort_by(|a, b| b.total_cmp(a));
    let (mut px, mut py) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        if px < py - tol {
            return Ok(false);
        }
    }
    Ok((px - py).abs() <= tol)
}
