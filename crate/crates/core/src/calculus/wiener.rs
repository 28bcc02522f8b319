use super::function::RealFunction;
use crate::error::{Error, Result};
use crate::fbm::{FbmPath, TimeGrid};

/// Cell averages `f_k = (1/h) int_{t_k}^{t_{k+1}} f` on `grid`, so that the
/// Wiener integral of `f` is `sum_k f_k (B_{t_{k+1}} - B_{t_k})`.
pub fn cell_weights(f: &RealFunction, grid: &TimeGrid) -> Result<Vec<f64>> {
    let (lo, hi) = f.support();
    let tol = 1e-12 * grid.horizon().max(1.0);
    if lo < -tol || hi > grid.horizon() + tol {
        return Err(Error::GridMismatch(format!(
            "integrand support [{lo}, {hi}] exceeds the path interval [0, {}]",
            grid.horizon()
        )));
    }
    let pts = grid.points();
    pts.windows(2)
        .map(|w| {
            let v = f.cell_average(w[0], w[1]);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::SingularPoint {
                    what: "integrand cell average",
                    at: w[0],
                })
            }
        })
        .collect()
}

/// Wiener integral using precomputed cell weights.
pub fn wiener_integral_with(weights: &[f64], path: &FbmPath) -> Result<f64> {
    if weights.len() != path.grid.steps() {
        return Err(Error::GridMismatch(format!(
            "{} weights for a path with {} steps",
            weights.len(),
            path.grid.steps()
        )));
    }
    Ok(weights
        .iter()
        .zip(path.values.windows(2))
        .map(|(w, v)| w * (v[1] - v[0]))
        .sum())
}

/// `int f dB^H` along a sampled path.
pub fn wiener_integral(f: &RealFunction, path: &FbmPath) -> Result<f64> {
    let w = cell_weights(f, &path.grid)?;
    wiener_integral_with(&w, path)
}
