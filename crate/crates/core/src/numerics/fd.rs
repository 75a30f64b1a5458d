//! Finite-difference stencils used for derivative checks and for partials
//! of user-supplied utilities without analytic derivatives.

use crate::error::Result;

/// Central step for first differences: cbrt(machine eps) scaled to the point.
pub fn step_cuberoot(u: f64) -> f64 {
    f64::EPSILON.cbrt() * u.abs().max(1.0)
}

/// Step for second differences: eps^(1/4) scaled to the point.
pub fn step_quartroot(u: f64) -> f64 {
    f64::EPSILON.powf(0.25) * u.abs().max(1.0)
}

/// Second-order central first derivative.
pub fn deriv_central<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Fourth-order central first derivative (5-point stencil).
pub fn deriv_central4<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok((f(x - 2.0 * h)? - 8.0 * f(x - h)? + 8.0 * f(x + h)? - f(x + 2.0 * h)?) / (12.0 * h))
}

/// Second-order central second derivative.
pub fn deriv2_central<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok((f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h))
}

/// Fourth-order central second derivative (5-point stencil).
pub fn deriv2_central4<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok(
        (-f(x - 2.0 * h)? + 16.0 * f(x - h)? - 30.0 * f(x)? + 16.0 * f(x + h)? - f(x + 2.0 * h)?)
            / (12.0 * h * h),
    )
}

/// Mixed second partial by the four-point cross stencil.
pub fn cross_partial<F>(f: F, x: f64, y: f64, hx: f64, hy: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    Ok(
        (f(x + hx, y + hy)? - f(x + hx, y - hy)? - f(x - hx, y + hy)? + f(x - hx, y - hy)?)
            / (4.0 * hx * hy),
    )
}

/// Fourth-order first derivative of uniformly spaced samples, one-sided
/// stencils at the edges. Returns `None` for grids shorter than 5 points.
pub fn grid_deriv4(values: &[f64], h: f64) -> Option<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return None;
    }
    let v = values;
    let mut out = vec![0.0; n];
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    out[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5])
        / (12.0 * h);
    out[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4]
        + 3.0 * v[n - 5])
        / (12.0 * h);
    Some(out)
}
