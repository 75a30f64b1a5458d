//! Safeguarded scalar root finding: Newton iterations confined to a
//! bracketing interval, with bisection fallback when Newton misbehaves.

use crate::error::{Error, Result};

/// Solve `f(x) = 0` on a bracket `[a, b]` with `f(a)·f(b) <= 0`.
///
/// Each iteration tries a Newton step from the current best point; steps
/// that leave the bracket or fail to shrink the residual fall back to
/// bisection. Converges when the bracket width drops below
/// `rel_tol * max(1, |x|)`.
pub fn newton_safeguarded<F, G>(
    f: F,
    df: G,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    what: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoRoot { what, lo: a, hi: b });
    }
    let mut x = 0.5 * (a + b);
    let mut fx = f(x)?;
    for _ in 0..200 {
        if fx == 0.0 || (b - a).abs() <= rel_tol * x.abs().max(1.0) {
            return Ok(x);
        }
        // maintain the bracket
        if fa * fx <= 0.0 {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        let slope = df(x)?;
        let newton = if slope != 0.0 {
            x - fx / slope
        } else {
            f64::NAN
        };
        x = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        fx = f(x)?;
    }
    Ok(x)
}

/// Plain bisection to relative tolerance on `x`.
pub fn bisect<F>(f: F, mut a: f64, mut b: f64, rel_tol: f64, what: &'static str) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoRoot { what, lo: a, hi: b });
    }
    while (b - a).abs() > rel_tol * (a.abs() + b.abs()).max(1.0) * 0.5 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Coarse scan over `[lo, hi]` for a sign change of `f`, refined by
/// bisection. Used as an independent check against closed-form roots.
pub fn scan_then_bisect<F>(
    f: F,
    lo: f64,
    hi: f64,
    step: f64,
    rel_tol: f64,
    what: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Copy,
{
    let mut x_prev = lo;
    let mut f_prev = f(lo)?;
    let mut x = lo + step;
    while x <= hi + 0.5 * step {
        let fx = f(x.min(hi))?;
        if f_prev == 0.0 {
            return Ok(x_prev);
        }
        if f_prev * fx <= 0.0 {
            return bisect(f, x_prev, x.min(hi), rel_tol, what);
        }
        x_prev = x.min(hi);
        f_prev = fx;
        x += step;
    }
    Err(Error::NoRoot { what, lo, hi })
}
