//! Piecewise-cubic interpolation: natural cubic splines for smooth
//! tabulated data and Fritsch–Carlson monotone cubics for data whose shape
//! must be preserved (characteristic foot points, terminal maps).

use crate::error::{Error, Result};

fn check_strictly_increasing(xs: &[f64]) -> Result<()> {
    for w in xs.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Parameter {
                detail: format!("abscissae not strictly increasing at x = {}", w[1]),
            });
        }
    }
    Ok(())
}

fn locate(xs: &[f64], x: f64) -> Result<usize> {
    let n = xs.len();
    let span = xs[n - 1] - xs[0];
    let slack = 1e-12 * span.abs().max(1.0);
    if x < xs[0] - slack || x > xs[n - 1] + slack {
        return Err(Error::Domain {
            what: "interpolation point",
            value: x,
            lo: xs[0],
            hi: xs[n - 1],
        });
    }
    let i = xs.partition_point(|&v| v <= x);
    Ok(i.clamp(1, n - 1) - 1)
}

/// Natural cubic spline.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// second derivatives at the nodes
    m: Vec<f64>,
}

impl CubicSpline {
    /// Natural boundary conditions. Requires at least 4 strictly
    /// increasing nodes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, None)
    }

    /// Clamped boundary conditions with prescribed end slopes. Fourth-order
    /// accurate uniformly, unlike the natural spline's end panels.
    pub fn new_clamped(xs: Vec<f64>, ys: Vec<f64>, d_lo: f64, d_hi: f64) -> Result<Self> {
        Self::build(xs, ys, Some((d_lo, d_hi)))
    }

    /// Not-a-knot boundary conditions: third derivatives continuous across
    /// the first and last interior nodes. Uses node data only and stays
    /// fourth-order accurate without derivative information.
    pub fn new_not_a_knot(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 4 {
            return Err(Error::Parameter {
                detail: format!("cubic spline needs >= 4 nodes, got {}", xs.len()),
            });
        }
        check_strictly_increasing(&xs)?;
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        // interior unknowns M1..M_{n-2}; M0 and M_{n-1} eliminated through
        // the not-a-knot relations M0 = M1 (1 + h0/h1) - M2 h0/h1 etc.
        let m_interior = n - 2;
        let mut sub = vec![0.0; m_interior];
        let mut diag = vec![0.0; m_interior];
        let mut sup = vec![0.0; m_interior];
        let mut rhs = vec![0.0; m_interior];
        for (row, i) in (1..n - 1).enumerate() {
            let h0 = h[i - 1];
            let h1 = h[i];
            sub[row] = h0 / 6.0;
            diag[row] = (h0 + h1) / 3.0;
            sup[row] = h1 / 6.0;
            rhs[row] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        // fold the eliminated end second-derivatives into rows 0 and last
        {
            let r = h[0] / h[1];
            diag[0] += sub[0] * (1.0 + r);
            sup[0] -= sub[0] * r;
            sub[0] = 0.0;
        }
        {
            let last = m_interior - 1;
            let r = h[n - 2] / h[n - 3];
            diag[last] += sup[last] * (1.0 + r);
            sub[last] -= sup[last] * r;
            sup[last] = 0.0;
        }
        for i in 1..m_interior {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut mi = vec![0.0; m_interior];
        mi[m_interior - 1] = rhs[m_interior - 1] / diag[m_interior - 1];
        for i in (0..m_interior - 1).rev() {
            mi[i] = (rhs[i] - sup[i] * mi[i + 1]) / diag[i];
        }
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&mi);
        m[0] = m[1] * (1.0 + h[0] / h[1]) - m[2] * (h[0] / h[1]);
        m[n - 1] = m[n - 2] * (1.0 + h[n - 2] / h[n - 3]) - m[n - 3] * (h[n - 2] / h[n - 3]);
        Ok(Self { xs, ys, m })
    }

    fn build(xs: Vec<f64>, ys: Vec<f64>, clamp: Option<(f64, f64)>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 4 {
            return Err(Error::Parameter {
                detail: format!("cubic spline needs >= 4 nodes, got {}", xs.len()),
            });
        }
        check_strictly_increasing(&xs)?;
        let n = xs.len();
        // tridiagonal system for the nodal second derivatives
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        if let Some((d_lo, d_hi)) = clamp {
            let h0 = xs[1] - xs[0];
            diag[0] = h0 / 3.0;
            sup[0] = h0 / 6.0;
            rhs[0] = (ys[1] - ys[0]) / h0 - d_lo;
            let h1 = xs[n - 1] - xs[n - 2];
            sub[n - 1] = h1 / 6.0;
            diag[n - 1] = h1 / 3.0;
            rhs[n - 1] = d_hi - (ys[n - 1] - ys[n - 2]) / h1;
        }
        // Thomas algorithm
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { xs, ys, m })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = locate(&self.xs, x)?;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        Ok(a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        let i = locate(&self.xs, x)?;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        Ok((self.ys[i + 1] - self.ys[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0)
    }

    pub fn deriv2(&self, x: f64) -> Result<f64> {
        let i = locate(&self.xs, x)?;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        Ok(a * self.m[i] + b * self.m[i + 1])
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// Requires at least 2 strictly increasing nodes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Parameter {
                detail: format!("pchip needs >= 2 nodes, got {}", xs.len()),
            });
        }
        check_strictly_increasing(&xs)?;
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, d })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn piece(&self, x: f64) -> Result<(usize, f64, f64)> {
        let i = locate(&self.xs, x)?;
        let h = self.xs[i + 1] - self.xs[i];
        Ok((i, (x - self.xs[i]) / h, h))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (i, t, h) = self.piece(x)?;
        let (h00, h10, h01, h11) = hermite_basis(t);
        Ok(h00 * self.ys[i] + h10 * h * self.d[i] + h01 * self.ys[i + 1] + h11 * h * self.d[i + 1])
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        let (i, t, h) = self.piece(x)?;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * t * t - 2.0 * t;
        Ok((dh00 * self.ys[i] + dh01 * self.ys[i + 1]) / h
            + dh10 * self.d[i]
            + dh11 * self.d[i + 1])
    }

    pub fn deriv2(&self, x: f64) -> Result<f64> {
        let (i, t, h) = self.piece(x)?;
        let d2h00 = 12.0 * t - 6.0;
        let d2h10 = 6.0 * t - 4.0;
        let d2h11 = 6.0 * t - 2.0;
        Ok((d2h00 * (self.ys[i] - self.ys[i + 1])) / (h * h)
            + (d2h10 * self.d[i] + d2h11 * self.d[i + 1]) / h)
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

// Shape-preserving one-sided slope for the first/last node.
fn edge_slope(h0: f64, h1: f64, delta0: f64, delta1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * delta0 - h0 * delta1) / (h0 + h1);
    if d * delta0 <= 0.0 {
        0.0
    } else if delta0 * delta1 < 0.0 && d.abs() > 3.0 * delta0.abs() {
        3.0 * delta0
    } else {
        d
    }
}
