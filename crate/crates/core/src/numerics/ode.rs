//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! The driver integrates a small fixed-dimension system between a start
//! point and a monotone sequence of output abscissae, stepping exactly onto
//! each output. Right-hand sides are fallible; any model error aborts the
//! integration with context.

use crate::error::{Error, Result};

/// Relative/absolute error control for the embedded pair.
#[derive(Debug, Clone, Copy)]
pub struct OdeTol {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Default for OdeTol {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// 5th-order weights coincide with the last A row (FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `(t0, y0)`, returning the state at
/// each abscissa in `outputs`. The outputs must move monotonically away
/// from `t0` (either direction); an output equal to `t0` returns `y0`.
pub fn integrate_path<const D: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; D],
    outputs: &[f64],
    tol: OdeTol,
) -> Result<Vec<[f64; D]>>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let mut results = Vec::with_capacity(outputs.len());
    if outputs.is_empty() {
        return Ok(results);
    }
    let dir = (outputs[outputs.len() - 1] - t0).signum();
    let dir = if dir == 0.0 { 1.0 } else { dir };

    let mut t = t0;
    let mut y = y0;
    let span = (outputs[outputs.len() - 1] - t0).abs().max(1e-30);
    let mut h = dir * (span / 100.0).min(0.1 * span + 1e-30);
    let mut steps = 0usize;

    for &target in outputs {
        if (target - t) * dir < -1e-13 * span {
            return Err(Error::Ode {
                t: target,
                detail: "output abscissae must be monotone in the integration direction",
            });
        }
        while (target - t) * dir > 1e-14 * span.max(t.abs()) {
            if steps >= tol.max_steps {
                return Err(Error::Ode {
                    t,
                    detail: "step limit exceeded",
                });
            }
            steps += 1;
            if (h * 1.05).abs() >= (target - t).abs() {
                h = target - t;
            }
            let (y_next, err_norm) = dopri_step(&rhs, t, &y, h, tol)?;
            if err_norm <= 1.0 {
                t += h;
                y = y_next;
                let grow = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= grow;
            } else {
                h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
                if h.abs() < 1e-15 * (t.abs() + 1.0) {
                    return Err(Error::Ode {
                        t,
                        detail: "step size underflow",
                    });
                }
            }
        }
        t = target;
        results.push(y);
    }
    Ok(results)
}

fn dopri_step<const D: usize, F>(
    rhs: &F,
    t: f64,
    y: &[f64; D],
    h: f64,
    tol: OdeTol,
) -> Result<([f64; D], f64)>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let mut k = [[0.0; D]; 7];
    k[0] = rhs(t, y)?;
    for stage in 1..7 {
        let mut y_stage = *y;
        for (j, kj) in k.iter().take(stage).enumerate() {
            let a = A[stage][j];
            if a != 0.0 {
                for d in 0..D {
                    y_stage[d] += h * a * kj[d];
                }
            }
        }
        k[stage] = rhs(t + C[stage] * h, &y_stage)?;
    }
    let mut y5 = *y;
    let mut y4 = *y;
    for (j, kj) in k.iter().enumerate() {
        for d in 0..D {
            y5[d] += h * B5[j] * kj[d];
            y4[d] += h * B4[j] * kj[d];
        }
    }
    let mut err_norm = 0.0f64;
    for d in 0..D {
        let scale = tol.abs + tol.rel * y[d].abs().max(y5[d].abs());
        err_norm = err_norm.max(((y5[d] - y4[d]) / scale).abs());
    }
    Ok((y5, err_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth() {
        let out: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let states = integrate_path(
            |_, y: &[f64; 1]| Ok([y[0]]),
            0.0,
            [1.0],
            &out,
            OdeTol::default(),
        )
        .unwrap();
        for (t, s) in out.iter().zip(&states) {
            assert_relative_eq!(s[0], t.exp(), max_relative = 1e-9);
        }
    }

    #[test]
    fn backward_integration() {
        // dy/dt = -y from t=1 back to t=0: y(0) = y(1) * e
        let states = integrate_path(
            |_, y: &[f64; 1]| Ok([-y[0]]),
            1.0,
            [1.0],
            &[0.5, 0.0],
            OdeTol::default(),
        )
        .unwrap();
        assert_relative_eq!(states[1][0], 1.0f64.exp(), max_relative = 1e-9);
        assert_relative_eq!(states[0][0], 0.5f64.exp(), max_relative = 1e-9);
    }

    #[test]
    fn coupled_oscillator_energy() {
        let out = [std::f64::consts::PI * 2.0];
        let states = integrate_path(
            |_, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            &out,
            OdeTol::default(),
        )
        .unwrap();
        assert_relative_eq!(states[0][0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(states[0][1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn rhs_errors_abort() {
        let res = integrate_path(
            |t, _: &[f64; 1]| {
                if t > 0.5 {
                    Err(Error::Ode {
                        t,
                        detail: "test failure",
                    })
                } else {
                    Ok([1.0])
                }
            },
            0.0,
            [0.0],
            &[1.0],
            OdeTol::default(),
        );
        assert!(res.is_err());
    }
}
