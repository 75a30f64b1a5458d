//! Asymmetric power-utility duopoly over an infinite horizon.
//!
//! Players value own consumption with curvatures `alpha1`, `alpha2` and a
//! shared externality curvature `beta`:
//!
//! ```text
//! L1(u, v) = u^(1-alpha1) v^(1-beta) / (1-alpha1)
//! L2(u, v) = v^(1-alpha2) u^(1-beta) / (1-alpha2)
//! ```
//!
//! A stationary equilibrium admitting a single-agent representation links
//! the rates by `v = theta(u)`; the proportional candidate `theta = delta u`
//! reduces the feedback system to one scalar ODE, with `delta` solving a
//! linear equation obtained by substituting the candidate into the ratio of
//! the two equilibrium equations. The fictitious problem is then a power
//! law throughout: `f = xi u`, `gamma = C u^(-rho/(eps sigma1))`.

use crate::curve::{Curve, Interval};
use crate::error::{Error, Result};
use crate::game_model::DEFAULT_RATE_DOMAIN;
use crate::symmetric_equiv::MonopolyProblem;

/// Parameters of the asymmetric duopoly.
#[derive(Debug, Clone, Copy)]
pub struct AsymParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub r1: f64,
    pub r2: f64,
    /// `1 / (alpha1 alpha2 - (1-beta)^2)`
    pub epsilon: f64,
}

impl AsymParams {
    pub fn new(alpha1: f64, alpha2: f64, beta: f64, r1: f64, r2: f64) -> Result<Self> {
        for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2), ("beta", beta)] {
            if !(v > 0.0) {
                return Err(Error::Parameter {
                    detail: format!("{name} must be positive, got {v}"),
                });
            }
        }
        for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if (v - 1.0).abs() < 1e-12 {
                return Err(Error::Parameter {
                    detail: format!("{name} = 1 divides by 1 - {name}"),
                });
            }
        }
        if r1 < 0.0 || r2 < 0.0 {
            return Err(Error::Parameter {
                detail: "discount rates must be nonnegative".into(),
            });
        }
        let denom = alpha1 * alpha2 - (1.0 - beta) * (1.0 - beta);
        if denom.abs() < 1e-12 {
            return Err(Error::Parameter {
                detail: "alpha1 alpha2 - (1-beta)^2 must be nonzero".into(),
            });
        }
        Ok(Self {
            alpha1,
            alpha2,
            beta,
            r1,
            r2,
            epsilon: 1.0 / denom,
        })
    }

    /// `alpha2 r1 + (1-beta) r2`, the row-1 source coefficient over eps.
    pub fn sigma1(&self) -> f64 {
        self.alpha2 * self.r1 + (1.0 - self.beta) * self.r2
    }

    /// `alpha1 r2 + (1-beta) r1`.
    pub fn sigma2(&self) -> f64 {
        self.alpha1 * self.r2 + (1.0 - self.beta) * self.r1
    }
}

// Row-1 combined u_x coefficient per unit u after substituting v = delta u:
// N(delta) = -(1+delta) + eps (1-beta)/(1-a2) ((1-a2) - (1-beta) delta)
//            + eps a2/(1-a1) ((1-a1) delta - (1-beta))
fn row1_coefficient(p: &AsymParams, delta: f64) -> f64 {
    let e = p.epsilon;
    let b1 = 1.0 - p.beta;
    -(1.0 + delta)
        + e * (b1 / (1.0 - p.alpha2)) * ((1.0 - p.alpha2) - b1 * delta)
        + e * (p.alpha2 / (1.0 - p.alpha1)) * ((1.0 - p.alpha1) * delta - b1)
}

// Row-2 combined coefficient per unit (delta u).
fn row2_coefficient(p: &AsymParams, delta: f64) -> f64 {
    let e = p.epsilon;
    let b1 = 1.0 - p.beta;
    e * (p.alpha1 / (1.0 - p.alpha2)) * ((1.0 - p.alpha2) - b1 * delta) - (1.0 + delta)
        + e * (b1 / (1.0 - p.alpha1)) * ((1.0 - p.alpha1) * delta - b1)
}

/// The stationary feedback system at a point `(u, v)`: coefficient matrix
/// on `(u_x, v_x)` and the source vector.
pub fn equilibrium_system(p: &AsymParams, u: f64, v: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let e = p.epsilon;
    let b1 = 1.0 - p.beta;
    let m = [
        [
            -(u + v) + e * (b1 / (1.0 - p.alpha2)) * ((1.0 - p.alpha2) * u - b1 * v),
            e * (p.alpha2 / (1.0 - p.alpha1)) * (u / v) * ((1.0 - p.alpha1) * v - b1 * u),
        ],
        [
            e * (p.alpha1 / (1.0 - p.alpha2)) * (v / u) * ((1.0 - p.alpha2) * u - b1 * v),
            -(u + v) + e * (b1 / (1.0 - p.alpha1)) * ((1.0 - p.alpha1) * v - b1 * u),
        ],
    ];
    let rhs = [-e * p.sigma1() * u, -e * p.sigma2() * v];
    (m, rhs)
}

/// Residual of the ratio equation for the proportional candidate at `u`:
/// the two rows of the system, reduced along `v = delta u`, must be
/// proportional with the ratio of their sources.
pub fn ratio_equation_residual(p: &AsymParams, delta: f64, u: f64) -> f64 {
    let (m, rhs) = equilibrium_system(p, u, delta * u);
    let row1 = m[0][0] + m[0][1] * delta;
    let row2 = m[1][0] + m[1][1] * delta;
    let scale = (row1 * rhs[1]).abs().max((row2 * rhs[0]).abs()).max(1e-300);
    (row1 * rhs[1] - row2 * rhs[0]) / scale
}

/// Solve the linear equation for the proportional-strategy ratio `delta`.
///
/// Substituting `theta(u) = delta u` into the ratio of the two reduced
/// equilibrium equations gives `N(delta) = (sigma1/sigma2) D(delta)` with
/// both sides affine in `delta`. Solved in cross-multiplied form
/// `sigma2 N(delta) - sigma1 D(delta) = 0` to avoid intermediate zeros.
pub fn solve_delta(p: &AsymParams) -> Result<f64> {
    let eval = |d: f64| p.sigma2() * row1_coefficient(p, d) - p.sigma1() * row2_coefficient(p, d);
    let at0 = eval(0.0);
    let at1 = eval(1.0);
    let slope = at1 - at0;
    let scale = at0
        .abs()
        .max(at1.abs())
        .max(p.sigma1().abs())
        .max(p.sigma2().abs());
    if slope.abs() < 1e-12 * scale.max(1.0) {
        return Err(Error::Degenerate {
            detail: format!("linear coefficient for delta vanishes (slope {slope:.3e})"),
        });
    }
    let delta = -at0 / slope;
    if !(delta > 0.0) {
        return Err(Error::Infeasible {
            what: "delta",
            value: delta,
            requirement: "delta > 0",
        });
    }
    Ok(delta)
}

/// Slope of the linear stationary feedback `u(x) = c x` implied by the
/// reduced row-1 equation `xi u u_x = -eps sigma1 u`.
pub fn feedback_slope(p: &AsymParams, delta: f64) -> Result<f64> {
    let xi = row1_coefficient(p, delta);
    if xi.abs() < 1e-14 {
        return Err(Error::Degenerate {
            detail: "reduced advection coefficient vanishes".into(),
        });
    }
    Ok(-p.epsilon * p.sigma1() / xi)
}

/// Fictitious monopoly for the asymmetric duopoly (infinite horizon).
///
/// `f(u) = xi u` with `xi` the reduced row-1 advection coefficient,
/// `gamma(u) = C u^(-rho/(eps sigma1))`, and the payoff integrated from
/// `ell' = -f' gamma` anchored at `u_ref = 1`.
pub fn asym_fictitious(p: &AsymParams, delta: f64, rho: f64, c: f64) -> Result<MonopolyProblem> {
    if !(delta > 0.0) {
        return Err(Error::Infeasible {
            what: "delta",
            value: delta,
            requirement: "delta > 0",
        });
    }
    if c == 0.0 {
        return Err(Error::Parameter {
            detail: "scale constant C must be nonzero".into(),
        });
    }
    if !(rho >= 0.0) {
        return Err(Error::Parameter {
            detail: format!("rho must be nonnegative, got {rho}"),
        });
    }
    let domain: Interval = DEFAULT_RATE_DOMAIN;
    let u_ref = 1.0f64;
    let xi = row1_coefficient(p, delta);
    let f = Curve::linear(xi, 0.0, domain);

    let source_scale = p.epsilon * p.sigma1();
    let exponent = if rho == 0.0 {
        0.0
    } else {
        if source_scale.abs() < 1e-300 {
            return Err(Error::Parameter {
                detail: "positive rho requires a nonzero discounted source".into(),
            });
        }
        rho / source_scale
    };
    if (exponent - 1.0).abs() < 1e-12 {
        return Err(Error::Exponent {
            what: "rho/(eps (alpha2 r1 + (1-beta) r2))",
        });
    }

    let gamma = if exponent == 0.0 {
        Curve::constant(c, domain)
    } else {
        Curve::power(c * u_ref.powf(exponent), -exponent, 0.0, domain)
    };
    let ell = if exponent == 0.0 {
        Curve::linear(-xi * c, xi * c * u_ref, domain)
    } else {
        let a_coef = c * u_ref.powf(exponent);
        let coef = -xi * a_coef / (1.0 - exponent);
        Curve::power(
            coef,
            1.0 - exponent,
            -coef * u_ref.powf(1.0 - exponent),
            domain,
        )
    };

    Ok(MonopolyProblem {
        ell,
        rho,
        f,
        bequest: None,
        c,
        gamma,
        u_ref,
        source_discount: 0.5 * (p.r1 + p.r2),
    })
}
