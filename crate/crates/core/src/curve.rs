//! Scalar curves over an interval: closed forms, tabulations and
//! structured analytic objects (quadrature-backed antiderivatives).
//!
//! Curves never extrapolate. Evaluation outside the declared domain is a
//! `Domain` error so that downstream quadrature and ODE drivers fail loudly
//! instead of consuming garbage.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::interp::{CubicSpline, Pchip};

/// Closed interval of admissible arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "interval requires lo < hi");
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack_lo = 1e-12 * self.lo.abs().max(1e-12);
        let slack_hi = 1e-12 * self.hi.abs().max(1e-12);
        x >= self.lo - slack_lo && x <= self.hi + slack_hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then(|| Interval::new(lo, hi))
    }

    pub fn check(&self, what: &'static str, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// How a curve's values were obtained; reported alongside results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Tabulated,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Quadrature => "quadrature",
            Provenance::Tabulated => "tabulated",
        }
    }
}

/// Analytic curve implementations with their own derivative logic.
pub trait CurveFn: Send + Sync {
    fn eval(&self, u: f64) -> Result<f64>;
    fn deriv(&self, u: f64) -> Result<f64>;
    fn deriv2(&self, u: f64) -> Result<f64>;
    fn provenance(&self) -> Provenance {
        Provenance::Quadrature
    }
    fn describe(&self) -> &'static str {
        "analytic"
    }
}

#[derive(Clone)]
enum Kind {
    Constant(f64),
    /// slope * u + intercept
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// coef * u^exponent + offset
    Power {
        coef: f64,
        exponent: f64,
        offset: f64,
    },
    /// coef * ln(u) + offset
    LogLaw {
        coef: f64,
        offset: f64,
    },
    /// coef * exp(rate * u) + offset
    ExpLaw {
        coef: f64,
        rate: f64,
        offset: f64,
    },
    Spline(Arc<CubicSpline>),
    Pchip(Arc<Pchip>),
    Analytic(Arc<dyn CurveFn>),
}

/// A scalar function of one variable on a fixed interval.
#[derive(Clone)]
pub struct Curve {
    kind: Kind,
    domain: Interval,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match &self.kind {
            Kind::Constant(c) => format!("Constant({c})"),
            Kind::Linear { slope, intercept } => format!("Linear({slope}*u + {intercept})"),
            Kind::Power {
                coef,
                exponent,
                offset,
            } => {
                format!("Power({coef}*u^{exponent} + {offset})")
            }
            Kind::LogLaw { coef, offset } => format!("Log({coef}*ln u + {offset})"),
            Kind::ExpLaw { coef, rate, offset } => format!("Exp({coef}*e^({rate}u) + {offset})"),
            Kind::Spline(s) => format!("Spline({} nodes)", s.nodes().0.len()),
            Kind::Pchip(p) => format!("Pchip({} nodes)", p.nodes().0.len()),
            Kind::Analytic(a) => format!("Analytic({})", a.describe()),
        };
        write!(
            f,
            "Curve[{} on [{}, {}]]",
            tag, self.domain.lo, self.domain.hi
        )
    }
}

impl Curve {
    pub fn constant(value: f64, domain: Interval) -> Self {
        Self {
            kind: Kind::Constant(value),
            domain,
        }
    }

    pub fn linear(slope: f64, intercept: f64, domain: Interval) -> Self {
        Self {
            kind: Kind::Linear { slope, intercept },
            domain,
        }
    }

    pub fn power(coef: f64, exponent: f64, offset: f64, domain: Interval) -> Self {
        Self {
            kind: Kind::Power {
                coef,
                exponent,
                offset,
            },
            domain,
        }
    }

    pub fn log_law(coef: f64, offset: f64, domain: Interval) -> Self {
        Self {
            kind: Kind::LogLaw { coef, offset },
            domain,
        }
    }

    pub fn exp_law(coef: f64, rate: f64, offset: f64, domain: Interval) -> Self {
        Self {
            kind: Kind::ExpLaw { coef, rate, offset },
            domain,
        }
    }

    pub fn from_spline(spline: CubicSpline) -> Self {
        let (lo, hi) = spline.domain();
        Self {
            kind: Kind::Spline(Arc::new(spline)),
            domain: Interval::new(lo, hi),
        }
    }

    pub fn from_pchip(pchip: Pchip) -> Self {
        let (lo, hi) = pchip.domain();
        Self {
            kind: Kind::Pchip(Arc::new(pchip)),
            domain: Interval::new(lo, hi),
        }
    }

    pub fn analytic(f: Arc<dyn CurveFn>, domain: Interval) -> Self {
        Self {
            kind: Kind::Analytic(f),
            domain,
        }
    }

    /// Tabulate `f` on a log grid, refining until the cubic interpolant
    /// reproduces `f` at panel midpoints to `rel_tol`.
    ///
    /// Noisy evaluators (finite-difference backed) cannot reach arbitrary
    /// tolerances; when refinement stalls, the best interpolant is accepted
    /// as long as its defect stays below `noise_floor`.
    pub fn tabulate_adaptive<F>(
        f: F,
        domain: Interval,
        rel_tol: f64,
        noise_floor: f64,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        assert!(
            domain.lo > 0.0,
            "adaptive tabulation expects a positive domain"
        );
        let mut n = 65usize;
        let mut best: Option<(CubicSpline, f64)> = None;
        for _ in 0..8 {
            let xs = crate::numerics::log_grid(domain.lo, domain.hi, n);
            let ys: Result<Vec<f64>> = xs.iter().map(|&x| f(x)).collect();
            let ys = ys?;
            let spline = CubicSpline::new_not_a_knot(xs.clone(), ys)?;
            let mut worst = 0.0f64;
            for w in xs.windows(2) {
                let mid = (w[0] * w[1]).sqrt();
                let exact = f(mid)?;
                let approx = spline.eval(mid)?;
                worst = worst.max((approx - exact).abs() / exact.abs().max(1e-12));
            }
            if worst < rel_tol {
                return Ok(Self::from_spline(spline));
            }
            let stalled = best.as_ref().is_some_and(|(_, prev)| worst > 0.5 * prev);
            if best.as_ref().map_or(true, |(_, prev)| worst < *prev) {
                best = Some((spline, worst));
            }
            if stalled {
                break; // evaluator noise floor reached
            }
            n = n * 2 - 1;
        }
        match best {
            Some((spline, worst)) if worst <= noise_floor => Ok(Self::from_spline(spline)),
            _ => Err(Error::Validation {
                stage: "tabulate_adaptive",
                detail: "interpolation tolerance not met after refinement".into(),
            }),
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Restrict the declared domain (evaluation window stays within data).
    pub fn with_domain(mut self, domain: Interval) -> Self {
        self.domain = domain;
        self
    }

    pub fn provenance(&self) -> Provenance {
        match &self.kind {
            Kind::Spline(_) | Kind::Pchip(_) => Provenance::Tabulated,
            Kind::Analytic(a) => a.provenance(),
            _ => Provenance::ClosedForm,
        }
    }

    /// Slope and intercept when the curve is exactly affine.
    pub fn as_linear(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Constant(c) => Some((0.0, c)),
            Kind::Linear { slope, intercept } => Some((slope, intercept)),
            Kind::Power {
                coef,
                exponent,
                offset,
            } if exponent == 1.0 => Some((coef, offset)),
            _ => None,
        }
    }

    /// Coefficient and exponent when the curve is exactly `coef * u^p`.
    pub fn as_power_zero_offset(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Power {
                coef,
                exponent,
                offset,
            } if offset == 0.0 => Some((coef, exponent)),
            Kind::Linear { slope, intercept } if intercept == 0.0 => Some((slope, 1.0)),
            Kind::Constant(c) => Some((c, 0.0)),
            _ => None,
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        self.domain.check("curve argument", u)?;
        match &self.kind {
            Kind::Constant(c) => Ok(*c),
            Kind::Linear { slope, intercept } => Ok(slope * u + intercept),
            Kind::Power {
                coef,
                exponent,
                offset,
            } => {
                let v = coef * u.powf(*exponent) + offset;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Singularity {
                        what: "power curve",
                        value: u,
                        detail: "nonfinite value",
                    })
                }
            }
            Kind::LogLaw { coef, offset } => {
                if u <= 0.0 {
                    return Err(Error::Singularity {
                        what: "log curve",
                        value: u,
                        detail: "log of nonpositive",
                    });
                }
                Ok(coef * u.ln() + offset)
            }
            Kind::ExpLaw { coef, rate, offset } => Ok(coef * (rate * u).exp() + offset),
            Kind::Spline(s) => s.eval(u),
            Kind::Pchip(p) => p.eval(u),
            Kind::Analytic(a) => a.eval(u),
        }
    }

    pub fn deriv(&self, u: f64) -> Result<f64> {
        self.domain.check("curve argument", u)?;
        match &self.kind {
            Kind::Constant(_) => Ok(0.0),
            Kind::Linear { slope, .. } => Ok(*slope),
            Kind::Power { coef, exponent, .. } => Ok(coef * exponent * u.powf(exponent - 1.0)),
            Kind::LogLaw { coef, .. } => Ok(coef / u),
            Kind::ExpLaw { coef, rate, .. } => Ok(coef * rate * (rate * u).exp()),
            Kind::Spline(s) => s.deriv(u),
            Kind::Pchip(p) => p.deriv(u),
            Kind::Analytic(a) => a.deriv(u),
        }
    }

    pub fn deriv2(&self, u: f64) -> Result<f64> {
        self.domain.check("curve argument", u)?;
        match &self.kind {
            Kind::Constant(_) | Kind::Linear { .. } => Ok(0.0),
            Kind::Power { coef, exponent, .. } => {
                Ok(coef * exponent * (exponent - 1.0) * u.powf(exponent - 2.0))
            }
            Kind::LogLaw { coef, .. } => Ok(-coef / (u * u)),
            Kind::ExpLaw { coef, rate, .. } => Ok(coef * rate * rate * (rate * u).exp()),
            Kind::Spline(s) => s.deriv2(u),
            Kind::Pchip(p) => p.deriv2(u),
            Kind::Analytic(a) => a.deriv2(u),
        }
    }

    /// Scale the curve's values by a constant, preserving structure.
    pub fn scaled(&self, factor: f64) -> Curve {
        let kind = match &self.kind {
            Kind::Constant(c) => Kind::Constant(c * factor),
            Kind::Linear { slope, intercept } => Kind::Linear {
                slope: slope * factor,
                intercept: intercept * factor,
            },
            Kind::Power {
                coef,
                exponent,
                offset,
            } => Kind::Power {
                coef: coef * factor,
                exponent: *exponent,
                offset: offset * factor,
            },
            Kind::LogLaw { coef, offset } => Kind::LogLaw {
                coef: coef * factor,
                offset: offset * factor,
            },
            Kind::ExpLaw { coef, rate, offset } => Kind::ExpLaw {
                coef: coef * factor,
                rate: *rate,
                offset: offset * factor,
            },
            Kind::Spline(s) => {
                let (xs, ys) = s.nodes();
                let scaled: Vec<f64> = ys.iter().map(|y| y * factor).collect();
                Kind::Spline(Arc::new(
                    CubicSpline::new(xs.to_vec(), scaled).expect("valid nodes stay valid"),
                ))
            }
            Kind::Pchip(p) => {
                let (xs, ys) = p.nodes();
                let scaled: Vec<f64> = ys.iter().map(|y| y * factor).collect();
                Kind::Pchip(Arc::new(
                    Pchip::new(xs.to_vec(), scaled).expect("valid nodes stay valid"),
                ))
            }
            Kind::Analytic(a) => Kind::Analytic(Arc::new(ScaledCurve {
                inner: a.clone(),
                factor,
            })),
        };
        Curve {
            kind,
            domain: self.domain,
        }
    }
}

struct ScaledCurve {
    inner: Arc<dyn CurveFn>,
    factor: f64,
}

impl CurveFn for ScaledCurve {
    fn eval(&self, u: f64) -> Result<f64> {
        Ok(self.factor * self.inner.eval(u)?)
    }
    fn deriv(&self, u: f64) -> Result<f64> {
        Ok(self.factor * self.inner.deriv(u)?)
    }
    fn deriv2(&self, u: f64) -> Result<f64> {
        Ok(self.factor * self.inner.deriv2(u)?)
    }
    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
    fn describe(&self) -> &'static str {
        "scaled"
    }
}
