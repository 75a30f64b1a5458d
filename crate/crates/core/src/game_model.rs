//! Model layer for the symmetric extraction game: utility families, their
//! partial derivatives on the symmetric slice, and the diagonal risk-index
//! curves that drive every downstream construction.
//!
//! For an N-player game over a common stock with per-player rate `u_i` and
//! stock dynamics `x' = -sum u_j`, the two indices evaluated at a symmetric
//! point `u_1 = ... = u_N = u` are
//!
//! ```text
//! e1(u)  = -L_own / (L_own_own + (N-1) L_own_cross)        (> 0 assumed)
//! e-1(u) = -L_cross / (L_own_own + (N-1) L_own_cross)      (sign free)
//! ```
//!
//! where the partials of the per-player utility `L` are taken with all
//! opponents at the common rate. `e-1` is identically zero for N = 1.

use std::fmt;
use std::sync::Arc;

use crate::curve::{Curve, CurveFn, Interval, Provenance};
use crate::error::{Error, Result};
use crate::numerics::fd;

/// Default admissible extraction-rate window. Keeps rate poles (u = 0)
/// away from quadrature and ODE paths.
pub const DEFAULT_RATE_DOMAIN: Interval = Interval { lo: 1e-6, hi: 1e6 };

/// Default stock window.
pub const DEFAULT_STOCK_DOMAIN: Interval = Interval { lo: 0.0, hi: 1e6 };

/// A scalar function bundled with its first two derivatives.
#[derive(Clone)]
pub struct SmoothFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFn({})", self.label)
    }
}

impl SmoothFn {
    pub fn new<F, G, H>(label: impl Into<String>, f: F, d1: G, d2: H) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            label: label.into(),
        }
    }

    /// Constant absolute risk aversion utility `-exp(-alpha u)`.
    pub fn cara(alpha: f64) -> Self {
        Self::new(
            format!("cara({alpha})"),
            move |u| -(-alpha * u).exp(),
            move |u| alpha * (-alpha * u).exp(),
            move |u| -alpha * alpha * (-alpha * u).exp(),
        )
    }

    /// Isoelastic utility `u^(1-alpha) / (1-alpha)`; natural log at alpha = 1.
    pub fn crra(alpha: f64) -> Self {
        if alpha == 1.0 {
            Self::new("crra(1)", |u: f64| u.ln(), |u| 1.0 / u, |u| -1.0 / (u * u))
        } else {
            Self::new(
                format!("crra({alpha})"),
                move |u| u.powf(1.0 - alpha) / (1.0 - alpha),
                move |u| u.powf(-alpha),
                move |u| -alpha * u.powf(-alpha - 1.0),
            )
        }
    }

    pub fn linear(slope: f64) -> Self {
        Self::new(
            format!("linear({slope})"),
            move |u| slope * u,
            move |_| slope,
            |_| 0.0,
        )
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// `scale * exp(-rate x)` as a bequest-derivative building block:
    /// B with B_x(x) = scale * exp(-rate x).
    pub fn exp_bequest(scale: f64, rate: f64) -> Self {
        Self::new(
            format!("exp_bequest({scale},{rate})"),
            move |x| -scale / rate * (-rate * x).exp(),
            move |x| scale * (-rate * x).exp(),
            move |x| -scale * rate * (-rate * x).exp(),
        )
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }
    pub fn deriv(&self, u: f64) -> f64 {
        (self.d1)(u)
    }
    pub fn deriv2(&self, u: f64) -> f64 {
        (self.d2)(u)
    }
    pub fn label(&self) -> &str {
        &self.label
    }
}

/// The five values of `L` and its partials on the symmetric-opponents slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialDerivatives {
    pub l: f64,
    pub l_own: f64,
    /// derivative with respect to a single opponent's rate
    pub l_cross: f64,
    pub l_own_own: f64,
    /// mixed second derivative against a single opponent's rate
    pub l_own_cross: f64,
}

/// User-supplied utility evaluated as `L(own, other, n)` with every
/// opponent at the common rate `other`.
#[derive(Clone)]
pub struct CustomUtility {
    pub l: Arc<dyn Fn(f64, f64, usize) -> f64 + Send + Sync>,
    /// Analytic partials when available; otherwise central differences
    /// with cube-root-of-epsilon steps are used.
    pub partials: Option<Arc<dyn Fn(f64, f64, usize) -> PartialDerivatives + Send + Sync>>,
}

impl fmt::Debug for CustomUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CustomUtility(analytic partials: {})",
            self.partials.is_some()
        )
    }
}

/// Per-player utility families on the symmetric slice.
#[derive(Debug, Clone)]
pub enum UtilityFamily {
    /// Own utility `u^(1-alpha)/(1-alpha)` times externality factor
    /// `v^(1-beta)` per opponent.
    CobbDouglas {
        alpha: f64,
        beta: f64,
    },
    /// Profit `u p(Q) - c(u)` with inverse demand `p(Q) = scale * Q^-elasticity`.
    IsoelasticPricing {
        scale: f64,
        elasticity: f64,
        cost: Option<SmoothFn>,
    },
    /// `own(u) + sum_j cross(u_j)` over opponents.
    AdditiveSeparable {
        own: SmoothFn,
        cross: Option<SmoothFn>,
    },
    Custom(CustomUtility),
}

impl UtilityFamily {
    /// Validate family parameters against the player count.
    pub fn validate(&self, players: usize) -> Result<()> {
        match self {
            UtilityFamily::CobbDouglas { alpha, beta } => {
                if !(*alpha > 0.0) || !(*beta > 0.0) {
                    return Err(Error::Parameter {
                        detail: format!(
                            "cobb-douglas requires alpha > 0 and beta > 0, got ({alpha}, {beta})"
                        ),
                    });
                }
                if (*alpha - 1.0).abs() < 1e-14 {
                    return Err(Error::Parameter {
                        detail: "cobb-douglas alpha = 1 divides by 1 - alpha".into(),
                    });
                }
                let d0 = -alpha + (players as f64 - 1.0) * (1.0 - beta);
                if d0 >= 0.0 {
                    return Err(Error::Parameter {
                        detail: format!(
                            "cobb-douglas standing condition -alpha + (N-1)(1-beta) < 0 fails: {d0}"
                        ),
                    });
                }
                Ok(())
            }
            UtilityFamily::IsoelasticPricing {
                scale, elasticity, ..
            } => {
                if !(*scale > 0.0) || !(*elasticity > 0.0) {
                    return Err(Error::Parameter {
                        detail: format!(
                            "isoelastic pricing requires scale > 0 and elasticity > 0, got ({scale}, {elasticity})"
                        ),
                    });
                }
                Ok(())
            }
            UtilityFamily::AdditiveSeparable { .. } | UtilityFamily::Custom(_) => Ok(()),
        }
    }

    /// Evaluate `L` and its partials at `(own, other)` with all opponents at
    /// the common rate `other`. No domain clipping; poles surface as errors.
    pub fn partials(&self, players: usize, own: f64, other: f64) -> Result<PartialDerivatives> {
        let n = players as f64;
        let out = match self {
            UtilityFamily::CobbDouglas { alpha, beta } => {
                if own <= 0.0 || (players > 1 && other <= 0.0) {
                    return Err(Error::Singularity {
                        what: "rate",
                        value: if own <= 0.0 { own } else { other },
                        detail: "cobb-douglas pole at nonpositive rate",
                    });
                }
                let eo = (1.0 - beta) * (n - 1.0);
                let v_eo = if players > 1 { other.powf(eo) } else { 1.0 };
                let m = own.powf(1.0 - alpha) / (1.0 - alpha);
                let l = m * v_eo;
                let l_own = own.powf(-alpha) * v_eo;
                let l_own_own = -alpha * own.powf(-alpha - 1.0) * v_eo;
                let (l_cross, l_own_cross) = if players > 1 {
                    let v_eo_m1 = other.powf(eo - 1.0);
                    (
                        m * (1.0 - beta) * v_eo_m1,
                        own.powf(-alpha) * (1.0 - beta) * v_eo_m1,
                    )
                } else {
                    (0.0, 0.0)
                };
                PartialDerivatives {
                    l,
                    l_own,
                    l_cross,
                    l_own_own,
                    l_own_cross,
                }
            }
            UtilityFamily::IsoelasticPricing {
                scale,
                elasticity,
                cost,
            } => {
                let q = *elasticity;
                let total = own + (n - 1.0) * other;
                if total <= 0.0 {
                    return Err(Error::Singularity {
                        what: "industry rate",
                        value: total,
                        detail: "inverse demand pole at nonpositive total output",
                    });
                }
                let p = scale * total.powf(-q);
                let dp = -q * scale * total.powf(-q - 1.0);
                let d2p = q * (q + 1.0) * scale * total.powf(-q - 2.0);
                let (c, dc, d2c) = match cost {
                    Some(cf) => (cf.eval(own), cf.deriv(own), cf.deriv2(own)),
                    None => (0.0, 0.0, 0.0),
                };
                PartialDerivatives {
                    l: own * p - c,
                    l_own: p + own * dp - dc,
                    l_cross: if players > 1 { own * dp } else { 0.0 },
                    l_own_own: 2.0 * dp + own * d2p - d2c,
                    l_own_cross: if players > 1 { dp + own * d2p } else { 0.0 },
                }
            }
            UtilityFamily::AdditiveSeparable { own: own_fn, cross } => {
                let cross_at = |f: &dyn Fn(&SmoothFn) -> f64| cross.as_ref().map(f).unwrap_or(0.0);
                PartialDerivatives {
                    l: own_fn.eval(own) + (n - 1.0) * cross_at(&|c| c.eval(other)),
                    l_own: own_fn.deriv(own),
                    l_cross: if players > 1 {
                        cross_at(&|c| c.deriv(other))
                    } else {
                        0.0
                    },
                    l_own_own: own_fn.deriv2(own),
                    l_own_cross: 0.0,
                }
            }
            UtilityFamily::Custom(custom) => {
                if let Some(p) = &custom.partials {
                    p(own, other, players)
                } else {
                    custom_fd_partials(custom, players, own, other)?
                }
            }
        };
        for (name, v) in [
            ("L", out.l),
            ("L_own", out.l_own),
            ("L_cross", out.l_cross),
            ("L_own_own", out.l_own_own),
            ("L_own_cross", out.l_own_cross),
        ] {
            if !v.is_finite() {
                return Err(Error::Singularity {
                    what: name,
                    value: own,
                    detail: "nonfinite partial derivative",
                });
            }
        }
        Ok(out)
    }
}

// Central differences with h = cbrt(eps) * max(1, |u|) for utilities
// supplied without analytic partials.
fn custom_fd_partials(
    custom: &CustomUtility,
    players: usize,
    own: f64,
    other: f64,
) -> Result<PartialDerivatives> {
    let l = &custom.l;
    let hu = fd::step_cuberoot(own);
    let hv = fd::step_cuberoot(other);
    let n1 = (players as f64 - 1.0).max(1.0);
    let value = l(own, other, players);
    let l_own = (l(own + hu, other, players) - l(own - hu, other, players)) / (2.0 * hu);
    let l_own_own =
        (l(own + hu, other, players) - 2.0 * value + l(own - hu, other, players)) / (hu * hu);
    let (l_cross, l_own_cross) = if players > 1 {
        let lc = (l(own, other + hv, players) - l(own, other - hv, players)) / (2.0 * hv) / n1;
        let mixed = (l(own + hu, other + hv, players)
            - l(own + hu, other - hv, players)
            - l(own - hu, other + hv, players)
            + l(own - hu, other - hv, players))
            / (4.0 * hu * hv)
            / n1;
        (lc, mixed)
    } else {
        (0.0, 0.0)
    };
    Ok(PartialDerivatives {
        l: value,
        l_own,
        l_cross,
        l_own_own,
        l_own_cross,
    })
}

/// Time structure of the game.
#[derive(Debug, Clone)]
pub enum Horizon {
    Infinite,
    Finite { t_end: f64, bequest: SmoothFn },
}

impl Horizon {
    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite { .. })
    }
}

/// A symmetric N-player extraction game. Stock dynamics are fixed at
/// `x' = -sum u_j` and are not a configurable field.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub players: usize,
    pub utility: UtilityFamily,
    pub discount: f64,
    pub horizon: Horizon,
    pub rates: Interval,
    pub stock: Interval,
}

impl GameSpec {
    pub fn new(
        players: usize,
        utility: UtilityFamily,
        discount: f64,
        horizon: Horizon,
    ) -> Result<Self> {
        let spec = Self {
            players,
            utility,
            discount,
            horizon,
            rates: DEFAULT_RATE_DOMAIN,
            stock: DEFAULT_STOCK_DOMAIN,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_rates(mut self, rates: Interval) -> Self {
        self.rates = rates;
        self
    }

    pub fn with_stock(mut self, stock: Interval) -> Self {
        self.stock = stock;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.players < 1 {
            return Err(Error::Parameter {
                detail: "at least one player required".into(),
            });
        }
        if !(self.discount >= 0.0) {
            return Err(Error::Parameter {
                detail: format!("discount rate must be nonnegative, got {}", self.discount),
            });
        }
        if let Horizon::Finite { t_end, .. } = &self.horizon {
            if !(*t_end > 0.0) {
                return Err(Error::Parameter {
                    detail: format!("finite horizon must be positive, got {t_end}"),
                });
            }
        }
        self.utility.validate(self.players)
    }

    /// Partials at `(own, other)` after checking the rate domain.
    pub fn partials(&self, own: f64, other: f64) -> Result<PartialDerivatives> {
        self.rates.check("own rate", own)?;
        if self.players > 1 {
            self.rates.check("other rate", other)?;
        }
        self.utility.partials(self.players, own, other)
    }

    /// Marginal own utility along the diagonal, `L_own(u, ..., u)`.
    pub fn marginal_own_diagonal(&self, u: f64) -> Result<f64> {
        Ok(self.utility.partials(self.players, u, u)?.l_own)
    }
}

fn symmetric_denominator(p: &PartialDerivatives, players: usize, u: f64) -> Result<f64> {
    let denom = p.l_own_own + (players as f64 - 1.0) * p.l_own_cross;
    let scale = p.l_own_own.abs().max(p.l_own_cross.abs()).max(1e-300);
    if denom.abs() < 1e-13 * scale {
        return Err(Error::Singularity {
            what: "risk denominator",
            value: u,
            detail: "sum of own-rate second partials vanishes",
        });
    }
    Ok(denom)
}

/// Own risk index on the diagonal. Positive by standing assumption.
pub fn risk_index_own(spec: &GameSpec, u: f64) -> Result<f64> {
    spec.rates.check("rate", u)?;
    let p = spec.utility.partials(spec.players, u, u)?;
    let denom = symmetric_denominator(&p, spec.players, u)?;
    let e1 = -p.l_own / denom;
    if e1 <= 0.0 {
        return Err(Error::Sign {
            what: "e1",
            at: u,
            value: e1,
        });
    }
    Ok(e1)
}

/// Cross risk index on the diagonal; zero for a single player and for
/// additive utilities without an externality term.
pub fn risk_index_cross(spec: &GameSpec, u: f64) -> Result<f64> {
    spec.rates.check("rate", u)?;
    if spec.players == 1 {
        return Ok(0.0);
    }
    let p = spec.utility.partials(spec.players, u, u)?;
    let denom = symmetric_denominator(&p, spec.players, u)?;
    Ok(-p.l_cross / denom)
}

/// Shape information carried by a reduced profile; closed-form pipelines
/// key off the exactly-linear case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileShape {
    /// `e1 = eta1 u`, `e-1 = eta2 u` exactly.
    Linear { eta1: f64, eta2: f64, pricing: bool },
    /// Exact pointwise evaluation through the family's derivatives.
    Analytic,
    /// Adaptive tabulation of a custom utility.
    Tabulated,
}

/// The symmetric-diagonal index curves and their validity window.
#[derive(Debug, Clone)]
pub struct RiskProfile {
    pub e1: Curve,
    pub e_minus_1: Curve,
    pub domain: Interval,
    pub shape: ProfileShape,
}

impl RiskProfile {
    /// Linear-profile constants when both curves are exactly linear.
    pub fn linear_etas(&self) -> Option<(f64, f64)> {
        match self.shape {
            ProfileShape::Linear { eta1, eta2, .. } => Some((eta1, eta2)),
            _ => None,
        }
    }
}

struct RiskCurve {
    spec: GameSpec,
    cross: bool,
}

impl CurveFn for RiskCurve {
    fn eval(&self, u: f64) -> Result<f64> {
        if self.cross {
            risk_index_cross(&self.spec, u)
        } else {
            risk_index_own(&self.spec, u)
        }
    }
    fn deriv(&self, u: f64) -> Result<f64> {
        let h = f64::EPSILON.powf(0.2) * u.abs().max(1.0);
        fd::deriv_central4(|x| self.eval(x), u, h)
    }
    fn deriv2(&self, u: f64) -> Result<f64> {
        let h = fd::step_quartroot(u);
        fd::deriv2_central(|x| self.eval(x), u, h)
    }
    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }
    fn describe(&self) -> &'static str {
        if self.cross {
            "risk index e-1"
        } else {
            "risk index e1"
        }
    }
}

// Largest contiguous log-sampled stretch around u = 1 (or the window's
// geometric middle) where both indices evaluate and e1 is positive.
// Utilities like CARA underflow at large rates; the profile's validity
// window reflects that instead of failing downstream.
fn evaluable_window(spec: &GameSpec, domain: Interval) -> Result<Interval> {
    let probes = crate::numerics::log_grid(domain.lo, domain.hi, 129);
    let ok: Vec<bool> = probes
        .iter()
        .map(|&u| {
            risk_index_own(spec, u).is_ok()
                && (spec.players == 1 || risk_index_cross(spec, u).is_ok())
        })
        .collect();
    let center = (domain.lo * domain.hi).sqrt();
    let pivot_target = if domain.contains(1.0) { 1.0 } else { center };
    let pivot = probes
        .iter()
        .position(|&u| u >= pivot_target)
        .unwrap_or(probes.len() / 2);
    if !ok[pivot] {
        // surface the original failure at the pivot
        risk_index_own(spec, probes[pivot])?;
        risk_index_cross(spec, probes[pivot])?;
    }
    let mut lo_idx = pivot;
    while lo_idx > 0 && ok[lo_idx - 1] {
        lo_idx -= 1;
    }
    let mut hi_idx = pivot;
    while hi_idx + 1 < probes.len() && ok[hi_idx + 1] {
        hi_idx += 1;
    }
    Ok(Interval::new(probes[lo_idx], probes[hi_idx]))
}

/// Reduce a symmetric game to its diagonal risk profile.
///
/// Cobb–Douglas and zero-cost isoelastic pricing yield exactly linear
/// curves. Additive and costed-pricing games evaluate pointwise through
/// their derivatives. Custom utilities are tabulated adaptively until the
/// cubic interpolant matches the evaluator to 1e-9 relative error.
pub fn symmetric_reduce(spec: &GameSpec) -> Result<RiskProfile> {
    spec.validate()?;
    let n = spec.players as f64;
    let domain = spec.rates;

    let profile = match &spec.utility {
        UtilityFamily::CobbDouglas { alpha, beta } => {
            let d0 = -alpha + (n - 1.0) * (1.0 - beta);
            let eta1 = -1.0 / d0;
            let eta2 = if spec.players == 1 {
                0.0
            } else {
                -((1.0 - beta) / (1.0 - alpha)) / d0
            };
            RiskProfile {
                e1: Curve::linear(eta1, 0.0, domain),
                e_minus_1: Curve::linear(eta2, 0.0, domain),
                domain,
                shape: ProfileShape::Linear {
                    eta1,
                    eta2,
                    pricing: false,
                },
            }
        }
        UtilityFamily::IsoelasticPricing {
            elasticity,
            cost: None,
            ..
        } => {
            let q = *elasticity;
            if (q - n).abs() < 1e-12 {
                return Err(Error::Singularity {
                    what: "risk denominator",
                    value: q,
                    detail: "elasticity equal to the player count degenerates the cross index",
                });
            }
            let eta1 = 1.0 / q;
            let eta2 = if spec.players == 1 {
                0.0
            } else {
                1.0 / (q - n)
            };
            RiskProfile {
                e1: Curve::linear(eta1, 0.0, domain),
                e_minus_1: Curve::linear(eta2, 0.0, domain),
                domain,
                shape: ProfileShape::Linear {
                    eta1,
                    eta2,
                    pricing: true,
                },
            }
        }
        UtilityFamily::IsoelasticPricing { .. } | UtilityFamily::AdditiveSeparable { .. } => {
            let window = evaluable_window(spec, domain)?;
            let e1 = Curve::analytic(
                Arc::new(RiskCurve {
                    spec: spec.clone(),
                    cross: false,
                }),
                window,
            );
            let no_cross = spec.players == 1
                || matches!(
                    &spec.utility,
                    UtilityFamily::AdditiveSeparable { cross: None, .. }
                );
            let e_minus_1 = if no_cross {
                Curve::constant(0.0, window)
            } else {
                Curve::analytic(
                    Arc::new(RiskCurve {
                        spec: spec.clone(),
                        cross: true,
                    }),
                    window,
                )
            };
            RiskProfile {
                e1,
                e_minus_1,
                domain: window,
                shape: ProfileShape::Analytic,
            }
        }
        UtilityFamily::Custom(custom) => {
            // Tabulation windows must stay clear of the domain edges used by
            // the finite-difference stencils inside the evaluator.
            let pad = 1.0 + 1e-3;
            let window = Interval::new(domain.lo * pad, domain.hi / pad);
            // with analytic partials the evaluator is exact; the difference
            // quotients of a black-box utility carry a noise floor instead
            let floor = if custom.partials.is_some() {
                1e-9
            } else {
                1e-3
            };
            let e1 = Curve::tabulate_adaptive(|u| risk_index_own(spec, u), window, 1e-9, floor)?;
            let e_minus_1 = if spec.players == 1 {
                Curve::constant(0.0, window)
            } else {
                Curve::tabulate_adaptive(|u| risk_index_cross(spec, u), window, 1e-9, floor)?
            };
            RiskProfile {
                e1,
                e_minus_1,
                domain: window,
                shape: ProfileShape::Tabulated,
            }
        }
    };

    // e1 must be positive across the reported window.
    for &u in crate::numerics::log_grid(profile.domain.lo.max(1e-9), profile.domain.hi, 33).iter() {
        let v = profile.e1.eval(u)?;
        if v <= 0.0 {
            return Err(Error::Sign {
                what: "e1",
                at: u,
                value: v,
            });
        }
    }
    Ok(profile)
}
