//! Additive-externality duopoly with null discount and finite horizon.
//!
//! Player `i` values own consumption through a strictly increasing,
//! strictly concave `own_i` and the opponent's consumption through an
//! additive `cross_i`. The feedback system couples the two rates through
//! the 2x2 matrix
//!
//! ```text
//! A(u1, u2) = [ F           E1 - E12 ]      F = -(u1 + u2)
//!             [ E2 - E21    F        ]
//! ```
//!
//! whose eigenstructure decides whether any single-agent problem can
//! reproduce the equilibrium: a negative discriminant
//! `(E1 - E12)(E2 - E21) < 0` leaves no real characteristic direction and
//! certifies non-rationalizability. `E_i = -own_i'/own_i''` is the own
//! risk index; `E_ij = -cross_i'` is the marginal externality index of the
//! constructive results (see the module tests for the frozen cases).
//!
//! On the positive side, with a positive discriminant the rates are linked
//! by `u2 = theta(u1)` along an eigenvector field, terminal data must link
//! the bequests through `theta`, and a payoff/bequest pair `(ell, b)` with
//! `ell'' < 0` is assembled from a sign-case table on `f' psi'` and `f''`.

use std::sync::Arc;

use crate::curve::{Curve, CurveFn, Interval, Provenance};
use crate::error::{Error, Result};
use crate::game_model::SmoothFn;
use crate::numerics::interp::{CubicSpline, Pchip};
use crate::numerics::ode::{integrate_path, OdeTol};
use crate::numerics::root::bisect;
use crate::numerics::{lin_grid, log_grid};
use crate::symmetric_equiv::MonopolyProblem;

/// Additive duopoly data: own utilities with two derivatives, optional
/// externality terms with one, horizon and per-player bequests.
#[derive(Debug, Clone)]
pub struct AdditiveSpec {
    pub own1: SmoothFn,
    pub own2: SmoothFn,
    pub cross1: Option<SmoothFn>,
    pub cross2: Option<SmoothFn>,
    pub t_end: f64,
    pub bequest1: SmoothFn,
    pub bequest2: SmoothFn,
    pub rates: Interval,
    pub stock: Interval,
}

impl AdditiveSpec {
    pub fn new(
        own1: SmoothFn,
        own2: SmoothFn,
        cross1: Option<SmoothFn>,
        cross2: Option<SmoothFn>,
        t_end: f64,
        bequest1: SmoothFn,
        bequest2: SmoothFn,
    ) -> Result<Self> {
        let spec = Self {
            own1,
            own2,
            cross1,
            cross2,
            t_end,
            bequest1,
            bequest2,
            // links, inversions and eigen sampling operate at desk scale
            rates: Interval::new(1e-3, 20.0),
            stock: Interval::new(0.05, 20.0),
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

    /// Own utilities must be strictly increasing and strictly concave on
    /// the rate window (checked by sampling).
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::Parameter {
                detail: "horizon must be positive".into(),
            });
        }
        for (name, own) in [("own1", &self.own1), ("own2", &self.own2)] {
            for &u in log_grid(self.rates.lo, self.rates.hi, 17).iter() {
                if !(own.deriv(u) > 0.0) {
                    return Err(Error::Parameter {
                        detail: format!("{name} must be strictly increasing (fails at u = {u})"),
                    });
                }
                if !(own.deriv2(u) < 0.0) {
                    return Err(Error::Parameter {
                        detail: format!("{name} must be strictly concave (fails at u = {u})"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Own risk index `E_i(u) = -own_i'(u)/own_i''(u)`.
    pub fn own_index(&self, player: usize, u: f64) -> Result<f64> {
        let own = if player == 1 { &self.own1 } else { &self.own2 };
        let d2 = own.deriv2(u);
        if d2 == 0.0 {
            return Err(Error::Singularity {
                what: "own utility curvature",
                value: u,
                detail: "second derivative vanishes",
            });
        }
        Ok(-own.deriv(u) / d2)
    }

    /// Externality index `E_ij = -cross_i'` at the opponent's rate.
    pub fn cross_index(&self, player: usize, opponent_rate: f64) -> f64 {
        let cross = if player == 1 {
            &self.cross1
        } else {
            &self.cross2
        };
        cross
            .as_ref()
            .map(|c| -c.deriv(opponent_rate))
            .unwrap_or(0.0)
    }
}

/// Coupling matrix of the feedback system at `(u1, u2)`.
pub fn build_matrix_a(spec: &AdditiveSpec, u1: f64, u2: f64) -> Result<[[f64; 2]; 2]> {
    let f = -(u1 + u2);
    let e1 = spec.own_index(1, u1)?;
    let e2 = spec.own_index(2, u2)?;
    let e12 = spec.cross_index(1, u2);
    let e21 = spec.cross_index(2, u1);
    Ok([[f, e1 - e12], [e2 - e21, f]])
}

/// Eigenvalues, eigenvectors and discriminant of `A` at one point.
#[derive(Debug, Clone, Copy)]
pub struct EigenPoint {
    pub u1: f64,
    pub u2: f64,
    pub discriminant: f64,
    pub lambda: f64,
    pub mu: f64,
    pub s_lambda: [f64; 2],
    pub s_mu: [f64; 2],
}

/// Branch selector for the characteristic link and the dynamics choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Real eigenstructure at `(u1, u2)`; errors when the discriminant is
/// negative (complex pair) or vanishes (defective).
pub fn eigen_pair(spec: &AdditiveSpec, u1: f64, u2: f64) -> Result<EigenPoint> {
    let a = build_matrix_a(spec, u1, u2)?;
    let f = a[0][0];
    let top = a[0][1];
    let bot = a[1][0];
    let disc = top * bot;
    let scale = top.abs().max(bot.abs()).max(1.0);
    if disc < 0.0 {
        return Err(Error::ComplexEigen {
            u1,
            u2,
            discriminant: disc,
        });
    }
    if disc < 1e-14 * scale * scale {
        return Err(Error::Degenerate {
            detail: format!("defective coupling matrix at ({u1}, {u2}): discriminant {disc:.3e}"),
        });
    }
    let root = disc.sqrt();
    // second components solve (A - eig I) s = 0 row-wise; the sign of the
    // off-diagonal entries decides the orientation
    let s_lambda = [1.0, root / top];
    let s_mu = [1.0, -root / top];
    Ok(EigenPoint {
        u1,
        u2,
        discriminant: disc,
        lambda: f + root,
        mu: f - root,
        s_lambda,
        s_mu,
    })
}

/// Left eigenvector row for the chosen branch, normalized to a leading 1.
pub fn left_eigenvector(spec: &AdditiveSpec, u1: f64, u2: f64, branch: Branch) -> Result<[f64; 2]> {
    let a = build_matrix_a(spec, u1, u2)?;
    let disc = a[0][1] * a[1][0];
    if disc <= 0.0 {
        return Err(Error::ComplexEigen {
            u1,
            u2,
            discriminant: disc,
        });
    }
    let root = disc.sqrt();
    Ok(match branch {
        Branch::Plus => [1.0, root / a[1][0]],
        Branch::Minus => [1.0, -root / a[1][0]],
    })
}

/// Verdict of the discriminant sign sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RationalizabilityVerdict {
    /// Discriminant positive across the region: a real characteristic
    /// field exists; rationalization is not obstructed.
    Candidate,
    /// Discriminant negative somewhere with no positive samples: no
    /// single-agent problem reproduces the equilibrium there.
    NotRationalizable,
    /// Mixed or degenerate signs across the region.
    Mixed,
}

/// A sampled point witnessing a discriminant sign.
#[derive(Debug, Clone, Copy)]
pub struct DiscriminantSample {
    pub u1: f64,
    pub u2: f64,
    pub discriminant: f64,
}

#[derive(Debug, Clone)]
pub struct RationalizabilityReport {
    pub verdict: RationalizabilityVerdict,
    /// Witnesses of negative discriminant (first few found).
    pub witnesses: Vec<DiscriminantSample>,
    pub degenerate_points: Vec<DiscriminantSample>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_zero: usize,
}

/// Sample the discriminant sign over a rate box. Non-rationalizability is
/// decided only with an explicit negative witness attached.
pub fn rationalizability_test(
    spec: &AdditiveSpec,
    region1: Interval,
    region2: Interval,
    samples_per_axis: usize,
) -> Result<RationalizabilityReport> {
    let n = samples_per_axis.max(2);
    let mut witnesses = Vec::new();
    let mut degenerate = Vec::new();
    let (mut n_pos, mut n_neg, mut n_zero) = (0usize, 0usize, 0usize);
    for &u1 in lin_grid(region1.lo, region1.hi, n).iter() {
        for &u2 in lin_grid(region2.lo, region2.hi, n).iter() {
            let a = build_matrix_a(spec, u1, u2)?;
            let disc = a[0][1] * a[1][0];
            let scale = a[0][1].abs().max(a[1][0].abs()).max(1.0);
            if disc.abs() < 1e-12 * scale * scale {
                n_zero += 1;
                if degenerate.len() < 8 {
                    degenerate.push(DiscriminantSample {
                        u1,
                        u2,
                        discriminant: disc,
                    });
                }
            } else if disc > 0.0 {
                n_pos += 1;
            } else {
                n_neg += 1;
                if witnesses.len() < 8 {
                    witnesses.push(DiscriminantSample {
                        u1,
                        u2,
                        discriminant: disc,
                    });
                }
            }
        }
    }
    let verdict = if n_neg > 0 && n_pos > 0 {
        RationalizabilityVerdict::Mixed
    } else if n_neg > 0 {
        RationalizabilityVerdict::NotRationalizable
    } else if n_zero > 0 {
        RationalizabilityVerdict::Mixed
    } else {
        RationalizabilityVerdict::Candidate
    };
    Ok(RationalizabilityReport {
        verdict,
        witnesses,
        degenerate_points: degenerate,
        n_positive: n_pos,
        n_negative: n_neg,
        n_zero,
    })
}

/// Argument placement in the link ODE. `AsDisplayed` evaluates the second
/// player's own index at the first player's rate; `EigenConsistent` keeps
/// the eigenvector field's arguments. The two coincide for symmetric data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArgConvention {
    #[default]
    AsDisplayed,
    EigenConsistent,
}

/// Integrate the rate link `u2 = theta(u1)` along the chosen eigenvector
/// branch from an anchor point, over `range`.
pub fn theta_ode(
    spec: &AdditiveSpec,
    branch: Branch,
    convention: ArgConvention,
    anchor: (f64, f64),
    range: Interval,
    nodes: usize,
) -> Result<Curve> {
    if !range.contains(anchor.0) {
        return Err(Error::Parameter {
            detail: format!("anchor u1 = {} outside the integration range", anchor.0),
        });
    }
    let slope = |u1: f64, th: f64| -> Result<f64> {
        let (e2_arg, e21_arg) = match convention {
            ArgConvention::AsDisplayed => (u1, th),
            ArgConvention::EigenConsistent => (th, u1),
        };
        let e1 = spec.own_index(1, u1)?;
        let e12 = spec.cross_index(1, th);
        let e2 = spec.own_index(2, e2_arg)?;
        let e21 = spec.cross_index(2, e21_arg);
        let den = e1 - e12;
        let num = e2 - e21;
        if den.abs() < 1e-14 * (1.0 + e1.abs()) {
            return Err(Error::BranchSingular { u1, value: den });
        }
        if num * den < 0.0 {
            return Err(Error::ComplexEigen {
                u1,
                u2: th,
                discriminant: num * den,
            });
        }
        let magnitude = (num.abs() / den.abs()).sqrt();
        Ok(match branch {
            Branch::Plus => magnitude,
            Branch::Minus => -magnitude,
        })
    };

    let n = nodes.max(9);
    let grid = lin_grid(range.lo, range.hi, n);
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);

    let fwd: Vec<f64> = grid.iter().copied().filter(|&u| u > anchor.0).collect();
    let bwd: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&u| u < anchor.0)
        .rev()
        .collect();
    let rhs = |u: f64, y: &[f64; 1]| slope(u, y[0]).map(|v| [v]);
    let states_fwd = integrate_path(rhs, anchor.0, [anchor.1], &fwd, OdeTol::default())?;
    let states_bwd = integrate_path(rhs, anchor.0, [anchor.1], &bwd, OdeTol::default())?;
    for (u, st) in bwd.iter().zip(&states_bwd).rev() {
        xs.push(*u);
        ys.push(st[0]);
    }
    xs.push(anchor.0);
    ys.push(anchor.1);
    for (u, st) in fwd.iter().zip(&states_fwd) {
        xs.push(*u);
        ys.push(st[0]);
    }
    Ok(Curve::from_pchip(Pchip::new(xs, ys)?))
}

/// Check the terminal-data link `(own2')^{-1}(B2_x) = theta((own1')^{-1}(B1_x))`
/// on a stock grid. Returns the sup defect and a pass flag at 1e-8.
pub fn bequest_link_check(
    spec: &AdditiveSpec,
    theta: &Curve,
    x_grid: &[f64],
) -> Result<(bool, f64)> {
    let mut defect = 0.0f64;
    for &x in x_grid {
        let lhs = invert_marginal(&spec.own2, spec.bequest2.deriv(x), spec.rates, "own2'")?;
        let inner = invert_marginal(&spec.own1, spec.bequest1.deriv(x), spec.rates, "own1'")?;
        let rhs = theta.eval(inner)?;
        defect = defect.max((lhs - rhs).abs());
    }
    Ok((defect <= 1e-8, defect))
}

// Strictly decreasing marginal (own'' < 0) inverted by bisection.
fn invert_marginal(
    own: &SmoothFn,
    target: f64,
    window: Interval,
    what: &'static str,
) -> Result<f64> {
    let lo = window.lo;
    let hi = window.hi;
    let (m_lo, m_hi) = (own.deriv(lo), own.deriv(hi));
    let (min_m, max_m) = (m_hi.min(m_lo), m_hi.max(m_lo));
    if target < min_m || target > max_m {
        return Err(Error::Inversion {
            what,
            value: target,
        });
    }
    bisect(|u| Ok(own.deriv(u) - target), lo, hi, 1e-13, what)
}

/// Result of the constructive assembly; the sign case used is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BequestShape {
    IncreasingConvex,
    DecreasingConvex,
    IncreasingConcave,
    DecreasingConcave,
}

struct TemplateBequest {
    shape: BequestShape,
    scale: f64,
    x_mirror: f64,
    x_shift: f64,
}

impl TemplateBequest {
    fn raw(&self, x: f64) -> (f64, f64, f64) {
        match self.shape {
            BequestShape::IncreasingConvex => (x * x, 2.0 * x, 2.0),
            BequestShape::DecreasingConvex => {
                let d = self.x_mirror - x;
                (d * d, -2.0 * d, 2.0)
            }
            BequestShape::IncreasingConcave => {
                let s = (x + self.x_shift).sqrt();
                (s, 0.5 / s, -0.25 / (s * s * s))
            }
            BequestShape::DecreasingConcave => (-x * x, -2.0 * x, -2.0),
        }
    }
}

impl CurveFn for TemplateBequest {
    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.scale * self.raw(x).0)
    }
    fn deriv(&self, x: f64) -> Result<f64> {
        Ok(self.scale * self.raw(x).1)
    }
    fn deriv2(&self, x: f64) -> Result<f64> {
        Ok(self.scale * self.raw(x).2)
    }
    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }
    fn describe(&self) -> &'static str {
        "template bequest"
    }
}

/// Assemble the zero-discount single-agent problem for an additive
/// duopoly: dynamics from the branch eigenvalue along `(u, theta(u))`, a
/// bequest from the sign-case table, and a payoff integrated from
/// `ell'(u) = -f'(u) b'(psi(u))`, validated strictly concave.
pub fn construct_additive_oc(
    spec: &AdditiveSpec,
    theta: &Curve,
    branch: Branch,
) -> Result<MonopolyProblem> {
    let dom = theta.domain();
    let n = 801usize;
    let us = lin_grid(dom.lo, dom.hi, n);

    // dynamics along the link
    let mut f_vals = Vec::with_capacity(n);
    for &u in &us {
        let th = theta.eval(u)?;
        let ep = eigen_pair(spec, u, th)?;
        f_vals.push(match branch {
            Branch::Plus => ep.lambda,
            Branch::Minus => ep.mu,
        });
    }
    let f_curve = Curve::from_pchip(Pchip::new(us.clone(), f_vals.clone())?);

    // strict monotonicity and a single convexity class
    let diffs: Vec<f64> = f_vals.windows(2).map(|w| w[1] - w[0]).collect();
    let span = f_vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let increasing = diffs.iter().all(|&d| d > 1e-12 * span);
    let decreasing = diffs.iter().all(|&d| d < -1e-12 * span);
    if !increasing && !decreasing {
        return Err(Error::Hypothesis {
            detail: "branch eigenvalue is not strictly monotone along the link".into(),
        });
    }
    let second: Vec<f64> = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    let curb = 1e-9 * span;
    let convex = second.iter().all(|&d| d >= -curb);
    let concave = second.iter().all(|&d| d <= curb);
    if !convex && !concave {
        return Err(Error::Hypothesis {
            detail: "branch eigenvalue changes convexity along the link".into(),
        });
    }

    // psi(u) = (B1_x)^{-1}(own1'(u)) on the stock window
    let psi_of = |u: f64| -> Result<f64> {
        invert_bequest_slope(&spec.bequest1, spec.own1.deriv(u), spec.stock)
    };
    let mut psi_vals = Vec::with_capacity(n);
    for &u in &us {
        psi_vals.push(psi_of(u)?);
    }
    let psi_increasing = psi_vals.windows(2).all(|w| w[1] > w[0]);
    let psi_decreasing = psi_vals.windows(2).all(|w| w[1] < w[0]);
    if !psi_increasing && !psi_decreasing {
        return Err(Error::Hypothesis {
            detail: "terminal stock map psi is not strictly monotone".into(),
        });
    }

    let f_slope_sign = if increasing { 1.0 } else { -1.0 };
    let psi_sign = if psi_increasing { 1.0 } else { -1.0 };
    let product_positive = f_slope_sign * psi_sign > 0.0;
    let f_convex = convex;

    // printed sign-case table, then remaining templates as fallback
    let preferred = match (product_positive, f_convex) {
        (true, true) => BequestShape::IncreasingConvex,
        (true, false) => BequestShape::DecreasingConvex,
        (false, true) => BequestShape::IncreasingConcave,
        (false, false) => BequestShape::DecreasingConvex,
    };
    let mut candidates = vec![preferred];
    for shape in [
        BequestShape::IncreasingConvex,
        BequestShape::DecreasingConvex,
        BequestShape::IncreasingConcave,
        BequestShape::DecreasingConcave,
    ] {
        if !candidates.contains(&shape) {
            candidates.push(shape);
        }
    }

    let (x_lo, x_hi) = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in &psi_vals {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    };

    let mut failure_window = (dom.lo, dom.hi);
    for shape in candidates {
        let mut template = TemplateBequest {
            shape,
            scale: 1.0,
            x_mirror: x_lo + x_hi,
            x_shift: 0.05 * (x_hi - x_lo).max(1e-3) - x_lo.min(0.0),
        };
        // keep |b'| within [0.1, 10] on the traversed stocks
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for &p in &psi_vals {
            let d = template.raw(p).1.abs();
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if dmin <= 0.0 || !dmax.is_finite() {
            continue;
        }
        template.scale = 1.0 / (dmin * dmax).sqrt();

        // ell'' = -(f'' b'(psi) + f' b''(psi) psi')
        let b = Curve::analytic(
            Arc::new(template),
            Interval::new(x_lo.min(spec.stock.lo), x_hi.max(spec.stock.hi)),
        );
        let psi_curve = Curve::from_pchip(Pchip::new(us.clone(), psi_vals.clone())?);
        let mut ok = true;
        let mut worst_u = dom.lo;
        for &u in log_grid(dom.lo.max(1e-6), dom.hi, 64).iter() {
            let bp = b.deriv(psi_curve.eval(u)?)?;
            let bpp = b.deriv2(psi_curve.eval(u)?)?;
            let ell2 = -(f_curve.deriv2(u)? * bp + f_curve.deriv(u)? * bpp * psi_curve.deriv(u)?);
            if ell2 >= 0.0 {
                ok = false;
                worst_u = u;
                break;
            }
        }
        if !ok {
            failure_window = (worst_u, dom.hi);
            continue;
        }

        // ell from quadrature of ell' = -f' b'(psi)
        let mut ell_vals = Vec::with_capacity(n);
        let mut acc = 0.0;
        ell_vals.push(0.0);
        for w in us.windows(2) {
            let tolq = crate::numerics::quad::QuadTol {
                abs: 1e-13,
                rel: 1e-11,
                max_subdivisions: 1 << 10,
            };
            let seg = crate::numerics::quad::integrate(
                |z| Ok(-(f_curve.deriv(z)? * b.deriv(psi_curve.eval(z)?)?)),
                w[0],
                w[1],
                tolq,
            )?;
            acc += seg.value;
            ell_vals.push(acc);
        }
        let ell = Curve::from_spline(CubicSpline::new(us.clone(), ell_vals)?);
        let gamma = Curve::analytic(
            Arc::new(ComposedCoestate {
                b: b.clone(),
                psi: psi_curve.clone(),
            }),
            Interval::new(dom.lo, dom.hi),
        );
        return Ok(MonopolyProblem {
            ell,
            rho: 0.0,
            f: f_curve,
            bequest: Some(b),
            c: 1.0,
            gamma,
            u_ref: dom.lo,
            source_discount: 0.0,
        });
    }
    Err(Error::Concavity {
        lo: failure_window.0,
        hi: failure_window.1,
    })
}

// gamma(u) = -ell'/f' = b'(psi(u)) along the construction.
struct ComposedCoestate {
    b: Curve,
    psi: Curve,
}

impl CurveFn for ComposedCoestate {
    fn eval(&self, u: f64) -> Result<f64> {
        self.b.deriv(self.psi.eval(u)?)
    }
    fn deriv(&self, u: f64) -> Result<f64> {
        Ok(self.b.deriv2(self.psi.eval(u)?)? * self.psi.deriv(u)?)
    }
    fn deriv2(&self, u: f64) -> Result<f64> {
        let h = crate::numerics::fd::step_quartroot(u);
        crate::numerics::fd::deriv2_central(|z| self.eval(z), u, h)
    }
    fn describe(&self) -> &'static str {
        "composed coestate"
    }
}

// Invert B_x by bisection over the stock window; B_x must bracket the target.
fn invert_bequest_slope(bequest: &SmoothFn, target: f64, window: Interval) -> Result<f64> {
    let g = |x: f64| Ok(bequest.deriv(x) - target);
    let (g_lo, g_hi) = (g(window.lo)?, g(window.hi)?);
    if g_lo * g_hi > 0.0 {
        return Err(Error::Inversion {
            what: "bequest slope",
            value: target,
        });
    }
    bisect(g, window.lo, window.hi, 1e-13, "bequest slope")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cara_pair(alpha1: f64, alpha2: f64) -> (SmoothFn, SmoothFn) {
        (SmoothFn::cara(alpha1), SmoothFn::cara(alpha2))
    }

    fn exp_bequests() -> (SmoothFn, SmoothFn) {
        (
            SmoothFn::exp_bequest(1.0, 1.0),
            SmoothFn::exp_bequest(1.0, 1.0),
        )
    }

    fn plain_spec() -> AdditiveSpec {
        let (own1, own2) = cara_pair(1.0, 1.0);
        let (b1, b2) = exp_bequests();
        AdditiveSpec::new(own1, own2, None, None, 1.0, b1, b2).unwrap()
    }

    fn negative_cross_spec(d: f64) -> AdditiveSpec {
        let (own1, own2) = cara_pair(1.0, 1.0);
        let (b1, b2) = exp_bequests();
        AdditiveSpec::new(own1, own2, None, Some(SmoothFn::linear(-d)), 1.0, b1, b2).unwrap()
    }

    #[test]
    fn matrix_no_externality() {
        let spec = plain_spec();
        let a = build_matrix_a(&spec, 1.0, 1.0).unwrap();
        assert_relative_eq!(a[0][0], -2.0, epsilon = 1e-14);
        assert_relative_eq!(a[0][1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(a[1][0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(a[1][1], -2.0, epsilon = 1e-14);
    }

    #[test]
    fn matrix_with_linear_negative_externality() {
        // E21 = d turns the lower off-diagonal into 1 - d
        let spec = negative_cross_spec(2.0);
        let a = build_matrix_a(&spec, 1.0, 1.0).unwrap();
        assert_relative_eq!(a[0][1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(a[1][0], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn matrix_symmetry_criterion() {
        let spec = negative_cross_spec(0.4);
        let a = build_matrix_a(&spec, 0.7, 1.3).unwrap();
        let e1 = spec.own_index(1, 0.7).unwrap();
        let e2 = spec.own_index(2, 1.3).unwrap();
        let symmetric = (e1 - spec.cross_index(1, 1.3)) == (e2 - spec.cross_index(2, 0.7));
        assert_eq!(a[0][1] == a[1][0], symmetric);
    }

    #[test]
    fn eigen_no_externality_values() {
        let spec = plain_spec();
        let ep = eigen_pair(&spec, 1.0, 1.0).unwrap();
        assert_relative_eq!(ep.lambda, -1.0, epsilon = 1e-13);
        assert_relative_eq!(ep.mu, -3.0, epsilon = 1e-13);
        // eigen identity for both pairs
        let a = build_matrix_a(&spec, 1.0, 1.0).unwrap();
        for (eig, s) in [(ep.lambda, ep.s_lambda), (ep.mu, ep.s_mu)] {
            for row in 0..2 {
                let lhs = a[row][0] * s[0] + a[row][1] * s[1];
                assert_relative_eq!(lhs, eig * s[row], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_identity_with_asymmetric_indices() {
        let (own1, own2) = cara_pair(0.8, 1.7);
        let (b1, b2) = exp_bequests();
        let spec = AdditiveSpec::new(
            own1,
            own2,
            Some(SmoothFn::linear(0.2)),
            Some(SmoothFn::linear(0.1)),
            1.0,
            b1,
            b2,
        )
        .unwrap();
        for &(u1, u2) in &[(0.4, 0.9), (1.0, 1.0), (2.3, 0.6)] {
            let a = build_matrix_a(&spec, u1, u2).unwrap();
            if a[0][1] * a[1][0] <= 0.0 {
                continue;
            }
            let ep = eigen_pair(&spec, u1, u2).unwrap();
            assert!(ep.lambda > ep.mu);
            for (eig, s) in [(ep.lambda, ep.s_lambda), (ep.mu, ep.s_mu)] {
                for row in 0..2 {
                    let lhs = a[row][0] * s[0] + a[row][1] * s[1];
                    assert!((lhs - eig * s[row]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigen_pairing_correct_when_both_entries_negative() {
        // strong shared negative externalities flip both off-diagonal signs
        let (own1, own2) = cara_pair(1.0, 1.0);
        let (b1, b2) = exp_bequests();
        let spec = AdditiveSpec::new(
            own1,
            own2,
            Some(SmoothFn::linear(-3.0)),
            Some(SmoothFn::linear(-3.0)),
            1.0,
            b1,
            b2,
        )
        .unwrap();
        let a = build_matrix_a(&spec, 1.0, 1.0).unwrap();
        assert!(a[0][1] < 0.0 && a[1][0] < 0.0);
        let ep = eigen_pair(&spec, 1.0, 1.0).unwrap();
        for (eig, s) in [(ep.lambda, ep.s_lambda), (ep.mu, ep.s_mu)] {
            for row in 0..2 {
                let lhs = a[row][0] * s[0] + a[row][1] * s[1];
                assert!((lhs - eig * s[row]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn complex_pair_is_an_error() {
        let spec = negative_cross_spec(2.0);
        assert!(matches!(
            eigen_pair(&spec, 1.0, 1.0),
            Err(Error::ComplexEigen { .. })
        ));
    }

    #[test]
    fn left_eigenvector_row_identity() {
        let (own1, own2) = cara_pair(0.9, 1.4);
        let (b1, b2) = exp_bequests();
        let spec =
            AdditiveSpec::new(own1, own2, None, Some(SmoothFn::linear(0.3)), 1.0, b1, b2).unwrap();
        for &(u1, u2) in &[(0.5, 0.8), (1.0, 1.0), (1.7, 0.4)] {
            let a = build_matrix_a(&spec, u1, u2).unwrap();
            let ep = eigen_pair(&spec, u1, u2).unwrap();
            for (branch, eig) in [(Branch::Plus, ep.lambda), (Branch::Minus, ep.mu)] {
                let l = left_eigenvector(&spec, u1, u2, branch).unwrap();
                for col in 0..2 {
                    let lhs = l[0] * a[0][col] + l[1] * a[1][col];
                    assert!((lhs - eig * l[col]).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn rationalizability_negative_witnessed() {
        // linear negative externality with d alpha2 > 1
        let spec = negative_cross_spec(2.0);
        let report =
            rationalizability_test(&spec, Interval::new(0.1, 5.0), Interval::new(0.1, 5.0), 50)
                .unwrap();
        assert_eq!(report.verdict, RationalizabilityVerdict::NotRationalizable);
        assert!(!report.witnesses.is_empty());
        assert!(report.witnesses[0].discriminant < 0.0);
        assert_eq!(report.n_positive, 0);
    }

    #[test]
    fn rationalizability_candidate_without_externalities() {
        let spec = plain_spec();
        let report =
            rationalizability_test(&spec, Interval::new(0.1, 5.0), Interval::new(0.1, 5.0), 50)
                .unwrap();
        assert_eq!(report.verdict, RationalizabilityVerdict::Candidate);
        assert_eq!(report.n_negative, 0);
    }

    #[test]
    fn rationalizability_boundary_degenerate_is_mixed() {
        // d alpha2 = 1 nulls the discriminant identically
        let spec = negative_cross_spec(1.0);
        let report =
            rationalizability_test(&spec, Interval::new(0.1, 5.0), Interval::new(0.1, 5.0), 50)
                .unwrap();
        assert_eq!(report.verdict, RationalizabilityVerdict::Mixed);
        assert!(!report.degenerate_points.is_empty());
    }

    #[test]
    fn theta_identity_for_symmetric_data() {
        let spec = plain_spec();
        let theta = theta_ode(
            &spec,
            Branch::Plus,
            ArgConvention::AsDisplayed,
            (1.0, 1.0),
            Interval::new(0.3, 3.0),
            101,
        )
        .unwrap();
        for &u in &[0.4, 1.0, 2.7] {
            assert_relative_eq!(theta.eval(u).unwrap(), u, epsilon = 1e-10);
        }
    }

    #[test]
    fn theta_minus_branch_mirror_line() {
        let spec = plain_spec();
        let theta = theta_ode(
            &spec,
            Branch::Minus,
            ArgConvention::AsDisplayed,
            (1.0, 1.0),
            Interval::new(0.3, 1.7),
            101,
        )
        .unwrap();
        for &u in &[0.35, 1.0, 1.6] {
            assert_relative_eq!(theta.eval(u).unwrap(), 2.0 - u, epsilon = 1e-10);
        }
    }

    #[test]
    fn theta_slope_stays_in_eigenspace() {
        // where the two argument conventions coincide, (1, theta') spans
        // the branch eigenvector
        let spec = plain_spec();
        let theta = theta_ode(
            &spec,
            Branch::Plus,
            ArgConvention::EigenConsistent,
            (1.0, 1.0),
            Interval::new(0.5, 2.0),
            101,
        )
        .unwrap();
        for &u in &[0.6, 1.0, 1.9] {
            let th = theta.eval(u).unwrap();
            let slope = theta.deriv(u).unwrap();
            let ep = eigen_pair(&spec, u, th).unwrap();
            let cross = 1.0 * ep.s_lambda[1] - slope * ep.s_lambda[0];
            assert!(cross.abs() <= 1e-8, "cross product {cross}");
        }
    }

    #[test]
    fn theta_branch_singular_when_denominator_index_vanishes() {
        // cross1 slope -1 makes E1 - E12 = 1 - 1 = 0 everywhere
        let (own1, own2) = cara_pair(1.0, 1.0);
        let (b1, b2) = exp_bequests();
        let spec =
            AdditiveSpec::new(own1, own2, Some(SmoothFn::linear(-1.0)), None, 1.0, b1, b2).unwrap();
        let res = theta_ode(
            &spec,
            Branch::Plus,
            ArgConvention::AsDisplayed,
            (1.0, 1.0),
            Interval::new(0.5, 2.0),
            33,
        );
        assert!(
            matches!(res, Err(Error::BranchSingular { .. })),
            "got {res:?}"
        );
    }

    #[test]
    fn bequest_link_inversion_error_outside_marginal_range() {
        // bequest slopes above own' sup cannot be inverted
        let (own1, own2) = cara_pair(1.0, 1.0);
        let big = SmoothFn::linear(100.0);
        let spec = AdditiveSpec::new(
            own1,
            own2,
            None,
            None,
            1.0,
            big,
            SmoothFn::exp_bequest(1.0, 1.0),
        )
        .unwrap();
        let theta = Curve::linear(1.0, 0.0, Interval::new(0.1, 10.0));
        let res = bequest_link_check(&spec, &theta, &[1.0, 2.0]);
        assert!(matches!(res, Err(Error::Inversion { .. })), "got {res:?}");
    }

    #[test]
    fn bequest_link_symmetric_identity() {
        let spec = plain_spec();
        let theta = Curve::linear(1.0, 0.0, Interval::new(0.1, 10.0));
        let grid = lin_grid(0.5, 3.0, 21);
        let (pass, defect) = bequest_link_check(&spec, &theta, &grid).unwrap();
        assert!(pass, "defect {defect}");
    }

    #[test]
    fn bequest_link_mirror_closed_form() {
        // own = cara(1): (own')^-1(y) = -ln y; with theta(u) = 2 - u and
        // B1_x = e^-x the matching bequest slope is B2_x = e^(x-2)
        let (own1, own2) = cara_pair(1.0, 1.0);
        let b2 = SmoothFn::new(
            "mirror",
            |x: f64| (x - 2.0f64).exp(),
            |x: f64| (x - 2.0f64).exp(),
            |x: f64| (x - 2.0f64).exp(),
        );
        let spec = AdditiveSpec::new(
            own1,
            own2,
            None,
            None,
            1.0,
            SmoothFn::exp_bequest(1.0, 1.0),
            b2,
        )
        .unwrap();
        let theta = Curve::linear(-1.0, 2.0, Interval::new(0.1, 10.0));
        let grid = lin_grid(0.5, 1.5, 11);
        let (pass, defect) = bequest_link_check(&spec, &theta, &grid).unwrap();
        assert!(pass, "defect {defect}");
        assert!(defect <= 1e-12);
    }

    #[test]
    fn bequest_link_mismatch_detected() {
        let spec = plain_spec();
        let theta = Curve::linear(-1.0, 2.0, Interval::new(0.1, 10.0));
        let grid = lin_grid(0.5, 1.5, 11);
        let (pass, defect) = bequest_link_check(&spec, &theta, &grid).unwrap();
        assert!(!pass);
        assert!(defect > 0.1);
    }

    #[test]
    fn construct_rejects_constant_dynamics() {
        // minus branch along theta(u) = 2 - u keeps lambda constant
        let spec = plain_spec();
        let theta = theta_ode(
            &spec,
            Branch::Minus,
            ArgConvention::AsDisplayed,
            (1.0, 1.0),
            Interval::new(0.3, 1.7),
            101,
        )
        .unwrap();
        assert!(matches!(
            construct_additive_oc(&spec, &theta, Branch::Minus),
            Err(Error::Hypothesis { .. })
        ));
    }

    #[test]
    fn construct_plus_branch_concave_payoff() {
        let spec = plain_spec();
        let theta = theta_ode(
            &spec,
            Branch::Plus,
            ArgConvention::AsDisplayed,
            (1.0, 1.0),
            Interval::new(0.4, 2.0),
            101,
        )
        .unwrap();
        let oc = construct_additive_oc(&spec, &theta, Branch::Plus).unwrap();
        assert_eq!(oc.rho, 0.0);
        // f(u) = -2u + 1 along the identity link
        for &u in &[0.5, 1.0, 1.8] {
            assert_relative_eq!(oc.f.eval(u).unwrap(), -2.0 * u + 1.0, max_relative = 1e-9);
        }
        // strictly concave payoff across the window
        for &u in &[0.5, 0.9, 1.4, 1.9] {
            assert!(oc.ell.deriv2(u).unwrap() < 0.0);
        }
        // terminal condition: ell'(u) = -f'(u) b'(psi(u)) with psi = identity
        let b = oc.bequest.as_ref().unwrap();
        for &u in &[0.6, 1.0, 1.5] {
            let lhs = oc.ell.deriv(u).unwrap();
            let rhs = -(oc.f.deriv(u).unwrap() * b.deriv(u).unwrap());
            assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        }
    }

    #[test]
    fn own_utilities_must_be_concave() {
        let bad = SmoothFn::new("convex", |u: f64| u * u, |u| 2.0 * u, |_| 2.0);
        let (b1, b2) = exp_bequests();
        assert!(AdditiveSpec::new(bad, SmoothFn::cara(1.0), None, None, 1.0, b1, b2).is_err());
    }
}
