//! Construction of the fictitious monopoly equivalent to a symmetric
//! extraction oligopoly.
//!
//! Matching the quasilinear first-order PDE of the game's symmetric
//! feedback equilibrium with the PDE of a single-agent problem identifies
//!
//! ```text
//! f(u)      = -N u + (N-1) (e1(u) - e-1(u))              fictitious dynamics
//! gamma(u)  = C exp( -(rho/r) ∫ du / e1(u) )             coestate along the feedback
//! ell'(u)   = -f'(u) gamma(u)                            first-order condition
//! b_x(x)    = C exp( -(rho/r) ∫ phi_x / e1(phi) dx )     bequest (finite horizon)
//! ```
//!
//! with `phi` the terminal feedback map and `C` a free nonzero constant.
//! The discount `rho` of the constructed problem is a free input; the
//! default matches the game's rate. All indefinite integrals are anchored
//! at `u_ref` (stocks at the smallest grid point), which changes payoffs by
//! affine terms only.

use std::sync::Arc;

use crate::curve::{Curve, CurveFn, Interval, Provenance};
use crate::error::{Error, Result};
use crate::game_model::{GameSpec, Horizon, ProfileShape, RiskProfile};
use crate::numerics::interp::{CubicSpline, Pchip};
use crate::numerics::quad::{integrate, QuadTol};
use crate::numerics::root::newton_safeguarded;
use crate::numerics::{lin_grid, log_grid};

/// Options for `derive_monopoly` and the underlying constructions.
#[derive(Debug, Clone)]
pub struct DeriveOptions {
    /// Discount of the constructed problem; defaults to the game's rate.
    pub rho: Option<f64>,
    /// Scale constant; sign may be flipped to make the payoff increasing.
    pub c: f64,
    /// Anchor for indefinite integrals over rates.
    pub u_ref: f64,
    /// Window and density of quadrature tabulations.
    pub work_window: Interval,
    pub nodes_per_decade: usize,
    /// Stock grid for finite-horizon terminal maps and bequests.
    pub stock_window: Interval,
    pub stock_nodes: usize,
    /// Window used for identity validation.
    pub check_window: Interval,
    /// Skip closed-form fast paths (cross-route testing).
    pub force_quadrature: bool,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self {
            rho: None,
            c: 1.0,
            u_ref: 1.0,
            work_window: Interval::new(1e-3, 1e3),
            nodes_per_decade: 1024,
            stock_window: Interval::new(0.1, 10.0),
            stock_nodes: 201,
            check_window: Interval::new(0.1, 10.0),
            force_quadrature: false,
        }
    }
}

/// The constructed single-agent problem.
#[derive(Debug, Clone)]
pub struct MonopolyProblem {
    /// Payoff integrand.
    pub ell: Curve,
    /// Discount rate of the constructed problem.
    pub rho: f64,
    /// Dynamics of the fictitious stock.
    pub f: Curve,
    /// Bequest, present only for finite-horizon sources.
    pub bequest: Option<Curve>,
    /// Integration constant (after any monotonicity sign flip).
    pub c: f64,
    /// Coestate expressed along the feedback.
    pub gamma: Curve,
    /// Anchor of the rate-side indefinite integrals.
    pub u_ref: f64,
    /// Discount rate of the source game.
    pub source_discount: f64,
}

impl MonopolyProblem {
    /// Bequest curve, substituting zero on infinite horizons.
    pub fn bequest_or_zero(&self) -> Curve {
        self.bequest
            .clone()
            .unwrap_or_else(|| Curve::constant(0.0, Interval::new(0.0, 1e6)))
    }

    pub fn provenance(&self) -> Provenance {
        if self.f.provenance() == Provenance::ClosedForm
            && self.gamma.provenance() == Provenance::ClosedForm
            && self.ell.provenance() == Provenance::ClosedForm
        {
            Provenance::ClosedForm
        } else {
            Provenance::Quadrature
        }
    }
}

/// Terminal feedback map for finite-horizon games: at the final time the
/// equilibrium rate solves `L_own(phi, ..., phi) = B_x(x)`.
#[derive(Debug, Clone)]
pub struct TerminalMap {
    pub phi: Curve,
    pub inverse_exists: bool,
}

/// Fictitious dynamics `f(u) = -N u + (N-1)(e1(u) - e-1(u))`.
pub fn fictitious_dynamics(profile: &RiskProfile, players: usize) -> Result<Curve> {
    let n = players as f64;
    if let Some((eta1, eta2)) = profile.linear_etas() {
        let slope = -n + (n - 1.0) * (eta1 - eta2);
        return Ok(Curve::linear(slope, 0.0, profile.domain));
    }
    Ok(Curve::analytic(
        Arc::new(DynamicsCurve {
            e1: profile.e1.clone(),
            e_minus_1: profile.e_minus_1.clone(),
            n,
        }),
        profile.domain,
    ))
}

struct DynamicsCurve {
    e1: Curve,
    e_minus_1: Curve,
    n: f64,
}

impl CurveFn for DynamicsCurve {
    fn eval(&self, u: f64) -> Result<f64> {
        Ok(-self.n * u + (self.n - 1.0) * (self.e1.eval(u)? - self.e_minus_1.eval(u)?))
    }
    fn deriv(&self, u: f64) -> Result<f64> {
        Ok(-self.n + (self.n - 1.0) * (self.e1.deriv(u)? - self.e_minus_1.deriv(u)?))
    }
    fn deriv2(&self, u: f64) -> Result<f64> {
        Ok((self.n - 1.0) * (self.e1.deriv2(u)? - self.e_minus_1.deriv2(u)?))
    }
    fn provenance(&self) -> Provenance {
        if self.e1.provenance() == Provenance::ClosedForm
            && self.e_minus_1.provenance() == Provenance::ClosedForm
        {
            Provenance::ClosedForm
        } else {
            Provenance::Tabulated
        }
    }
    fn describe(&self) -> &'static str {
        "fictitious dynamics"
    }
}

fn check_gamma_inputs(rho: f64, r: f64, c: f64, u_ref: f64, domain: &Interval) -> Result<()> {
    if !(rho >= 0.0) {
        return Err(Error::Parameter {
            detail: format!("rho must be nonnegative, got {rho}"),
        });
    }
    if rho > 0.0 && !(r > 0.0) {
        return Err(Error::Parameter {
            detail: "positive rho requires a positive game discount".into(),
        });
    }
    if c == 0.0 {
        return Err(Error::Parameter {
            detail: "scale constant C must be nonzero".into(),
        });
    }
    domain.check("u_ref", u_ref)
}

/// Coestate `gamma(u) = C exp(-(rho/r) ∫_{u_ref}^{u} dz/e1(z))`.
///
/// Linear and constant `e1` take closed forms; anything else tabulates the
/// antiderivative once and differentiates analytically through the chain
/// rule, so the identification identity holds to machine precision.
pub fn coestate_gamma(
    profile: &RiskProfile,
    rho: f64,
    r: f64,
    c: f64,
    u_ref: f64,
) -> Result<Curve> {
    coestate_gamma_opts(profile, rho, r, c, u_ref, &DeriveOptions::default())
}

pub fn coestate_gamma_opts(
    profile: &RiskProfile,
    rho: f64,
    r: f64,
    c: f64,
    u_ref: f64,
    opts: &DeriveOptions,
) -> Result<Curve> {
    check_gamma_inputs(rho, r, c, u_ref, &profile.domain)?;
    if rho == 0.0 {
        return Ok(Curve::constant(c, profile.domain));
    }
    let k = rho / r;
    if !opts.force_quadrature {
        if let Some((slope, intercept)) = profile.e1.as_linear() {
            if intercept == 0.0 && slope > 0.0 {
                // e1 = eta1 u: gamma = C (u/u_ref)^(-m), m = rho/(eta1 r)
                let m = k / slope;
                return Ok(Curve::power(c * u_ref.powf(m), -m, 0.0, profile.domain));
            }
            if slope == 0.0 && intercept > 0.0 {
                // constant e1: gamma = C exp(-k (u - u_ref)/e1)
                let rate = -k / intercept;
                return Ok(Curve::exp_law(
                    c * (-rate * u_ref).exp(),
                    rate,
                    0.0,
                    profile.domain,
                ));
            }
        }
    }
    let window = profile
        .domain
        .intersect(&opts.work_window)
        .ok_or_else(|| Error::Parameter {
            detail: "work window does not meet the profile domain".into(),
        })?;
    let antider = antiderivative_on_log_grid(
        |z| Ok(1.0 / profile.e1.eval(z)?),
        window,
        u_ref,
        opts.nodes_per_decade,
    )?;
    Ok(Curve::analytic(
        Arc::new(GammaCurve {
            c,
            k,
            e1: profile.e1.clone(),
            antider: Arc::new(antider),
        }),
        window,
    ))
}

// Tabulate F(x) = ∫_{x_ref}^{x} g over a log grid, segment by segment.
fn antiderivative_on_log_grid<G>(
    g: G,
    window: Interval,
    x_ref: f64,
    nodes_per_decade: usize,
) -> Result<CubicSpline>
where
    G: Fn(f64) -> Result<f64>,
{
    let decades = (window.hi / window.lo).log10();
    let n = ((decades * nodes_per_decade as f64).ceil() as usize + 1).max(16);
    let mut xs = log_grid(window.lo, window.hi, n);
    // make sure the anchor is a node so the anchored values are exact there
    if window.contains(x_ref) && xs.iter().all(|&x| (x - x_ref).abs() > 1e-15 * x_ref.abs()) {
        xs.push(x_ref);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * a.abs().max(1.0));
    }
    let tol = QuadTol {
        abs: 1e-13,
        rel: 1e-11,
        max_subdivisions: 1 << 12,
    };
    let mut increments = Vec::with_capacity(xs.len());
    increments.push(0.0);
    for w in xs.windows(2) {
        increments.push(integrate(&g, w[0], w[1], tol)?.value);
    }
    // cumulative sums, then re-anchor at x_ref
    let mut acc = 0.0;
    let mut values: Vec<f64> = increments
        .iter()
        .map(|dv| {
            acc += dv;
            acc
        })
        .collect();
    let anchor_idx = xs
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1 - x_ref).abs();
            let db = (b.1 - x_ref).abs();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let shift = values[anchor_idx];
    for v in values.iter_mut() {
        *v -= shift;
    }
    // the integrand is the exact derivative of the antiderivative
    let d_lo = g(xs[0])?;
    let d_hi = g(xs[xs.len() - 1])?;
    CubicSpline::new_clamped(xs, values, d_lo, d_hi)
}

struct GammaCurve {
    c: f64,
    k: f64,
    e1: Curve,
    antider: Arc<CubicSpline>,
}

impl CurveFn for GammaCurve {
    fn eval(&self, u: f64) -> Result<f64> {
        Ok(self.c * (-self.k * self.antider.eval(u)?).exp())
    }
    fn deriv(&self, u: f64) -> Result<f64> {
        Ok(-self.k / self.e1.eval(u)? * self.eval(u)?)
    }
    fn deriv2(&self, u: f64) -> Result<f64> {
        let e1 = self.e1.eval(u)?;
        let de1 = self.e1.deriv(u)?;
        Ok(self.eval(u)? * self.k * (self.k + de1) / (e1 * e1))
    }
    fn describe(&self) -> &'static str {
        "coestate gamma"
    }
}

/// Payoff integrand pinned by the first-order condition `ell' = -f' gamma`,
/// anchored so that `ell(u_ref) = 0`.
pub fn fictitious_payoff(
    profile: &RiskProfile,
    f: &Curve,
    gamma: &Curve,
    rho: f64,
    r: f64,
    c: f64,
    u_ref: f64,
) -> Result<Curve> {
    fictitious_payoff_opts(
        profile,
        f,
        gamma,
        rho,
        r,
        c,
        u_ref,
        &DeriveOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn fictitious_payoff_opts(
    profile: &RiskProfile,
    f: &Curve,
    gamma: &Curve,
    rho: f64,
    r: f64,
    c: f64,
    u_ref: f64,
    opts: &DeriveOptions,
) -> Result<Curve> {
    check_gamma_inputs(rho, r, c, u_ref, &profile.domain)?;
    let pricing = matches!(profile.shape, ProfileShape::Linear { pricing: true, .. });

    if !opts.force_quadrature {
        if let Some((k_f, intercept)) = f.as_linear() {
            // gamma = A u^-m (power with zero offset) or a constant
            if let (true, Some((a_coef, neg_m))) = (intercept == 0.0, gamma_power_params(gamma)) {
                let m = -neg_m;
                if (m - 1.0).abs() < 1e-12 {
                    if pricing {
                        return Err(Error::SingularPayoff { exponent: m });
                    }
                    // logarithmic branch: ell = -k_f A ln(u/u_ref)
                    return Ok(Curve::log_law(
                        -k_f * a_coef,
                        k_f * a_coef * u_ref.ln(),
                        gamma.domain(),
                    ));
                }
                let coef = -k_f * a_coef / (1.0 - m);
                return Ok(Curve::power(
                    coef,
                    1.0 - m,
                    -coef * u_ref.powf(1.0 - m),
                    gamma.domain(),
                ));
            }
        }
    }

    // generic quadrature path
    let k = if rho == 0.0 { 0.0 } else { rho / r };
    if pricing {
        if let Some((eta1, _)) = profile.linear_etas() {
            if (k / eta1 - 1.0).abs() < 1e-12 {
                return Err(Error::SingularPayoff { exponent: k / eta1 });
            }
        }
    }
    let window = gamma
        .domain()
        .intersect(&opts.work_window)
        .and_then(|w| w.intersect(&f.domain()))
        .ok_or_else(|| Error::Parameter {
            detail: "payoff window does not meet the component domains".into(),
        })?;
    let integral = antiderivative_on_log_grid(
        |z| Ok(f.eval(z)? / profile.e1.eval(z)? * gamma.eval(z)?),
        window,
        u_ref,
        opts.nodes_per_decade,
    )?;
    let anchor = f.eval(u_ref)? * gamma.eval(u_ref)?;
    Ok(Curve::analytic(
        Arc::new(PayoffCurve {
            f: f.clone(),
            gamma: gamma.clone(),
            k,
            integral: Arc::new(integral),
            anchor,
        }),
        window,
    ))
}

fn gamma_power_params(gamma: &Curve) -> Option<(f64, f64)> {
    if let Some((0.0, value)) = gamma.as_linear() {
        return Some((value, 0.0)); // constant = value * u^0
    }
    gamma.as_power_zero_offset()
}

struct PayoffCurve {
    f: Curve,
    gamma: Curve,
    k: f64,
    integral: Arc<CubicSpline>,
    anchor: f64,
}

impl CurveFn for PayoffCurve {
    fn eval(&self, u: f64) -> Result<f64> {
        // ell(u) = -f gamma - k ∫ (f/e1) gamma, anchored to vanish at u_ref
        Ok(-(self.f.eval(u)? * self.gamma.eval(u)?) + self.anchor
            - self.k * self.integral.eval(u)?)
    }
    fn deriv(&self, u: f64) -> Result<f64> {
        Ok(-(self.f.deriv(u)? * self.gamma.eval(u)?))
    }
    fn deriv2(&self, u: f64) -> Result<f64> {
        Ok(-(self.f.deriv2(u)? * self.gamma.eval(u)? + self.f.deriv(u)? * self.gamma.deriv(u)?))
    }
    fn describe(&self) -> &'static str {
        "payoff integrand"
    }
}

/// Terminal feedback map: solve `L_own(u, ..., u) = B_x(x)` for each stock
/// node by safeguarded Newton, requiring a strictly monotone marginal.
pub fn terminal_strategy(spec: &GameSpec, stock_grid: &[f64]) -> Result<TerminalMap> {
    let bequest = match &spec.horizon {
        Horizon::Finite { bequest, .. } => bequest,
        Horizon::Infinite => {
            return Err(Error::Parameter {
                detail: "terminal strategy requires a finite horizon".into(),
            })
        }
    };
    if stock_grid.len() < 2 {
        return Err(Error::Parameter {
            detail: "stock grid needs at least 2 nodes".into(),
        });
    }

    let lo = spec.rates.lo * (1.0 + 1e-12);
    let hi = spec.rates.hi * (1.0 - 1e-12);
    let marginal = |u: f64| spec.marginal_own_diagonal(u);
    let slope = |u: f64| {
        let p = spec.utility.partials(spec.players, u, u)?;
        Ok(p.l_own_own + (spec.players as f64 - 1.0) * p.l_own_cross)
    };

    // strict monotonicity of the diagonal marginal over the rate window;
    // underflow plateaus at extreme rates are tolerated, opposite slopes
    // are not
    let probes = log_grid(lo, hi, 33);
    let mut values = Vec::with_capacity(probes.len());
    for &u in &probes {
        values.push(marginal(u)?);
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sign = 0.0f64;
    for (w, &u) in values.windows(2).zip(probes.iter().skip(1)) {
        let diff = w[1] - w[0];
        if diff.abs() <= 1e-13 * scale {
            continue;
        }
        if sign != 0.0 && diff.signum() != sign {
            return Err(Error::NonUnique {
                what: "diagonal marginal utility",
                at: u,
            });
        }
        sign = diff.signum();
    }
    if sign == 0.0 {
        return Err(Error::NonUnique {
            what: "diagonal marginal utility",
            at: lo,
        });
    }

    let mut phi_values = Vec::with_capacity(stock_grid.len());
    for &x in stock_grid {
        let target = bequest.deriv(x);
        if !target.is_finite() {
            return Err(Error::Singularity {
                what: "bequest derivative",
                value: x,
                detail: "nonfinite bequest slope",
            });
        }
        let g = |u: f64| Ok(marginal(u)? - target);
        let (g_lo, g_hi) = (g(lo)?, g(hi)?);
        if g_lo * g_hi > 0.0 {
            return Err(Error::NoRoot {
                what: "terminal rate",
                lo,
                hi,
            });
        }
        let root = newton_safeguarded(g, slope, lo, hi, 1e-12, "terminal rate")?;
        phi_values.push(root);
    }

    let increasing = phi_values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = phi_values.windows(2).all(|w| w[1] < w[0]);
    let phi = Curve::from_pchip(Pchip::new(stock_grid.to_vec(), phi_values)?);
    Ok(TerminalMap {
        phi,
        inverse_exists: increasing || decreasing,
    })
}

/// Bequest of the constructed problem:
/// `b(x) = C ∫_{x_ref}^{x} exp(-(rho/r) A(z)) dz` with
/// `A(z) = ∫_{x_ref}^{z} phi_x(w)/e1(phi(w)) dw`, `x_ref` the smallest node.
pub fn fictitious_bequest(
    phi: &TerminalMap,
    profile: &RiskProfile,
    rho: f64,
    r: f64,
    c: f64,
) -> Result<Curve> {
    let domain = phi.phi.domain();
    let x_ref = domain.lo;
    if rho == 0.0 {
        return Ok(Curve::linear(c, -c * x_ref, domain));
    }
    if !(r > 0.0) {
        return Err(Error::Parameter {
            detail: "positive rho requires a positive game discount".into(),
        });
    }
    let k = rho / r;
    let n_nodes = 512usize;
    let xs = lin_grid(domain.lo, domain.hi, n_nodes);
    let tol = QuadTol {
        abs: 1e-13,
        rel: 1e-11,
        max_subdivisions: 1 << 12,
    };

    let inner_integrand = |w: f64| {
        let u = phi.phi.eval(w)?;
        Ok(phi.phi.deriv(w)? / profile.e1.eval(u)?)
    };
    let mut inner_vals = Vec::with_capacity(n_nodes);
    let mut acc = 0.0;
    inner_vals.push(0.0);
    for w in xs.windows(2) {
        acc += integrate(&inner_integrand, w[0], w[1], tol)?.value;
        inner_vals.push(acc);
    }
    let inner = CubicSpline::new_clamped(
        xs.clone(),
        inner_vals,
        inner_integrand(xs[0])?,
        inner_integrand(xs[n_nodes - 1])?,
    )?;

    let outer_integrand = |z: f64| Ok((-k * inner.eval(z)?).exp());
    let mut outer_vals = Vec::with_capacity(n_nodes);
    let mut acc = 0.0;
    outer_vals.push(0.0);
    for w in xs.windows(2) {
        acc += integrate(&outer_integrand, w[0], w[1], tol)?.value;
        outer_vals.push(acc);
    }
    let d_lo = outer_integrand(xs[0])?;
    let d_hi = outer_integrand(xs[n_nodes - 1])?;
    let outer = CubicSpline::new_clamped(xs, outer_vals, d_lo, d_hi)?;

    Ok(Curve::analytic(
        Arc::new(BequestCurve {
            c,
            k,
            inner: Arc::new(inner),
            outer: Arc::new(outer),
        }),
        domain,
    ))
}

struct BequestCurve {
    c: f64,
    k: f64,
    inner: Arc<CubicSpline>,
    outer: Arc<CubicSpline>,
}

impl CurveFn for BequestCurve {
    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.c * self.outer.eval(x)?)
    }
    fn deriv(&self, x: f64) -> Result<f64> {
        Ok(self.c * (-self.k * self.inner.eval(x)?).exp())
    }
    fn deriv2(&self, x: f64) -> Result<f64> {
        Ok(self.deriv(x)? * (-self.k) * self.inner.deriv(x)?)
    }
    fn describe(&self) -> &'static str {
        "bequest"
    }
}

/// Competition index `((N-1)/N) (e1(u) - e-1(u)) / u`: the relative gap
/// between oligopoly extraction `N u` and the fictitious monopoly rate.
pub fn competition_index(profile: &RiskProfile, players: usize, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain {
            what: "rate",
            value: u,
            lo: f64::MIN_POSITIVE,
            hi: profile.domain.hi,
        });
    }
    profile.domain.check("rate", u)?;
    let n = players as f64;
    Ok((n - 1.0) / n * (profile.e1.eval(u)? - profile.e_minus_1.eval(u)?) / u)
}

/// Full construction: risk profile, dynamics, coestate, payoff and (for
/// finite horizons) terminal map and bequest, validated before returning.
pub fn derive_monopoly(spec: &GameSpec, opts: &DeriveOptions) -> Result<MonopolyProblem> {
    spec.validate()?;
    let r = spec.discount;
    let rho = opts.rho.unwrap_or(r);
    if !spec.horizon.is_finite() && !(rho > 0.0) {
        return Err(Error::Parameter {
            detail: "infinite horizon requires rho > 0".into(),
        });
    }

    let profile =
        crate::game_model::symmetric_reduce(spec).map_err(|e| annotate(e, "symmetric_reduce"))?;
    let f = fictitious_dynamics(&profile, spec.players).map_err(|e| annotate(e, "dynamics"))?;

    let build = |c: f64| -> Result<(Curve, Curve)> {
        let gamma = coestate_gamma_opts(&profile, rho, r, c, opts.u_ref, opts)
            .map_err(|e| annotate(e, "coestate"))?;
        let ell = fictitious_payoff_opts(&profile, &f, &gamma, rho, r, c, opts.u_ref, opts)
            .map_err(|e| annotate(e, "payoff"))?;
        Ok((gamma, ell))
    };

    let (gamma, ell) = build(opts.c)?;
    // keep the payoff increasing: flip the constant if ell' < 0 mid-window
    let window = effective_window(&ell, &opts.check_window);
    let mid = (window.lo * window.hi).sqrt();
    let (c, gamma, ell) = if ell.deriv(mid)? < 0.0 {
        let flipped = -opts.c;
        let (g2, l2) = build(flipped)?;
        (flipped, g2, l2)
    } else {
        (opts.c, gamma, ell)
    };

    let bequest = match &spec.horizon {
        Horizon::Infinite => None,
        Horizon::Finite { .. } => {
            let grid = lin_grid(opts.stock_window.lo, opts.stock_window.hi, opts.stock_nodes);
            let phi = terminal_strategy(spec, &grid).map_err(|e| annotate(e, "terminal map"))?;
            Some(
                fictitious_bequest(&phi, &profile, rho, r, c)
                    .map_err(|e| annotate(e, "bequest"))?,
            )
        }
    };

    let oc = MonopolyProblem {
        ell,
        rho,
        f,
        bequest,
        c,
        gamma,
        u_ref: opts.u_ref,
        source_discount: r,
    };

    validate_identities(&profile, &oc, spec.players, &opts.check_window)?;
    Ok(oc)
}

fn annotate(e: Error, stage: &'static str) -> Error {
    Error::Validation {
        stage,
        detail: e.to_string(),
    }
}

fn effective_window(curve: &Curve, requested: &Interval) -> Interval {
    curve
        .domain()
        .intersect(requested)
        .unwrap_or_else(|| curve.domain())
}

// Identification and first-order-condition identities, checked on a grid
// interior to every component's domain.
fn validate_identities(
    profile: &RiskProfile,
    oc: &MonopolyProblem,
    players: usize,
    check_window: &Interval,
) -> Result<()> {
    let window = oc
        .gamma
        .domain()
        .intersect(&oc.ell.domain())
        .and_then(|w| w.intersect(check_window))
        .ok_or_else(|| Error::Validation {
            stage: "validate",
            detail: "empty validation window".into(),
        })?;
    let closed = oc.provenance() == Provenance::ClosedForm;
    let tol_ident = if closed { 1e-8 } else { 1e-5 };
    let n = players as f64;
    let r = oc.source_discount;

    for &u in log_grid(window.lo, window.hi, 50).iter() {
        let e1 = profile.e1.eval(u)?;
        let em1 = profile.e_minus_1.eval(u)?;
        let dyn_defect = (oc.f.eval(u)? + n * u - (n - 1.0) * (e1 - em1)).abs();
        if dyn_defect > tol_ident {
            return Err(Error::Validation {
                stage: "identification",
                detail: format!("dynamics defect {dyn_defect:.3e} at u = {u}"),
            });
        }
        let gamma_defect = if oc.rho == 0.0 {
            // identity in ODE form: rho*gamma = -r e1 gamma'
            (r * e1 * oc.gamma.deriv(u)?).abs() / oc.gamma.eval(u)?.abs().max(1e-300)
        } else {
            let g = oc.gamma.eval(u)?;
            let dg = oc.gamma.deriv(u)?;
            if dg == 0.0 {
                return Err(Error::Singularity {
                    what: "gamma'",
                    value: u,
                    detail: "vanishing coestate derivative with positive rho",
                });
            }
            (oc.rho * g / dg + r * e1).abs()
        };
        if gamma_defect > tol_ident {
            return Err(Error::Validation {
                stage: "identification",
                detail: format!("coestate defect {gamma_defect:.3e} at u = {u}"),
            });
        }
    }

    // FOC: ell'(u) = -f'(u) gamma(u), relative sup over interior points
    for &u in log_grid(window.lo * 1.05, window.hi / 1.05, 20).iter() {
        let lhs = oc.ell.deriv(u)?;
        let rhs = -(oc.f.deriv(u)? * oc.gamma.eval(u)?);
        let denom = lhs.abs().max(rhs.abs()).max(1e-300);
        if ((lhs - rhs) / denom).abs() > 1e-6 {
            return Err(Error::Validation {
                stage: "first-order condition",
                detail: format!(
                    "relative defect {:.3e} at u = {u}",
                    ((lhs - rhs) / denom).abs()
                ),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{symmetric_reduce, GameSpec, Horizon, SmoothFn, UtilityFamily};
    use crate::numerics::fd;
    use approx::assert_relative_eq;

    fn cd_game(alpha: f64, beta: f64, players: usize, r: f64) -> GameSpec {
        GameSpec::new(
            players,
            UtilityFamily::CobbDouglas { alpha, beta },
            r,
            Horizon::Infinite,
        )
        .unwrap()
    }

    fn pricing_game(q: f64, players: usize, r: f64) -> GameSpec {
        GameSpec::new(
            players,
            UtilityFamily::IsoelasticPricing {
                scale: 1.0,
                elasticity: q,
                cost: None,
            },
            r,
            Horizon::Infinite,
        )
        .unwrap()
    }

    #[test]
    fn dynamics_single_player_is_own_extraction() {
        let profile = symmetric_reduce(&cd_game(0.5, 0.9, 1, 0.05)).unwrap();
        let f = fictitious_dynamics(&profile, 1).unwrap();
        for &u in &[0.1, 1.0, 7.0] {
            assert_relative_eq!(f.eval(u).unwrap(), -u, epsilon = 1e-14);
        }
    }

    #[test]
    fn dynamics_pricing_slope() {
        // k2 = -N + (N-1)(1/q - k1) with k1 the cross-index slope
        let profile = symmetric_reduce(&pricing_game(0.5, 2, 0.05)).unwrap();
        let (eta1, eta2) = profile.linear_etas().unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        let k2 = -2.0 + (eta1 - eta2);
        assert_relative_eq!(f.eval(3.0).unwrap(), k2 * 3.0, epsilon = 1e-13);
    }

    #[test]
    fn dynamics_cobb_douglas_example() {
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, 0.05)).unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        // eta1 = 2.5, eta2 = 1.25: slope -2 + 1.25 = -0.75
        assert_relative_eq!(f.eval(1.0).unwrap(), -0.75, epsilon = 1e-13);
        assert_relative_eq!(f.deriv(4.2).unwrap(), -0.75, epsilon = 1e-13);
    }

    #[test]
    fn coestate_zero_rho_is_constant() {
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, 0.05)).unwrap();
        let gamma = coestate_gamma(&profile, 0.0, 0.05, 3.0, 1.0).unwrap();
        for &u in &[0.2, 1.0, 9.0] {
            assert_eq!(gamma.eval(u).unwrap(), 3.0);
        }
    }

    #[test]
    fn coestate_power_law_exponent() {
        // gamma = C u^-m with m = rho/(eta1 r)
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, 0.05)).unwrap();
        let gamma = coestate_gamma(&profile, 0.05, 0.05, 1.0, 1.0).unwrap();
        let m = 0.05 / (2.5 * 0.05);
        for &u in &[0.5, 1.0, 2.0] {
            assert_relative_eq!(gamma.eval(u).unwrap(), u.powf(-m), epsilon = 1e-14);
        }
    }

    #[test]
    fn coestate_identity_from_tabulated_differences() {
        // quadrature-built gamma: differentiate numerically and check
        // rho gamma / gamma' = -r e1 at a few rates
        let (r, rho) = (0.05, 0.04);
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, r)).unwrap();
        let mut opts = DeriveOptions::default();
        opts.force_quadrature = true;
        let gamma = coestate_gamma_opts(&profile, rho, r, 1.0, 1.0, &opts).unwrap();
        for &u in &[0.5, 1.0, 2.0] {
            let dg = fd::deriv_central4(|z| gamma.eval(z), u, 3e-3 * u).unwrap();
            let lhs = rho * gamma.eval(u).unwrap() / dg;
            let rhs = -r * profile.e1.eval(u).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
        }
    }

    #[test]
    fn payoff_pricing_closed_form_exponent() {
        // ell is a power law with exponent 1 - q rho / r
        let (q, r, rho) = (0.5, 0.05, 0.025);
        let profile = symmetric_reduce(&pricing_game(q, 2, r)).unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        let gamma = coestate_gamma(&profile, rho, r, 1.0, 1.0).unwrap();
        let ell = fictitious_payoff(&profile, &f, &gamma, rho, r, 1.0, 1.0).unwrap();
        let expo = 1.0 - q * rho / r;
        let scale = ell.deriv(1.0).unwrap();
        for &u in &[0.3f64, 1.0, 4.0] {
            assert_relative_eq!(
                ell.deriv(u).unwrap(),
                scale * u.powf(expo - 1.0),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn payoff_zero_rho_linear_in_dynamics() {
        // with a constant coestate the payoff slope is -C f'(u)
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, 0.05)).unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        let gamma = coestate_gamma(&profile, 0.0, 0.05, 1.0, 1.0).unwrap();
        let ell = fictitious_payoff(&profile, &f, &gamma, 0.0, 0.05, 1.0, 1.0).unwrap();
        let (slope, _) = ell.as_linear().unwrap();
        assert_relative_eq!(slope, 0.75, epsilon = 1e-13);
    }

    #[test]
    fn payoff_quadrature_matches_closed_form() {
        let (r, rho) = (0.05, 0.03);
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, r)).unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        let closed_gamma = coestate_gamma(&profile, rho, r, 1.0, 1.0).unwrap();
        let closed = fictitious_payoff(&profile, &f, &closed_gamma, rho, r, 1.0, 1.0).unwrap();
        let mut opts = DeriveOptions::default();
        opts.force_quadrature = true;
        let quad_gamma = coestate_gamma_opts(&profile, rho, r, 1.0, 1.0, &opts).unwrap();
        let quad =
            fictitious_payoff_opts(&profile, &f, &quad_gamma, rho, r, 1.0, 1.0, &opts).unwrap();
        for &u in crate::numerics::log_grid(0.05, 20.0, 23).iter() {
            assert_relative_eq!(
                quad.eval(u).unwrap(),
                closed.eval(u).unwrap(),
                epsilon = 1e-9,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn payoff_foc_by_differences() {
        let (r, rho) = (0.05, 0.05);
        let profile = symmetric_reduce(&cd_game(0.7, 0.9, 3, r)).unwrap();
        let f = fictitious_dynamics(&profile, 3).unwrap();
        let mut opts = DeriveOptions::default();
        opts.force_quadrature = true;
        let gamma = coestate_gamma_opts(&profile, rho, r, 1.0, 1.0, &opts).unwrap();
        let ell = fictitious_payoff_opts(&profile, &f, &gamma, rho, r, 1.0, 1.0, &opts).unwrap();
        for &u in crate::numerics::log_grid(0.1, 10.0, 20).iter() {
            let lhs = fd::deriv_central4(|z| ell.eval(z), u, 1e-3 * u).unwrap();
            let rhs = -(f.deriv(u).unwrap() * gamma.eval(u).unwrap());
            assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        }
    }

    #[test]
    fn pricing_unit_exponent_is_singular() {
        let (q, r) = (0.5, 0.05);
        let rho = r / q; // q rho / r = 1
        let profile = symmetric_reduce(&pricing_game(q, 2, r)).unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        let gamma = coestate_gamma(&profile, rho, r, 1.0, 1.0).unwrap();
        assert!(matches!(
            fictitious_payoff(&profile, &f, &gamma, rho, r, 1.0, 1.0),
            Err(Error::SingularPayoff { .. })
        ));
    }

    #[test]
    fn cobb_douglas_log_branch_allowed() {
        // m = 1 keeps a well-defined logarithmic payoff outside pricing
        let r = 0.05;
        let spec = cd_game(0.6, 0.8, 2, r);
        let profile = symmetric_reduce(&spec).unwrap();
        let f = fictitious_dynamics(&profile, 2).unwrap();
        let rho = 2.5 * r; // m = rho/(eta1 r) = 1
        let gamma = coestate_gamma(&profile, rho, r, 1.0, 1.0).unwrap();
        for &u in &[0.5, 2.0] {
            assert_relative_eq!(gamma.eval(u).unwrap(), 1.0 / u, epsilon = 1e-13);
        }
        let ell = fictitious_payoff(&profile, &f, &gamma, rho, r, 1.0, 1.0).unwrap();
        let lhs = ell.deriv(2.0).unwrap();
        assert_relative_eq!(
            lhs,
            -(f.deriv(2.0).unwrap() * gamma.eval(2.0).unwrap()),
            epsilon = 1e-13
        );
    }

    fn finite_cd_game(
        alpha: f64,
        beta: f64,
        players: usize,
        r: f64,
        bequest: SmoothFn,
    ) -> GameSpec {
        GameSpec::new(
            players,
            UtilityFamily::CobbDouglas { alpha, beta },
            r,
            Horizon::Finite {
                t_end: 1.0,
                bequest,
            },
        )
        .unwrap()
    }

    #[test]
    fn terminal_map_crra_bequest_is_identity() {
        // no externality (beta = 1), bequest slope x^-alpha: phi(x) = x
        let alpha = 0.6;
        let spec = finite_cd_game(alpha, 1.0, 2, 0.05, SmoothFn::crra(alpha));
        let grid = lin_grid(0.5, 4.0, 36);
        let map = terminal_strategy(&spec, &grid).unwrap();
        assert!(map.inverse_exists);
        for &x in &[0.7, 1.3, 3.1] {
            assert_relative_eq!(map.phi.eval(x).unwrap(), x, max_relative = 1e-10);
        }
    }

    #[test]
    fn terminal_map_constant_bequest_slope() {
        // B_x = c: marginal u^-alpha = c gives a stock-independent rate
        let alpha = 0.5;
        let c = 0.3f64;
        let spec = finite_cd_game(alpha, 1.0, 2, 0.05, SmoothFn::linear(c));
        let grid = lin_grid(0.5, 4.0, 16);
        let map = terminal_strategy(&spec, &grid).unwrap();
        let expect = c.powf(-1.0 / alpha);
        for &x in &[0.6, 2.0, 3.9] {
            assert_relative_eq!(map.phi.eval(x).unwrap(), expect, max_relative = 1e-11);
        }
        assert!(!map.inverse_exists);
    }

    #[test]
    fn terminal_map_cara_closed_form() {
        // alpha e^(-alpha phi) = B_x(x) inverts in closed form
        let alpha = 1.3;
        let own = SmoothFn::cara(alpha);
        let bequest = SmoothFn::exp_bequest(1.0, 1.0); // B_x = e^-x
        let spec = GameSpec::new(
            2,
            UtilityFamily::AdditiveSeparable { own, cross: None },
            0.05,
            Horizon::Finite {
                t_end: 1.0,
                bequest,
            },
        )
        .unwrap();
        let grid = lin_grid(0.5, 3.0, 26);
        let map = terminal_strategy(&spec, &grid).unwrap();
        for &x in &[0.8, 1.5, 2.5] {
            let expect = -(1.0f64 / alpha) * ((-x as f64).exp() / alpha).ln();
            assert_relative_eq!(map.phi.eval(x).unwrap(), expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn terminal_map_unreachable_bequest_slope() {
        // a bequest slope above the marginal's range has no terminal rate
        let alpha = 0.6;
        let spec = finite_cd_game(alpha, 1.0, 2, 0.05, SmoothFn::linear(1e12));
        let grid = lin_grid(0.5, 4.0, 8);
        assert!(matches!(
            terminal_strategy(&spec, &grid),
            Err(Error::NoRoot { .. })
        ));
    }

    #[test]
    fn bequest_zero_rho_is_affine_with_slope_c() {
        let alpha = 0.6;
        let spec = finite_cd_game(alpha, 1.0, 2, 0.05, SmoothFn::crra(alpha));
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.5, 4.0, 41);
        let map = terminal_strategy(&spec, &grid).unwrap();
        let b = fictitious_bequest(&map, &profile, 0.0, 0.05, 2.0).unwrap();
        for &x in &[0.6, 1.8, 3.5] {
            assert_relative_eq!(b.eval(x).unwrap(), 2.0 * (x - 0.5), epsilon = 1e-12);
            assert_relative_eq!(b.deriv(x).unwrap(), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn bequest_slope_matches_analytic_inner_integral() {
        // phi(x) = x, e1 = eta1 u: inner integrand 1/(eta1 x), so
        // b_x = C (x/x_ref)^(-rho/(eta1 r))
        let (alpha, r, rho) = (0.6, 0.05, 0.04);
        let spec = finite_cd_game(alpha, 1.0, 2, r, SmoothFn::crra(alpha));
        let profile = symmetric_reduce(&spec).unwrap();
        let eta1 = 1.0 / alpha;
        let grid = lin_grid(0.4, 4.0, 181);
        let map = terminal_strategy(&spec, &grid).unwrap();
        let b = fictitious_bequest(&map, &profile, rho, r, 1.0).unwrap();
        let expo = -rho / (eta1 * r);
        for &x in &[0.5, 1.0, 2.0] {
            assert_relative_eq!(
                b.deriv(x).unwrap(),
                (x / 0.4f64).powf(expo),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn competition_index_closed_forms() {
        // equal curvatures null the index
        let profile = symmetric_reduce(&cd_game(0.7, 0.7, 2, 0.05)).unwrap();
        assert!(competition_index(&profile, 2, 1.0).unwrap().abs() <= 1e-12);

        // no externality: (N-1)/(N alpha)
        let profile = symmetric_reduce(&cd_game(0.5, 1.0, 3, 0.05)).unwrap();
        assert_relative_eq!(
            competition_index(&profile, 3, 1.0).unwrap(),
            2.0 / (3.0 * 0.5),
            epsilon = 1e-13
        );

        // general duopoly value from the index curves themselves
        let profile = symmetric_reduce(&cd_game(0.6, 0.8, 2, 0.05)).unwrap();
        let (eta1, eta2) = profile.linear_etas().unwrap();
        assert_relative_eq!(
            competition_index(&profile, 2, 2.7).unwrap(),
            0.5 * (eta1 - eta2),
            epsilon = 1e-13
        );
    }

    #[test]
    fn derive_full_pipeline_hara_exponent() {
        let (r, rho) = (0.05, 0.05);
        let spec = cd_game(0.6, 0.8, 2, r);
        let oc = derive_monopoly(&spec, &DeriveOptions::default()).unwrap();
        assert_eq!(oc.rho, rho);
        // gamma = u^-m with m = rho/(eta1 r) = 0.4, so ell ~ u^0.6
        let m = rho / (2.5 * r);
        let ratio = oc.ell.deriv(2.0).unwrap() / oc.ell.deriv(1.0).unwrap();
        assert_relative_eq!(ratio, 2.0f64.powf(-m), epsilon = 1e-12);
    }

    #[test]
    fn derive_rho_equal_r_with_unit_eta1_gives_reciprocal_gamma() {
        // eta1 = 1 needs -alpha + (N-1)(1-beta) = -1
        let spec = cd_game(0.5, 1.5, 2, 0.05);
        let profile = symmetric_reduce(&spec).unwrap();
        let (eta1, _) = profile.linear_etas().unwrap();
        assert_relative_eq!(eta1, 1.0, epsilon = 1e-14);
        let oc = derive_monopoly(&spec, &DeriveOptions::default()).unwrap();
        for &u in &[0.5, 2.0] {
            assert_relative_eq!(oc.gamma.eval(u).unwrap(), oc.c / u, max_relative = 1e-12);
        }
    }

    #[test]
    fn derive_scaling_in_c() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let base = derive_monopoly(&spec, &DeriveOptions::default()).unwrap();
        let mut opts = DeriveOptions::default();
        opts.c = 2.0 * base.c;
        let doubled = derive_monopoly(&spec, &opts).unwrap();
        let profile = symmetric_reduce(&spec).unwrap();
        for &u in &[0.3, 1.0, 5.0] {
            assert_relative_eq!(
                doubled.gamma.eval(u).unwrap(),
                2.0 * base.gamma.eval(u).unwrap(),
                epsilon = 1e-13
            );
            assert_relative_eq!(
                doubled.ell.eval(u).unwrap(),
                2.0 * base.ell.eval(u).unwrap(),
                epsilon = 1e-13
            );
            assert_relative_eq!(
                doubled.f.eval(u).unwrap(),
                base.f.eval(u).unwrap(),
                epsilon = 1e-15
            );
            assert_relative_eq!(
                competition_index(&profile, 2, u).unwrap(),
                0.5 * 1.25,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn derive_single_player_reduces_to_monopoly() {
        let spec = cd_game(0.5, 0.9, 1, 0.05);
        let oc = derive_monopoly(&spec, &DeriveOptions::default()).unwrap();
        for &u in &[0.2, 1.0, 3.0] {
            assert_relative_eq!(oc.f.eval(u).unwrap(), -u, epsilon = 1e-14);
        }
        let profile = symmetric_reduce(&spec).unwrap();
        assert_eq!(competition_index(&profile, 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn derive_increasing_payoff_sign_convention() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let oc = derive_monopoly(&spec, &DeriveOptions::default()).unwrap();
        assert!(oc.ell.deriv(1.0).unwrap() > 0.0);
    }

    #[test]
    fn derive_infinite_horizon_requires_positive_rho() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let mut opts = DeriveOptions::default();
        opts.rho = Some(0.0);
        assert!(matches!(
            derive_monopoly(&spec, &opts),
            Err(Error::Parameter { .. })
        ));
    }
}
