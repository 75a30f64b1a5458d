//! Symmetric Markov-perfect feedback solvers.
//!
//! The symmetric feedback `u(t, x)` of the extraction game satisfies the
//! quasilinear PDE
//!
//! ```text
//! u_t + a(u) u_x = -r e1(u),    a(u) = -N u + (N-1)(e1(u) - e-1(u))
//! ```
//!
//! Infinite-horizon stationary strategies drop `u_t` and integrate an ODE
//! in the stock; finite-horizon strategies are transported backward from
//! the terminal map along characteristics. A residual evaluator provides
//! the diagnostic norms used by the verifier.

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::game_model::{GameSpec, ProfileShape, RiskProfile};
use crate::numerics::fd::grid_deriv4;
use crate::numerics::interp::Pchip;
use crate::numerics::ode::{integrate_path, OdeTol};
use crate::symmetric_equiv::{fictitious_dynamics, TerminalMap};

/// How a strategy was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverProvenance {
    Ansatz,
    Ode,
    Characteristics,
}

/// A Markov feedback strategy on a grid.
#[derive(Debug, Clone)]
pub enum FeedbackStrategy {
    Stationary {
        u_of_x: Curve,
        grid: Vec<f64>,
        values: Vec<f64>,
        meta: SolverProvenance,
    },
    TimeDependent {
        t_grid: Vec<f64>,
        x_grid: Vec<f64>,
        /// `values[k][i]` is the rate at `(t_grid[k], x_grid[i])`.
        values: Vec<Vec<f64>>,
        meta: SolverProvenance,
    },
}

impl FeedbackStrategy {
    /// Evaluate the strategy; stationary strategies ignore `t`.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        match self {
            FeedbackStrategy::Stationary { u_of_x, .. } => u_of_x.eval(x),
            FeedbackStrategy::TimeDependent {
                t_grid,
                x_grid,
                values,
                ..
            } => {
                let n_t = t_grid.len();
                if t < t_grid[0] - 1e-12 || t > t_grid[n_t - 1] + 1e-12 {
                    return Err(Error::Domain {
                        what: "time",
                        value: t,
                        lo: t_grid[0],
                        hi: t_grid[n_t - 1],
                    });
                }
                let k = t_grid.partition_point(|&v| v <= t).clamp(1, n_t - 1) - 1;
                let row = |idx: usize| -> Result<f64> {
                    Pchip::new(x_grid.clone(), values[idx].clone())?.eval(x)
                };
                if (t - t_grid[k]).abs() < 1e-14 {
                    return row(k);
                }
                let w = (t - t_grid[k]) / (t_grid[k + 1] - t_grid[k]);
                Ok((1.0 - w) * row(k)? + w * row(k + 1)?)
            }
        }
    }

    pub fn meta(&self) -> SolverProvenance {
        match self {
            FeedbackStrategy::Stationary { meta, .. } => *meta,
            FeedbackStrategy::TimeDependent { meta, .. } => *meta,
        }
    }
}

/// Linear-feedback slope for exactly-linear risk profiles:
/// `u(x) = c x` with `c = r eta1 / (N - (N-1)(eta1 - eta2))`.
pub fn linear_ansatz_slope(r: f64, eta1: f64, eta2: f64, players: usize) -> Result<f64> {
    let n = players as f64;
    let denom = n - (n - 1.0) * (eta1 - eta2);
    if denom.abs() < 1e-14 {
        return Err(Error::Degenerate {
            detail: "linear ansatz denominator N - (N-1)(eta1 - eta2) vanishes".into(),
        });
    }
    Ok(r * eta1 / denom)
}

/// Stationary feedback for infinite-horizon games.
///
/// Integrates `a(u) u'(x) = -r e1(u)` across `x_grid`, seeding from the
/// linear ansatz for exactly linear profiles and from a shooting bracket
/// on the initial slope otherwise. A zero discount degenerates the ODE to
/// `u' = 0`; the seed constant is returned.
pub fn stationary_mpne(
    spec: &GameSpec,
    profile: &RiskProfile,
    x_grid: &[f64],
) -> Result<FeedbackStrategy> {
    if spec.horizon.is_finite() {
        return Err(Error::Parameter {
            detail: "stationary solve requires an infinite horizon".into(),
        });
    }
    if x_grid.len() < 2 {
        return Err(Error::Parameter {
            detail: "stock grid needs at least 2 nodes".into(),
        });
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) || x_grid[0] < 0.0 {
        return Err(Error::Parameter {
            detail: "stock grid must be strictly increasing and nonnegative".into(),
        });
    }
    let r = spec.discount;
    let a = fictitious_dynamics(profile, spec.players)?;

    // grids may start at zero where the rate itself vanishes
    let (x0, start_idx) = if x_grid[0] > 0.0 {
        (x_grid[0], 0usize)
    } else {
        (x_grid[1], 1usize)
    };

    let (seed_slope, meta) = match profile.shape {
        ProfileShape::Linear { eta1, eta2, .. } => (
            linear_ansatz_slope(r, eta1, eta2, spec.players)?,
            SolverProvenance::Ode,
        ),
        _ => (
            shoot_initial_slope(&a, profile, r, x0)?,
            SolverProvenance::Ode,
        ),
    };

    let mut values = vec![0.0; x_grid.len()];
    if r == 0.0 {
        let seed = seed_slope * x0;
        for v in values.iter_mut() {
            *v = seed;
        }
        return finish_stationary(x_grid, values, SolverProvenance::Ansatz);
    }

    let u0 = seed_slope * x0;
    let outputs: Vec<f64> = x_grid[start_idx..].to_vec();
    let states = integrate_path(
        |x, y: &[f64; 1]| stationary_rhs(&a, profile, r, x, y[0]).map(|v| [v]),
        x0,
        [u0],
        &outputs,
        OdeTol::default(),
    )?;
    for (slot, state) in values[start_idx..].iter_mut().zip(&states) {
        *slot = state[0];
    }
    if values.iter().any(|&v| v < -1e-12) {
        return Err(Error::BlowUp {
            x: x_grid[0],
            u: *values
                .iter()
                .min_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap(),
            lo: 0.0,
            hi: profile.domain.hi,
        });
    }
    finish_stationary(x_grid, values, meta)
}

fn finish_stationary(
    x_grid: &[f64],
    values: Vec<f64>,
    meta: SolverProvenance,
) -> Result<FeedbackStrategy> {
    let u_of_x = Curve::from_pchip(Pchip::new(x_grid.to_vec(), values.clone())?);
    Ok(FeedbackStrategy::Stationary {
        u_of_x,
        grid: x_grid.to_vec(),
        values,
        meta,
    })
}

fn stationary_rhs(a: &Curve, profile: &RiskProfile, r: f64, x: f64, u: f64) -> Result<f64> {
    let remap = |e: Error| match e {
        Error::Domain { lo, hi, .. } => Error::BlowUp { x, u, lo, hi },
        other => other,
    };
    let adv = a.eval(u).map_err(remap)?;
    let src = -r * profile.e1.eval(u).map_err(remap)?;
    if adv.abs() < 1e-300 {
        if src.abs() < 1e-300 {
            return Ok(0.0);
        }
        return Err(Error::Stall { x, u });
    }
    Ok(src / adv)
}

// Bisection on the initial slope: integrate back to x0/2 and demand the
// proportional passage u(x0/2) = s x0 / 2, a discrete stand-in for the
// boundary condition u(0) = 0.
fn shoot_initial_slope(a: &Curve, profile: &RiskProfile, r: f64, x0: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let residual = |s: f64| -> Result<f64> {
        let u0 = s * x0;
        let states = integrate_path(
            |x, y: &[f64; 1]| stationary_rhs(a, profile, r, x, y[0]).map(|v| [v]),
            x0,
            [u0],
            &[0.5 * x0],
            OdeTol::default(),
        )?;
        Ok(states[0][0] - 0.5 * s * x0)
    };
    let slopes = crate::numerics::log_grid(1e-4, 1e4, 49);
    let mut prev: Option<(f64, f64)> = None;
    for &s in &slopes {
        match residual(s) {
            Ok(g) => {
                if let Some((s_prev, g_prev)) = prev {
                    if g_prev * g <= 0.0 {
                        return crate::numerics::root::bisect(
                            residual,
                            s_prev,
                            s,
                            1e-12,
                            "initial slope",
                        );
                    }
                }
                prev = Some((s, g));
            }
            Err(_) => prev = None, // slope outside the evaluable region
        }
    }
    Err(Error::NoRoot {
        what: "initial slope",
        lo: 1e-4,
        hi: 1e4,
    })
}

/// Finite-horizon feedback by backward characteristics from the terminal
/// map: trajectories `dx/ds = a(u)`, `du/ds = -r e1(u)` are launched from
/// `(T, x_j, phi(x_j))` and carried to each requested time; values return
/// to the grid by monotone interpolation in the foot-point coordinate.
pub fn characteristics_mpne(
    spec: &GameSpec,
    profile: &RiskProfile,
    phi: &TerminalMap,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<FeedbackStrategy> {
    let t_end = match &spec.horizon {
        crate::game_model::Horizon::Finite { t_end, .. } => *t_end,
        crate::game_model::Horizon::Infinite => {
            return Err(Error::Parameter {
                detail: "characteristics require a finite horizon".into(),
            })
        }
    };
    if t_grid.len() < 2 || x_grid.len() < 2 {
        return Err(Error::Parameter {
            detail: "time and stock grids need >= 2 nodes".into(),
        });
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter {
            detail: "grids must be strictly increasing".into(),
        });
    }
    if t_grid[0] < 0.0 || t_grid[t_grid.len() - 1] > t_end + 1e-12 {
        return Err(Error::Parameter {
            detail: format!("time grid must lie within [0, {t_end}]"),
        });
    }
    let r = spec.discount;
    let a = fictitious_dynamics(profile, spec.players)?;

    // launch from the terminal-map nodes plus every requested stock node;
    // the scatter-back interpolation error scales with the cube of the
    // foot spacing, so the fan is kept dense
    let phi_dom = phi.phi.domain();
    let mut launch: Vec<f64> = x_grid
        .iter()
        .copied()
        .filter(|&x| phi_dom.contains(x))
        .collect();
    let fan = (8 * x_grid.len()).clamp(2048, 4096);
    let phi_xs = crate::numerics::lin_grid(phi_dom.lo, phi_dom.hi, fan);
    launch.extend_from_slice(&phi_xs);
    launch.sort_by(|p, q| p.partial_cmp(q).unwrap());
    launch.dedup_by(|p, q| (*p - *q).abs() < 1e-13 * q.abs().max(1.0));

    // backward sweep: outputs descend from t_end
    let mut outputs: Vec<f64> = t_grid.to_vec();
    outputs.reverse();

    // feet[k][j] and vals[k][j] indexed by reversed time then launch node
    let mut feet = vec![Vec::with_capacity(launch.len()); outputs.len()];
    let mut vals = vec![Vec::with_capacity(launch.len()); outputs.len()];
    for &xj in &launch {
        let uj = phi.phi.eval(xj)?;
        let states = integrate_path(
            |_, y: &[f64; 2]| {
                let adv = a.eval(y[1])?;
                let src = -r * profile.e1.eval(y[1])?;
                Ok([adv, src])
            },
            t_end,
            [xj, uj],
            &outputs,
            OdeTol::default(),
        )?;
        for (k, st) in states.iter().enumerate() {
            feet[k].push(st[0]);
            vals[k].push(st[1]);
        }
    }

    let mut values = vec![Vec::new(); t_grid.len()];
    for (k_rev, t) in outputs.iter().enumerate() {
        let k = t_grid.len() - 1 - k_rev;
        // crossing characteristics: foot points lose strict monotonicity
        for (j, w) in feet[k_rev].windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Shock {
                    t: *t,
                    x: 0.5 * (w[0] + w[1]).max(feet[k_rev][j]),
                });
            }
        }
        let interp = Pchip::new(feet[k_rev].clone(), vals[k_rev].clone())?;
        let mut row = Vec::with_capacity(x_grid.len());
        for &x in x_grid {
            row.push(interp.eval(x)?);
        }
        values[k] = row;
    }

    for row in &values {
        if row.iter().any(|&v| v < -1e-12) {
            return Err(Error::Parameter {
                detail: "negative extraction rate in transported solution".into(),
            });
        }
    }

    Ok(FeedbackStrategy::TimeDependent {
        t_grid: t_grid.to_vec(),
        x_grid: x_grid.to_vec(),
        values,
        meta: SolverProvenance::Characteristics,
    })
}

/// Residual norms of a strategy against the game's feedback PDE.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub sup: f64,
    pub l2: f64,
    /// `(t, x)` of the worst node (t = 0 for stationary strategies).
    pub worst: (f64, f64),
    /// Grid too short or non-uniform for the stencils; norms are NaN.
    pub degenerate: bool,
}

impl ResidualReport {
    fn degenerate() -> Self {
        Self {
            sup: f64::NAN,
            l2: f64::NAN,
            worst: (f64::NAN, f64::NAN),
            degenerate: true,
        }
    }
}

fn uniform_step(grid: &[f64]) -> Option<f64> {
    let h = grid[1] - grid[0];
    let ok = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() < 1e-9 * h.abs().max(1e-12));
    ok.then_some(h)
}

/// Evaluate `u_t + a(u) u_x + r e1(u)` over the strategy grid with
/// fourth-order differences (one-sided at the edges).
pub fn game_pde_residual(
    strategy: &FeedbackStrategy,
    spec: &GameSpec,
    profile: &RiskProfile,
) -> Result<ResidualReport> {
    let r = spec.discount;
    let a = fictitious_dynamics(profile, spec.players)?;
    match strategy {
        FeedbackStrategy::Stationary { grid, values, .. } => {
            let Some(h) = uniform_step(grid) else {
                return Ok(ResidualReport::degenerate());
            };
            let Some(du) = grid_deriv4(values, h) else {
                return Ok(ResidualReport::degenerate());
            };
            let mut sup = 0.0f64;
            let mut sum_sq = 0.0;
            let mut count = 0usize;
            let mut worst = (0.0, grid[0]);
            for i in interior(grid.len()) {
                let u = values[i];
                let res = a.eval(u)? * du[i] + r * profile.e1.eval(u)?;
                sum_sq += res * res;
                count += 1;
                if res.abs() > sup {
                    sup = res.abs();
                    worst = (0.0, grid[i]);
                }
            }
            Ok(ResidualReport {
                sup,
                l2: (sum_sq / count as f64).sqrt(),
                worst,
                degenerate: false,
            })
        }
        FeedbackStrategy::TimeDependent {
            t_grid,
            x_grid,
            values,
            ..
        } => {
            let (Some(ht), Some(hx)) = (uniform_step(t_grid), uniform_step(x_grid)) else {
                return Ok(ResidualReport::degenerate());
            };
            if t_grid.len() < 5 || x_grid.len() < 5 {
                return Ok(ResidualReport::degenerate());
            }
            let mut sup = 0.0f64;
            let mut sum_sq = 0.0;
            let mut count = 0usize;
            let mut worst = (t_grid[0], x_grid[0]);
            // u_x row by row
            let dux: Vec<Vec<f64>> = values
                .iter()
                .map(|row| grid_deriv4(row, hx).expect("length checked"))
                .collect();
            // u_t column by column
            for i in interior(x_grid.len()) {
                let col: Vec<f64> = values.iter().map(|row| row[i]).collect();
                let dut = grid_deriv4(&col, ht).expect("length checked");
                for k in interior(t_grid.len()) {
                    let u = values[k][i];
                    let res = dut[k] + a.eval(u)? * dux[k][i] + r * profile.e1.eval(u)?;
                    sum_sq += res * res;
                    count += 1;
                    if res.abs() > sup {
                        sup = res.abs();
                        worst = (t_grid[k], x_grid[i]);
                    }
                }
            }
            Ok(ResidualReport {
                sup,
                l2: (sum_sq / count as f64).sqrt(),
                worst,
                degenerate: false,
            })
        }
    }
}

// Residual norms run over interior nodes: the centered stencils hold
// there, and transported solutions carry their largest interpolation
// artifacts on the boundary rows.
pub(crate) fn interior(n: usize) -> std::ops::Range<usize> {
    if n >= 9 {
        2..n - 2
    } else {
        0..n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Interval;
    use crate::game_model::{symmetric_reduce, GameSpec, Horizon, SmoothFn, UtilityFamily};
    use crate::numerics::lin_grid;
    use crate::symmetric_equiv::terminal_strategy;
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

    #[test]
    fn stationary_matches_linear_feedback() {
        // slope r eta1 / (N - (N-1)(eta1 - eta2)) = 1/6 for these parameters
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.1, 10.0, 200);
        let strategy = stationary_mpne(&spec, &profile, &grid).unwrap();
        let FeedbackStrategy::Stationary { grid, values, .. } = &strategy else {
            panic!("expected stationary strategy");
        };
        for (x, u) in grid.iter().zip(values) {
            assert_relative_eq!(*u, x / 6.0, max_relative = 1e-7);
        }
    }

    #[test]
    fn stationary_zero_discount_returns_seed_constant() {
        let spec = cd_game(0.6, 0.8, 2, 0.0);
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.5, 5.0, 20);
        let strategy = stationary_mpne(&spec, &profile, &grid).unwrap();
        let FeedbackStrategy::Stationary { values, meta, .. } = &strategy else {
            panic!("expected stationary strategy");
        };
        assert_eq!(*meta, SolverProvenance::Ansatz);
        assert!(values.iter().all(|&v| v == values[0]));
    }

    #[test]
    fn stationary_custom_family_shoots_to_linear_truth() {
        // a black-box wrapper of the same game exercises the shooting path
        let (alpha, beta) = (0.6f64, 0.8f64);
        let custom = UtilityFamily::Custom(crate::game_model::CustomUtility {
            l: std::sync::Arc::new(move |u: f64, v: f64, n: usize| {
                u.powf(1.0 - alpha) / (1.0 - alpha) * v.powf((1.0 - beta) * (n as f64 - 1.0))
            }),
            partials: None,
        });
        let spec = GameSpec::new(2, custom, 0.05, Horizon::Infinite)
            .unwrap()
            .with_rates(Interval::new(1e-3, 1e3));
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.5, 5.0, 60);
        let strategy = stationary_mpne(&spec, &profile, &grid).unwrap();
        let FeedbackStrategy::Stationary { grid, values, .. } = &strategy else {
            panic!("expected stationary strategy");
        };
        for (x, u) in grid.iter().zip(values) {
            assert_relative_eq!(*u, x / 6.0, max_relative = 5e-4);
        }
    }

    #[test]
    fn stationary_refinement_stays_within_tolerance() {
        let spec = cd_game(0.7, 0.9, 3, 0.04);
        let profile = symmetric_reduce(&spec).unwrap();
        let coarse_grid = lin_grid(0.2, 8.0, 100);
        let fine_grid = lin_grid(0.2, 8.0, 199);
        let coarse = stationary_mpne(&spec, &profile, &coarse_grid).unwrap();
        let fine = stationary_mpne(&spec, &profile, &fine_grid).unwrap();
        for &x in &[0.2, 1.0, 4.0, 8.0] {
            let a = coarse.eval(0.0, x).unwrap();
            let b = fine.eval(0.0, x).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn stationary_stall_is_reported() {
        // constant e1 with an offsetting cross index stalls the advection
        // right at the seed
        let profile = crate::game_model::RiskProfile {
            e1: crate::curve::Curve::constant(1.0, Interval::new(1e-6, 1e6)),
            e_minus_1: crate::curve::Curve::linear(2.0, -1.0, Interval::new(1e-6, 1e6)),
            domain: Interval::new(1e-6, 1e6),
            shape: crate::game_model::ProfileShape::Analytic,
        };
        // a(u) = -2u + (1 - (2u - 1)) = -4u + 2, zero at u = 0.5
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let grid = lin_grid(1.0, 5.0, 10);
        // force the seed to land on the stall point via the shooting probe
        let res = super::stationary_rhs(
            &crate::symmetric_equiv::fictitious_dynamics(&profile, 2).unwrap(),
            &profile,
            spec.discount,
            1.0,
            0.5,
        );
        assert!(matches!(res, Err(Error::Stall { .. })));
        let _ = grid;
    }

    #[test]
    fn stationary_blowup_for_tiny_rate_window() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let mut profile = symmetric_reduce(&spec).unwrap();
        // shrink the admissible rates so the solution must exit
        profile.e1 = profile.e1.with_domain(Interval::new(0.01, 0.1));
        profile.e_minus_1 = profile.e_minus_1.with_domain(Interval::new(0.01, 0.1));
        profile.domain = Interval::new(0.01, 0.1);
        let grid = lin_grid(0.1, 10.0, 50);
        assert!(matches!(
            stationary_mpne(&spec, &profile, &grid),
            Err(Error::BlowUp { .. }) | Err(Error::Validation { .. })
        ));
    }

    fn finite_cd_game(alpha: f64, beta: f64, r: f64, t_end: f64, bequest: SmoothFn) -> GameSpec {
        GameSpec::new(
            2,
            UtilityFamily::CobbDouglas { alpha, beta },
            r,
            Horizon::Finite { t_end, bequest },
        )
        .unwrap()
    }

    #[test]
    fn characteristics_terminal_slice_matches_map() {
        let alpha = 0.6;
        let spec = finite_cd_game(alpha, 1.0, 0.0, 1.0, SmoothFn::crra(alpha));
        let profile = symmetric_reduce(&spec).unwrap();
        let phi = terminal_strategy(&spec, &lin_grid(0.05, 30.0, 601)).unwrap();
        let t_grid = lin_grid(0.0, 1.0, 11);
        let x_grid = lin_grid(0.5, 10.0, 41);
        let strategy = characteristics_mpne(&spec, &profile, &phi, &t_grid, &x_grid).unwrap();
        let FeedbackStrategy::TimeDependent { values, x_grid, .. } = &strategy else {
            panic!("expected time-dependent strategy");
        };
        for (x, u) in x_grid.iter().zip(values.last().unwrap()) {
            assert_relative_eq!(*u, phi.phi.eval(*x).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn characteristics_zero_discount_transport_relation() {
        // with r = 0 rates ride straight characteristics:
        // u(t, x) = phi(x + a(u)(T - t)) pointwise
        let alpha = 0.6;
        let spec = finite_cd_game(alpha, 1.0, 0.0, 1.0, SmoothFn::crra(alpha));
        let profile = symmetric_reduce(&spec).unwrap();
        let phi = terminal_strategy(&spec, &lin_grid(0.05, 30.0, 601)).unwrap();
        let t_grid = lin_grid(0.0, 1.0, 11);
        let x_grid = lin_grid(0.5, 10.0, 41);
        let strategy = characteristics_mpne(&spec, &profile, &phi, &t_grid, &x_grid).unwrap();
        let a = crate::symmetric_equiv::fictitious_dynamics(&profile, 2).unwrap();
        let FeedbackStrategy::TimeDependent {
            t_grid,
            x_grid,
            values,
            ..
        } = &strategy
        else {
            panic!("expected time-dependent strategy");
        };
        for (k, t) in t_grid.iter().enumerate() {
            for (i, x) in x_grid.iter().enumerate() {
                let u = values[k][i];
                let foot = x + a.eval(u).unwrap() * (1.0 - t);
                let residual = u - phi.phi.eval(foot).unwrap();
                assert!(residual.abs() <= 1e-8, "residual {residual} at ({t}, {x})");
            }
        }
    }

    #[test]
    fn characteristics_constant_terminal_map_is_constant() {
        // B_x constant makes phi constant, which transports unchanged
        let alpha = 0.5;
        let spec = finite_cd_game(alpha, 1.0, 0.0, 1.0, SmoothFn::linear(0.3));
        let profile = symmetric_reduce(&spec).unwrap();
        let phi = terminal_strategy(&spec, &lin_grid(0.05, 30.0, 301)).unwrap();
        let kappa = phi.phi.eval(1.0).unwrap();
        let strategy = characteristics_mpne(
            &spec,
            &profile,
            &phi,
            &lin_grid(0.0, 1.0, 6),
            &lin_grid(2.0, 8.0, 13),
        )
        .unwrap();
        let FeedbackStrategy::TimeDependent { values, .. } = &strategy else {
            panic!("expected time-dependent strategy");
        };
        for row in values {
            for v in row {
                assert_relative_eq!(*v, kappa, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn characteristics_discounted_closed_form_oracle() {
        // beta = 1 keeps phi(x) = x, and along each characteristic
        // u(s) = phi(x_T) exp(r eta1 (T - s)) with the foot map linear in
        // x_T, so the exact solution is
        // u(t, x) = x g / (1 - k_f (g - 1)/(r eta1)), g = exp(r eta1 (T-t))
        let (alpha, r, t_end) = (0.6, 0.05, 1.0);
        let spec = finite_cd_game(alpha, 1.0, r, t_end, SmoothFn::crra(alpha));
        let profile = symmetric_reduce(&spec).unwrap();
        let (eta1, eta2) = profile.linear_etas().unwrap();
        let k_f = -2.0 + (eta1 - eta2);
        let phi = terminal_strategy(&spec, &lin_grid(0.05, 30.0, 601)).unwrap();
        let t_grid = lin_grid(0.0, t_end, 11);
        let x_grid = lin_grid(0.5, 10.0, 21);
        let strategy = characteristics_mpne(&spec, &profile, &phi, &t_grid, &x_grid).unwrap();
        let FeedbackStrategy::TimeDependent {
            t_grid,
            x_grid,
            values,
            ..
        } = &strategy
        else {
            panic!("expected time-dependent strategy");
        };
        for (k, t) in t_grid.iter().enumerate() {
            let g = (r * eta1 * (t_end - t)).exp();
            let denom = 1.0 - k_f * (g - 1.0) / (r * eta1);
            for (i, x) in x_grid.iter().enumerate() {
                let exact = x * g / denom;
                assert_relative_eq!(values[k][i], exact, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn characteristics_crossing_is_a_shock_error() {
        // a steeply decreasing terminal map folds the characteristics
        let alpha = 0.6;
        let bequest = SmoothFn::new(
            "folding",
            move |x: f64| x,
            move |x: f64| (12.0 - x).powf(-alpha),
            move |x: f64| alpha * (12.0 - x).powf(-alpha - 1.0),
        );
        let spec = finite_cd_game(alpha, 1.0, 0.0, 6.0, bequest);
        let profile = symmetric_reduce(&spec).unwrap();
        let phi = terminal_strategy(&spec, &lin_grid(1.0, 10.0, 201)).unwrap();
        // phi(x) = 12 - x decreases; with a(u) = -u/3 the feet fold after
        // three time units, inside the requested window
        let res = characteristics_mpne(
            &spec,
            &profile,
            &phi,
            &lin_grid(0.0, 6.0, 2),
            &lin_grid(2.0, 9.0, 15),
        );
        assert!(matches!(res, Err(Error::Shock { .. })), "got {res:?}");
    }

    #[test]
    fn residual_vanishes_for_linear_feedback() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.1, 10.0, 200);
        // exact linear feedback injected directly
        let values: Vec<f64> = grid.iter().map(|x| x / 6.0).collect();
        let strategy = FeedbackStrategy::Stationary {
            u_of_x: crate::curve::Curve::linear(1.0 / 6.0, 0.0, Interval::new(0.0, 20.0)),
            grid: grid.clone(),
            values,
            meta: SolverProvenance::Ansatz,
        };
        let report = game_pde_residual(&strategy, &spec, &profile).unwrap();
        assert!(report.sup <= 1e-10, "sup residual {}", report.sup);
    }

    #[test]
    fn residual_of_solver_output_is_small() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.1, 10.0, 200);
        let strategy = stationary_mpne(&spec, &profile, &grid).unwrap();
        let report = game_pde_residual(&strategy, &spec, &profile).unwrap();
        assert!(report.sup <= 1e-7, "sup residual {}", report.sup);
    }

    #[test]
    fn residual_detects_wrong_feedback() {
        // doubling the slope leaves residual -2 c x r eta1 / 6-ish, bounded
        // away from zero at x = 1
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = lin_grid(0.1, 10.0, 200);
        let c = 1.0 / 6.0;
        let values: Vec<f64> = grid.iter().map(|x| 2.0 * c * x).collect();
        let strategy = FeedbackStrategy::Stationary {
            u_of_x: crate::curve::Curve::linear(2.0 * c, 0.0, Interval::new(0.0, 20.0)),
            grid: grid.clone(),
            values,
            meta: SolverProvenance::Ansatz,
        };
        let report = game_pde_residual(&strategy, &spec, &profile).unwrap();
        let floor = c * 0.05 * 2.5 / 2.0;
        assert!(
            report.sup >= floor,
            "sup residual {} under {floor}",
            report.sup
        );
    }

    #[test]
    fn residual_degenerate_grid_flagged() {
        let spec = cd_game(0.6, 0.8, 2, 0.05);
        let profile = symmetric_reduce(&spec).unwrap();
        let grid = vec![0.5, 1.0, 2.0];
        let values = vec![0.1, 0.2, 0.3];
        let strategy = FeedbackStrategy::Stationary {
            u_of_x: crate::curve::Curve::linear(0.1, 0.0, Interval::new(0.0, 20.0)),
            grid,
            values,
            meta: SolverProvenance::Ansatz,
        };
        let report = game_pde_residual(&strategy, &spec, &profile).unwrap();
        assert!(report.degenerate);
        assert!(report.sup.is_nan());
    }

    #[test]
    fn backward_characteristics_conserve_rate_without_discount() {
        let alpha = 0.6;
        let spec = finite_cd_game(alpha, 1.0, 0.0, 1.0, SmoothFn::crra(alpha));
        let profile = symmetric_reduce(&spec).unwrap();
        let phi = terminal_strategy(&spec, &lin_grid(0.05, 30.0, 301)).unwrap();
        // one explicit characteristic: value constant along the path
        let a = crate::symmetric_equiv::fictitious_dynamics(&profile, 2).unwrap();
        let u0 = phi.phi.eval(4.0).unwrap();
        let states = crate::numerics::ode::integrate_path(
            |_t, y: &[f64; 2]| Ok([a.eval(y[1])?, 0.0]),
            1.0,
            [4.0, u0],
            &[0.5, 0.0],
            crate::numerics::ode::OdeTol::default(),
        )
        .unwrap();
        for st in states {
            assert!((st[1] - u0).abs() <= 1e-12);
        }
    }
}
