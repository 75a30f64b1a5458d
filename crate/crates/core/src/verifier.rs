//! Equivalence certification.
//!
//! A constructed monopoly rationalizes the game when the game's feedback
//! also satisfies the control problem's characteristic equation
//! `u_t + f(u) u_x = rho gamma(u)/gamma'(u)` together with the
//! identification identities that produced `f` and `gamma`. This module
//! evaluates those residuals, spot-checks concavity of the pre-Hamiltonian
//! in the control, and wraps everything in a single report with a
//! three-valued verdict.

use crate::curve::{Interval, Provenance};
use crate::error::{Error, Result};
use crate::game_model::{GameSpec, RiskProfile};
use crate::mpne_solver::{game_pde_residual, FeedbackStrategy, ResidualReport};
use crate::numerics::fd::grid_deriv4;
use crate::numerics::log_grid;
use crate::symmetric_equiv::MonopolyProblem;

/// Residual thresholds for the verdict. The tighter bound applies to
/// closed-form constructions, the looser one to fully numeric paths.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub closed_form: f64,
    pub numeric: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            closed_form: 1e-6,
            numeric: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equivalent => "equivalent",
            Verdict::NotEquivalent => "not_equivalent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Sup-norm defects of the two identification identities.
#[derive(Debug, Clone, Copy)]
pub struct IdentificationReport {
    pub dynamics_sup: f64,
    pub coestate_sup: f64,
}

/// One concavity probe of the pre-Hamiltonian in the own control.
#[derive(Debug, Clone, Copy)]
pub struct ConcavitySample {
    pub x: f64,
    pub u: f64,
    pub value: f64,
    /// Nonnegative curvature fails the sufficiency spot check.
    pub violation: bool,
}

/// Full certification payload.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub residual_control_pde: ResidualReport,
    pub residual_game_pde: ResidualReport,
    pub residual_identification: IdentificationReport,
    /// Sup of the relative defect of `ell' + f' gamma`.
    pub foc_residual: f64,
    pub concavity_samples: Vec<ConcavitySample>,
    pub competition_index: f64,
    pub provenance: Provenance,
    pub notes: Vec<String>,
}

/// Residual of the control problem's characteristic equation along a
/// strategy: `u_t + f(u) u_x - rho gamma/gamma'` (stationary drops `u_t`).
pub fn control_pde_residual(
    strategy: &FeedbackStrategy,
    oc: &MonopolyProblem,
) -> Result<ResidualReport> {
    let source = |u: f64| -> Result<f64> {
        if oc.rho == 0.0 {
            return Ok(0.0);
        }
        let g = oc.gamma.eval(u)?;
        let dg = oc.gamma.deriv(u)?;
        if dg == 0.0 {
            return Err(Error::Singularity {
                what: "gamma'",
                value: u,
                detail: "coestate derivative vanishes on the strategy range",
            });
        }
        Ok(oc.rho * g / dg)
    };

    match strategy {
        FeedbackStrategy::Stationary { grid, values, .. } => {
            let h = grid[1] - grid[0];
            let uniform = grid
                .windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() < 1e-9 * h.max(1e-12));
            let du = if uniform {
                grid_deriv4(values, h)
            } else {
                None
            };
            let Some(du) = du else {
                return Ok(ResidualReport {
                    sup: f64::NAN,
                    l2: f64::NAN,
                    worst: (f64::NAN, f64::NAN),
                    degenerate: true,
                });
            };
            let mut sup = 0.0f64;
            let mut sum_sq = 0.0;
            let mut count = 0usize;
            let mut worst = (0.0, grid[0]);
            for i in crate::mpne_solver::interior(grid.len()) {
                let u = values[i];
                let res = oc.f.eval(u)? * du[i] - source(u)?;
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
            if t_grid.len() < 5 || x_grid.len() < 5 {
                return Ok(ResidualReport {
                    sup: f64::NAN,
                    l2: f64::NAN,
                    worst: (f64::NAN, f64::NAN),
                    degenerate: true,
                });
            }
            let ht = t_grid[1] - t_grid[0];
            let hx = x_grid[1] - x_grid[0];
            let dux: Vec<Vec<f64>> = values
                .iter()
                .map(|row| grid_deriv4(row, hx).expect("length checked"))
                .collect();
            let mut sup = 0.0f64;
            let mut sum_sq = 0.0;
            let mut count = 0usize;
            let mut worst = (t_grid[0], x_grid[0]);
            for i in crate::mpne_solver::interior(x_grid.len()) {
                let col: Vec<f64> = values.iter().map(|row| row[i]).collect();
                let dut = grid_deriv4(&col, ht).expect("length checked");
                for k in crate::mpne_solver::interior(t_grid.len()) {
                    let u = values[k][i];
                    let res = dut[k] + oc.f.eval(u)? * dux[k][i] - source(u)?;
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

/// Pointwise defects of the identification identities on a 50-point grid.
pub fn identification_check(
    profile: &RiskProfile,
    oc: &MonopolyProblem,
    players: usize,
    window: Interval,
) -> Result<IdentificationReport> {
    let window = window
        .intersect(&oc.f.domain())
        .and_then(|w| w.intersect(&oc.gamma.domain()))
        .and_then(|w| w.intersect(&profile.domain))
        .ok_or_else(|| Error::Parameter {
            detail: "empty identification window".into(),
        })?;
    let n = players as f64;
    let r = oc.source_discount;
    let mut dyn_sup = 0.0f64;
    let mut gam_sup = 0.0f64;
    for &u in log_grid(window.lo, window.hi, 50).iter() {
        let e1 = profile.e1.eval(u)?;
        let em1 = profile.e_minus_1.eval(u)?;
        dyn_sup = dyn_sup.max((oc.f.eval(u)? + n * u - (n - 1.0) * (e1 - em1)).abs());
        let defect = if oc.rho == 0.0 {
            (r * e1 * oc.gamma.deriv(u)?).abs() / oc.gamma.eval(u)?.abs().max(1e-300)
        } else {
            let dg = oc.gamma.deriv(u)?;
            if dg == 0.0 {
                f64::INFINITY
            } else {
                (oc.rho * oc.gamma.eval(u)? / dg + r * e1).abs()
            }
        };
        gam_sup = gam_sup.max(defect);
    }
    Ok(IdentificationReport {
        dynamics_sup: dyn_sup,
        coestate_sup: gam_sup,
    })
}

/// Sup over interior points of the relative defect of `ell' = -f' gamma`,
/// with the payoff derivative taken by fourth-order differences so the
/// integral construction of `ell` is actually exercised.
pub fn foc_residual(oc: &MonopolyProblem, window: Interval, points: usize) -> Result<f64> {
    let window = window
        .intersect(&oc.ell.domain())
        .and_then(|w| w.intersect(&oc.gamma.domain()))
        .ok_or_else(|| Error::Parameter {
            detail: "empty FOC window".into(),
        })?;
    let mut sup = 0.0f64;
    for &u in log_grid(window.lo * 1.05, window.hi / 1.05, points).iter() {
        let h = 1e-3 * u.max(1e-3);
        let lhs = crate::numerics::fd::deriv_central4(|z| oc.ell.eval(z), u, h)?;
        let rhs = -(oc.f.deriv(u)? * oc.gamma.eval(u)?);
        let denom = lhs.abs().max(rhs.abs()).max(1e-300);
        sup = sup.max(((lhs - rhs) / denom).abs());
    }
    Ok(sup)
}

/// Own-control curvature of the game's pre-Hamiltonian at `(x, u)` points.
/// The stock dynamics are linear in the controls, so the curvature is the
/// own second partial of the utility on the diagonal.
pub fn concavity_check_game(
    spec: &GameSpec,
    samples: &[(f64, f64)],
) -> Result<Vec<ConcavitySample>> {
    samples
        .iter()
        .map(|&(x, u)| {
            let p = spec.utility.partials(spec.players, u, u)?;
            Ok(ConcavitySample {
                x,
                u,
                value: p.l_own_own,
                violation: p.l_own_own >= 0.0,
            })
        })
        .collect()
}

/// Either side of the equivalence whose pre-Hamiltonian curvature can be
/// probed.
pub enum ConcavityTarget<'a> {
    Game(&'a GameSpec),
    Monopoly(&'a MonopolyProblem, Option<&'a FeedbackStrategy>),
}

/// Sample the own-control second derivative of the pre-Hamiltonian at
/// `(x, u)` points; any nonnegative sample fails the sufficiency spot check.
pub fn hamiltonian_concavity_check(
    target: ConcavityTarget<'_>,
    samples: &[(f64, f64)],
) -> Result<Vec<ConcavitySample>> {
    match target {
        ConcavityTarget::Game(spec) => concavity_check_game(spec, samples),
        ConcavityTarget::Monopoly(oc, strategy) => concavity_check_monopoly(oc, strategy, samples),
    }
}

/// Own-control curvature `ell''(u) + f''(u) p` of the constructed problem.
/// With a strategy the costate is evaluated on-path, `p = gamma(u*(x))`;
/// otherwise at the sample's own rate.
pub fn concavity_check_monopoly(
    oc: &MonopolyProblem,
    strategy: Option<&FeedbackStrategy>,
    samples: &[(f64, f64)],
) -> Result<Vec<ConcavitySample>> {
    let probe_time = match strategy {
        Some(FeedbackStrategy::TimeDependent { t_grid, .. }) => t_grid[0],
        _ => 0.0,
    };
    samples
        .iter()
        .map(|&(x, u)| {
            let p = match strategy {
                Some(s) => oc.gamma.eval(s.eval(probe_time, x)?)?,
                None => oc.gamma.eval(u)?,
            };
            let value = oc.ell.deriv2(u)? + oc.f.deriv2(u)? * p;
            Ok(ConcavitySample {
                x,
                u,
                value,
                violation: value >= 0.0,
            })
        })
        .collect()
}

/// Closed-form constants for the power-utility family with multiplicative
/// externalities; the ground truth used by the acceptance checks.
#[derive(Debug, Clone, Copy)]
pub struct CobbDouglasOracle {
    pub eta1: f64,
    pub eta2: f64,
    /// marginal-utility elasticity of the constructed payoff
    pub m: f64,
    /// slope of the fictitious dynamics
    pub k_f: f64,
    /// slope of the linear stationary feedback; absent when the dynamics
    /// slope vanishes
    pub c: Option<f64>,
    pub ci: f64,
}

/// Evaluate the closed forms for parameters `(alpha, beta, N, r, rho)`.
pub fn cobb_douglas_oracle(
    alpha: f64,
    beta: f64,
    players: usize,
    r: f64,
    rho: f64,
) -> Result<CobbDouglasOracle> {
    let n = players as f64;
    let d0 = -alpha + (n - 1.0) * (1.0 - beta);
    if d0 >= 0.0 {
        return Err(Error::Parameter {
            detail: format!("-alpha + (N-1)(1-beta) must be negative, got {d0}"),
        });
    }
    if (alpha - 1.0).abs() < 1e-14 || beta <= 0.0 {
        return Err(Error::Parameter {
            detail: "alpha = 1 or beta <= 0 outside the closed-form family".into(),
        });
    }
    let eta1 = -1.0 / d0;
    let eta2 = if players == 1 {
        0.0
    } else {
        -((1.0 - beta) / (1.0 - alpha)) / d0
    };
    let k_f = -n + (n - 1.0) * (eta1 - eta2);
    let m = if r > 0.0 { rho / (eta1 * r) } else { 0.0 };
    let c = (k_f.abs() >= 1e-14).then(|| -r * eta1 / k_f);
    let ci = (n - 1.0) / n * (eta1 - eta2);
    Ok(CobbDouglasOracle {
        eta1,
        eta2,
        m,
        k_f,
        c,
        ci,
    })
}

/// Verdict from the residual ladder: the tight threshold certifies
/// closed-form paths, the loose one numeric paths; residuals landing
/// between are inconclusive rather than overclaimed.
pub fn decide_verdict(
    max_residual: f64,
    provenance: Provenance,
    thresholds: Thresholds,
    concavity_violated: bool,
) -> Verdict {
    if concavity_violated || !max_residual.is_finite() {
        return Verdict::NotEquivalent;
    }
    let lower = match provenance {
        Provenance::ClosedForm => thresholds.closed_form,
        _ => thresholds.numeric,
    };
    let upper = thresholds.numeric.max(lower);
    if max_residual <= lower {
        Verdict::Equivalent
    } else if max_residual <= upper {
        Verdict::Inconclusive
    } else {
        Verdict::NotEquivalent
    }
}

/// Assemble the full certification for a derived problem and a solved
/// strategy. The report is deterministic for identical inputs.
pub fn certify(
    spec: &GameSpec,
    profile: &RiskProfile,
    oc: &MonopolyProblem,
    strategy: &FeedbackStrategy,
    thresholds: Thresholds,
    check_window: Interval,
) -> Result<EquivalenceReport> {
    let residual_control_pde = control_pde_residual(strategy, oc)?;
    let residual_game_pde = game_pde_residual(strategy, spec, profile)?;
    let residual_identification = identification_check(profile, oc, spec.players, check_window)?;
    let foc = foc_residual(oc, check_window, 20)?;

    // 20 x 20 grid of concavity probes over stock and rate windows
    let (x_lo, x_hi) = match strategy {
        FeedbackStrategy::Stationary { grid, .. } => (grid[0], grid[grid.len() - 1]),
        FeedbackStrategy::TimeDependent { x_grid, .. } => (x_grid[0], x_grid[x_grid.len() - 1]),
    };
    let window = check_window
        .intersect(&oc.ell.domain())
        .ok_or_else(|| Error::Parameter {
            detail: "empty concavity window".into(),
        })?;
    let mut samples = Vec::with_capacity(400);
    for &x in crate::numerics::lin_grid(x_lo, x_hi, 20).iter() {
        for &u in log_grid(window.lo, window.hi, 20).iter() {
            samples.push((x, u));
        }
    }
    let concavity_samples = concavity_check_monopoly(oc, Some(strategy), &samples)?;
    let concavity_violated = concavity_samples.iter().any(|s| s.violation);

    let ci_at = if window.contains(1.0) {
        1.0
    } else {
        (window.lo * window.hi).sqrt()
    };
    let competition_index =
        crate::symmetric_equiv::competition_index(profile, spec.players, ci_at)?;

    let max_residual = residual_control_pde
        .sup
        .max(residual_identification.dynamics_sup)
        .max(residual_identification.coestate_sup)
        .max(foc);
    // transported strategies are interpolated from scattered feet, which
    // makes the end-to-end path numeric regardless of the construction
    let provenance = match strategy {
        FeedbackStrategy::TimeDependent { .. } => Provenance::Quadrature,
        FeedbackStrategy::Stationary { .. } => oc.provenance(),
    };
    let verdict = decide_verdict(max_residual, provenance, thresholds, concavity_violated);

    let mut notes = vec![
        format!(
            "residuals checked on bounded grids: rates [{:.3e}, {:.3e}], stocks [{:.3e}, {:.3e}]",
            window.lo, window.hi, x_lo, x_hi
        ),
        format!(
            "game-side feedback PDE sup residual {:.3e}",
            residual_game_pde.sup
        ),
    ];
    if matches!(strategy, FeedbackStrategy::TimeDependent { .. }) {
        notes.push(
            "transported strategies are interpolated from characteristic feet; residual norms \
             include that resolution error, so the numeric threshold applies"
                .into(),
        );
    }

    Ok(EquivalenceReport {
        verdict,
        residual_control_pde,
        residual_game_pde,
        residual_identification,
        foc_residual: foc,
        concavity_samples,
        competition_index,
        provenance,
        notes,
    })
}
