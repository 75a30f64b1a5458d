//! Command orchestration: builds the model from a validated config, runs
//! the requested pipeline and writes reports and curve tables.

use std::path::Path;

use oligeq_core::additive_duopoly::{
    bequest_link_check, rationalizability_test, theta_ode, ArgConvention, Branch,
    RationalizabilityVerdict,
};
use oligeq_core::asym_duopoly::{
    asym_fictitious, feedback_slope, ratio_equation_residual, solve_delta, AsymParams,
};
use oligeq_core::mpne_solver::{
    characteristics_mpne, game_pde_residual, stationary_mpne, FeedbackStrategy,
};
use oligeq_core::numerics::{lin_grid, log_grid};
use oligeq_core::verifier::{certify, cobb_douglas_oracle, Thresholds};
use oligeq_core::{
    competition_index, derive_monopoly, symmetric_reduce, terminal_strategy, DeriveOptions,
    GameSpec, Horizon, Interval, MonopolyProblem,
};

use crate::config::{self, Command, GameConfig, NumericsConfig, RunConfig, ScalarFn};
use crate::error::{CliError, CliResult};
use crate::report::{write_csv, write_json, Report, Witness};

/// Outcome mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Success,
    NotRationalizable,
}

pub fn run(config: &RunConfig, out_dir: &Path) -> CliResult<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    match config.command {
        Command::Ci => run_ci(config, out_dir),
        Command::Derive => run_derive(config, out_dir),
        Command::Mpne => run_mpne(config, out_dir),
        Command::Verify => run_verify(config, out_dir),
        Command::Rationalize => run_rationalize(config, out_dir),
        Command::Asym => run_asym(config, out_dir),
        Command::Sweep => run_sweep(config, out_dir),
    }
}

fn derive_options(n: &NumericsConfig) -> DeriveOptions {
    let mut opts = DeriveOptions::default();
    opts.rho = n.rho;
    opts.c = n.c;
    opts.stock_window = config::x_window(n);
    opts.stock_nodes = n.grid.max(16) + 1;
    opts.check_window = config::u_window(n);
    opts
}

fn ci_probe(window: Interval) -> f64 {
    if window.contains(1.0) {
        1.0
    } else {
        (window.lo * window.hi).sqrt()
    }
}

fn run_ci(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let spec = config::build_symmetric(&cfg.game)?;
    let profile = symmetric_reduce(&spec)?;
    let window = config::u_window(&cfg.numerics);
    let at = ci_probe(window);
    let ci = competition_index(&profile, spec.players, at)?;

    let mut report = Report::new("ok")
        .constant("ci", ci)
        .constant("ci_probe_rate", at)
        .provenance_entry("e1", profile.e1.provenance().label())
        .provenance_entry("e_minus_1", profile.e_minus_1.provenance().label());
    if let Some((eta1, eta2)) = profile.linear_etas() {
        report = report.constant("eta1", eta1).constant("eta2", eta2);
    }
    if let GameConfig::CobbDouglas {
        alpha,
        beta,
        players,
        discount,
        ..
    } = &cfg.game
    {
        let rho = cfg.numerics.rho.unwrap_or(*discount);
        let oracle = cobb_douglas_oracle(*alpha, *beta, *players, *discount, rho)?;
        report = report
            .constant("oracle_ci", oracle.ci)
            .constant("oracle_m", oracle.m)
            .constant("oracle_k_f", oracle.k_f);
        if let Some(c) = oracle.c {
            report = report.constant("oracle_feedback_slope", c);
        }
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(RunOutcome::Success)
}

fn monopoly_curves(oc: &MonopolyProblem, n: &NumericsConfig) -> CliResult<Vec<Vec<f64>>> {
    let window = config::u_window(n)
        .intersect(&oc.ell.domain())
        .ok_or_else(|| CliError::value("u_window outside the constructed domain".into()))?;
    let mut rows = Vec::with_capacity(n.grid);
    for &u in log_grid(window.lo, window.hi, n.grid.max(16)).iter() {
        rows.push(vec![u, oc.f.eval(u)?, oc.gamma.eval(u)?, oc.ell.eval(u)?]);
    }
    Ok(rows)
}

fn monopoly_report(oc: &MonopolyProblem, spec: &GameSpec, n: &NumericsConfig) -> CliResult<Report> {
    let profile = symmetric_reduce(spec)?;
    let window = config::u_window(n);
    let ident = oligeq_core::verifier::identification_check(&profile, oc, spec.players, window)?;
    let mut report = Report::new("ok")
        .constant("rho", oc.rho)
        .constant("c", oc.c)
        .constant("u_ref", oc.u_ref)
        .constant(
            "ci",
            competition_index(&profile, spec.players, ci_probe(window))?,
        )
        .residual("identification_dynamics_sup", ident.dynamics_sup)
        .residual("identification_coestate_sup", ident.coestate_sup)
        .provenance_entry("f", oc.f.provenance().label())
        .provenance_entry("gamma", oc.gamma.provenance().label())
        .provenance_entry("ell", oc.ell.provenance().label());
    if let Some((eta1, eta2)) = profile.linear_etas() {
        report = report.constant("eta1", eta1).constant("eta2", eta2);
        if oc.rho > 0.0 && spec.discount > 0.0 {
            report = report.constant("m", oc.rho / (eta1 * spec.discount));
        }
    }
    if let Some((k_f, _)) = oc.f.as_linear() {
        report = report.constant("k_f", k_f);
    }
    Ok(report)
}

fn run_derive(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let spec = config::build_symmetric(&cfg.game)?;
    let oc = derive_monopoly(&spec, &derive_options(&cfg.numerics))?;
    let report = monopoly_report(&oc, &spec, &cfg.numerics)?;
    write_json(&out.join("monopoly.json"), &report)?;
    write_csv(
        &out.join("curves.csv"),
        &["u", "f", "gamma", "ell"],
        &monopoly_curves(&oc, &cfg.numerics)?,
    )?;
    Ok(RunOutcome::Success)
}

fn solve_feedback(spec: &GameSpec, n: &NumericsConfig) -> CliResult<FeedbackStrategy> {
    let profile = symmetric_reduce(spec)?;
    let xw = config::x_window(n);
    match &spec.horizon {
        Horizon::Infinite => Ok(stationary_mpne(
            spec,
            &profile,
            &lin_grid(xw.lo, xw.hi, n.grid.max(16)),
        )?),
        Horizon::Finite { t_end, .. } => {
            let t_grid = lin_grid(0.0, *t_end, n.t_nodes.max(2));
            let x_grid = lin_grid(xw.lo, xw.hi, n.grid.max(16));
            // widen the terminal-map grid until the transported feet cover
            // the requested window
            let mut extension = 2.0f64;
            for attempt in 0..4 {
                let phi_grid = lin_grid(
                    (xw.lo * 0.25).max(1e-3),
                    xw.hi * extension,
                    (4 * n.grid).max(64),
                );
                let phi = terminal_strategy(spec, &phi_grid)?;
                match characteristics_mpne(spec, &profile, &phi, &t_grid, &x_grid) {
                    Ok(s) => return Ok(s),
                    Err(oligeq_core::Error::Domain { .. }) if attempt < 3 => extension *= 2.0,
                    Err(e) => return Err(e.into()),
                }
            }
            Err(CliError::value(
                "transport could not cover the stock window".into(),
            ))
        }
    }
}

fn feedback_rows(strategy: &FeedbackStrategy) -> (Vec<&'static str>, Vec<Vec<f64>>) {
    match strategy {
        FeedbackStrategy::Stationary { grid, values, .. } => (
            vec!["x", "u"],
            grid.iter().zip(values).map(|(x, u)| vec![*x, *u]).collect(),
        ),
        FeedbackStrategy::TimeDependent {
            t_grid,
            x_grid,
            values,
            ..
        } => {
            let mut rows = Vec::with_capacity(t_grid.len() * x_grid.len());
            for (k, t) in t_grid.iter().enumerate() {
                for (i, x) in x_grid.iter().enumerate() {
                    rows.push(vec![*t, *x, values[k][i]]);
                }
            }
            (vec!["t", "x", "u"], rows)
        }
    }
}

fn run_mpne(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let spec = config::build_symmetric(&cfg.game)?;
    let profile = symmetric_reduce(&spec)?;
    let strategy = solve_feedback(&spec, &cfg.numerics)?;
    let residual = game_pde_residual(&strategy, &spec, &profile)?;
    let report = Report::new("ok")
        .residual("game_pde_sup", residual.sup)
        .residual("game_pde_l2", residual.l2)
        .note(format!(
            "worst residual node at (t, x) = ({}, {})",
            residual.worst.0, residual.worst.1
        ));
    write_json(&out.join("report.json"), &report)?;
    let (header, rows) = feedback_rows(&strategy);
    write_csv(&out.join("mpne.csv"), &header, &rows)?;
    Ok(RunOutcome::Success)
}

fn run_verify(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let spec = config::build_symmetric(&cfg.game)?;
    let profile = symmetric_reduce(&spec)?;
    let oc = derive_monopoly(&spec, &derive_options(&cfg.numerics))?;
    let strategy = solve_feedback(&spec, &cfg.numerics)?;
    let thresholds = Thresholds {
        closed_form: cfg.numerics.tol_closed,
        numeric: cfg.numerics.tol_numeric,
    };
    let window = config::u_window(&cfg.numerics);
    let cert = certify(&spec, &profile, &oc, &strategy, thresholds, window)?;

    let violations = cert
        .concavity_samples
        .iter()
        .filter(|s| s.violation)
        .count();
    let mut report = Report::new(cert.verdict.label())
        .constant("ci", cert.competition_index)
        .constant("rho", oc.rho)
        .constant("c", oc.c)
        .residual("control_pde_sup", cert.residual_control_pde.sup)
        .residual("control_pde_l2", cert.residual_control_pde.l2)
        .residual("game_pde_sup", cert.residual_game_pde.sup)
        .residual(
            "identification_dynamics_sup",
            cert.residual_identification.dynamics_sup,
        )
        .residual(
            "identification_coestate_sup",
            cert.residual_identification.coestate_sup,
        )
        .residual("foc_relative_sup", cert.foc_residual)
        .constant("concavity_samples", cert.concavity_samples.len() as f64)
        .constant("concavity_violations", violations as f64)
        .provenance_entry("construction", cert.provenance.label());
    for note in &cert.notes {
        report = report.note(note.clone());
    }
    write_json(&out.join("report.json"), &report)?;
    write_csv(
        &out.join("curves.csv"),
        &["u", "f", "gamma", "ell"],
        &monopoly_curves(&oc, &cfg.numerics)?,
    )?;
    let (header, rows) = feedback_rows(&strategy);
    write_csv(&out.join("mpne.csv"), &header, &rows)?;
    Ok(RunOutcome::Success)
}

fn run_rationalize(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let GameConfig::AdditiveDuopoly {
        own1,
        own2,
        cross1,
        cross2,
        t_end,
        bequest1,
        bequest2,
    } = &cfg.game
    else {
        return Err(CliError::value(
            "rationalize requires an additive_duopoly game".into(),
        ));
    };
    let spec = oligeq_core::additive_duopoly::AdditiveSpec::new(
        own1.build(),
        own2.build(),
        cross1.as_ref().map(ScalarFn::build),
        cross2.as_ref().map(ScalarFn::build),
        *t_end,
        bequest1.build(),
        bequest2.build(),
    )?;
    let window = config::u_window(&cfg.numerics);
    let result = rationalizability_test(&spec, window, window, 50)?;

    let verdict = match result.verdict {
        RationalizabilityVerdict::Candidate => "rationalizable_candidate",
        RationalizabilityVerdict::NotRationalizable => "not_rationalizable",
        RationalizabilityVerdict::Mixed => "mixed",
    };
    let mut report = Report::new(verdict)
        .constant("samples_positive", result.n_positive as f64)
        .constant("samples_negative", result.n_negative as f64)
        .constant("samples_zero", result.n_zero as f64);
    // eigenvalues at the region center when a real pair exists
    let center = (
        (window.lo * window.hi).sqrt(),
        (window.lo * window.hi).sqrt(),
    );
    if let Ok(ep) = oligeq_core::additive_duopoly::eigen_pair(&spec, center.0, center.1) {
        report = report
            .constant("lambda_center", ep.lambda)
            .constant("mu_center", ep.mu)
            .constant("discriminant_center", ep.discriminant);
    }
    for w in &result.witnesses {
        report.witnesses.push(Witness {
            u1: w.u1,
            u2: w.u2,
            value: w.discriminant,
            label: "negative_discriminant".into(),
        });
    }
    for w in &result.degenerate_points {
        report.witnesses.push(Witness {
            u1: w.u1,
            u2: w.u2,
            value: w.discriminant,
            label: "degenerate_discriminant".into(),
        });
    }

    // candidates get the full positive pipeline diagnostics when the
    // eigenvector link and bequest data cooperate
    if result.verdict == RationalizabilityVerdict::Candidate {
        let branch = if cfg.numerics.branch == "minus" {
            Branch::Minus
        } else {
            Branch::Plus
        };
        let anchor_rate = ci_probe(window);
        let theta = theta_ode(
            &spec,
            branch,
            ArgConvention::AsDisplayed,
            (anchor_rate, anchor_rate),
            window,
            cfg.numerics.grid.max(65),
        );
        match theta {
            Ok(theta) => {
                let xw = config::x_window(&cfg.numerics);
                let grid = lin_grid(xw.lo, xw.hi, 33);
                match bequest_link_check(&spec, &theta, &grid) {
                    Ok((pass, defect)) => {
                        report = report
                            .constant("bequest_link_pass", if pass { 1.0 } else { 0.0 })
                            .residual("bequest_link_sup", defect);
                    }
                    Err(e) => report = report.note(format!("bequest link not checked: {e}")),
                }
            }
            Err(e) => report = report.note(format!("link ODE not integrated: {e}")),
        }
    }

    write_json(&out.join("report.json"), &report)?;
    if result.verdict == RationalizabilityVerdict::NotRationalizable {
        return Ok(RunOutcome::NotRationalizable);
    }
    Ok(RunOutcome::Success)
}

fn run_asym(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let GameConfig::AsymCobbDouglas {
        alpha1,
        alpha2,
        beta,
        r1,
        r2,
    } = &cfg.game
    else {
        return Err(CliError::value(
            "asym requires an asym_cobb_douglas game".into(),
        ));
    };
    let params = AsymParams::new(*alpha1, *alpha2, *beta, *r1, *r2)?;
    let delta = solve_delta(&params)?;
    let rho = cfg.numerics.rho.unwrap_or(0.5 * (r1 + r2));
    let oc = asym_fictitious(&params, delta, rho, cfg.numerics.c)?;

    let mut ratio_residual = 0.0f64;
    for &u in &[0.5, 1.0, 2.0] {
        ratio_residual = ratio_residual.max(ratio_equation_residual(&params, delta, u).abs());
    }
    let (xi, _) = oc.f.as_linear().expect("asym dynamics are linear");
    let report = Report::new("ok")
        .constant("delta", delta)
        .constant("delta_feasible", 1.0)
        .constant("feedback_slope", feedback_slope(&params, delta)?)
        .constant("xi", xi)
        .constant("rho", rho)
        .constant(
            "exponent",
            if rho == 0.0 {
                0.0
            } else {
                rho / (params.epsilon * params.sigma1())
            },
        )
        .residual("ratio_equation_sup", ratio_residual)
        .provenance_entry("construction", "closed_form");
    write_json(&out.join("report.json"), &report)?;
    write_csv(
        &out.join("curves.csv"),
        &["u", "f", "gamma", "ell"],
        &monopoly_curves(&oc, &cfg.numerics)?,
    )?;
    Ok(RunOutcome::Success)
}

fn run_sweep(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    let sweep = cfg.sweep.as_ref().expect("validated");
    let GameConfig::CobbDouglas {
        alpha,
        beta,
        players,
        discount,
        ..
    } = &cfg.game
    else {
        return Err(CliError::value(
            "sweep currently supports cobb_douglas games".into(),
        ));
    };
    let items: Vec<(usize, f64)> = sweep.values.iter().copied().enumerate().collect();

    // independent items run concurrently; results are reassembled in order
    let results: Vec<CliResult<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .iter()
            .map(|&(_, value)| {
                let parameter = sweep.parameter.clone();
                scope.spawn(move || -> CliResult<Vec<f64>> {
                    let (a, b, r) = match parameter.as_str() {
                        "alpha" => (value, *beta, *discount),
                        "beta" => (*alpha, value, *discount),
                        "discount" => (*alpha, *beta, value),
                        other => {
                            return Err(CliError::value(format!(
                                "unsupported sweep parameter `{other}`"
                            )))
                        }
                    };
                    let rho = cfg.numerics.rho.unwrap_or(r);
                    let oracle = cobb_douglas_oracle(a, b, *players, r, rho)?;
                    let spec = GameSpec::new(
                        *players,
                        oligeq_core::UtilityFamily::CobbDouglas { alpha: a, beta: b },
                        r,
                        Horizon::Infinite,
                    )?;
                    let profile = symmetric_reduce(&spec)?;
                    let ci = competition_index(&profile, *players, 1.0)?;
                    Ok(vec![
                        value,
                        oracle.eta1,
                        oracle.eta2,
                        oracle.m,
                        oracle.k_f,
                        oracle.c.unwrap_or(f64::NAN),
                        oracle.ci,
                        ci,
                    ])
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    write_csv(
        &out.join("sweep.csv"),
        &[
            "value",
            "eta1",
            "eta2",
            "m",
            "k_f",
            "feedback_slope",
            "oracle_ci",
            "pipeline_ci",
        ],
        &rows,
    )?;
    let report = Report::new("ok")
        .constant("items", rows.len() as f64)
        .note(format!(
            "swept {} over {} values",
            sweep.parameter,
            rows.len()
        ));
    write_json(&out.join("report.json"), &report)?;
    Ok(RunOutcome::Success)
}
