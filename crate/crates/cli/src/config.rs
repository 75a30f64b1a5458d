//! Configuration schema: a strict JSON document (unknown keys rejected)
//! mapped onto the library's model types.

use oligeq_core::{GameSpec, Horizon, Interval, SmoothFn, UtilityFamily};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Derive,
    Mpne,
    Verify,
    Ci,
    Rationalize,
    Asym,
    Sweep,
}

/// Scalar function families accepted in configs (utilities and bequests).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    /// `-exp(-alpha u)`
    Cara { alpha: f64 },
    /// `u^(1-alpha)/(1-alpha)` (log at alpha = 1)
    Crra { alpha: f64 },
    /// `slope * u`
    Linear { slope: f64 },
    /// bequest with slope `scale * exp(-rate x)`
    ExpSlope { scale: f64, rate: f64 },
}

impl ScalarFn {
    pub fn build(&self) -> SmoothFn {
        match *self {
            ScalarFn::Cara { alpha } => SmoothFn::cara(alpha),
            ScalarFn::Crra { alpha } => SmoothFn::crra(alpha),
            ScalarFn::Linear { slope } => SmoothFn::linear(slope),
            ScalarFn::ExpSlope { scale, rate } => SmoothFn::exp_bequest(scale, rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HorizonConfig {
    Infinite,
    Finite { t_end: f64, bequest: ScalarFn },
}

impl Default for HorizonConfig {
    fn default() -> Self {
        HorizonConfig::Infinite
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameConfig {
    CobbDouglas {
        alpha: f64,
        beta: f64,
        #[serde(alias = "N")]
        players: usize,
        #[serde(default = "default_discount")]
        discount: f64,
        #[serde(default)]
        horizon: HorizonConfig,
    },
    IsoelasticPricing {
        scale: f64,
        elasticity: f64,
        #[serde(alias = "N")]
        players: usize,
        #[serde(default = "default_discount")]
        discount: f64,
        #[serde(default)]
        horizon: HorizonConfig,
    },
    Additive {
        own: ScalarFn,
        #[serde(default)]
        cross: Option<ScalarFn>,
        #[serde(alias = "N")]
        players: usize,
        #[serde(default = "default_discount")]
        discount: f64,
        #[serde(default)]
        horizon: HorizonConfig,
    },
    AdditiveDuopoly {
        own1: ScalarFn,
        own2: ScalarFn,
        #[serde(default)]
        cross1: Option<ScalarFn>,
        #[serde(default)]
        cross2: Option<ScalarFn>,
        t_end: f64,
        bequest1: ScalarFn,
        bequest2: ScalarFn,
    },
    AsymCobbDouglas {
        alpha1: f64,
        alpha2: f64,
        beta: f64,
        r1: f64,
        r2: f64,
    },
}

fn default_discount() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Discount of the constructed problem; defaults to the game's rate.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Scale constant of the construction.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Stock/rate grid size.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Rate window for reports and residual checks.
    #[serde(default = "default_u_window")]
    pub u_window: [f64; 2],
    /// Stock window for feedback solves.
    #[serde(default = "default_x_window")]
    pub x_window: [f64; 2],
    /// Time slices for finite-horizon transport.
    #[serde(default = "default_t_nodes")]
    pub t_nodes: usize,
    /// Verdict thresholds.
    #[serde(default = "default_tol_closed")]
    pub tol_closed: f64,
    #[serde(default = "default_tol_numeric")]
    pub tol_numeric: f64,
    /// Eigenvector branch for additive constructions.
    #[serde(default = "default_branch")]
    pub branch: String,
}

fn default_c() -> f64 {
    1.0
}
fn default_grid() -> usize {
    200
}
fn default_u_window() -> [f64; 2] {
    [0.1, 10.0]
}
fn default_x_window() -> [f64; 2] {
    [0.1, 10.0]
}
fn default_t_nodes() -> usize {
    51
}
fn default_tol_closed() -> f64 {
    1e-6
}
fn default_tol_numeric() -> f64 {
    1e-4
}
fn default_branch() -> String {
    "plus".into()
}

impl Default for NumericsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Parameter swept across `values`: alpha | beta | discount | rho.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub game: GameConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let config: RunConfig = serde_json::from_str(text)
        .map_err(|e| CliError::schema(format!("invalid configuration: {e}")))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> CliResult<()> {
    let n = &config.numerics;
    for (name, v) in [
        ("tol_closed", n.tol_closed),
        ("tol_numeric", n.tol_numeric),
        ("c", n.c.abs()),
    ] {
        if !(v > 0.0) {
            return Err(CliError::value(format!(
                "numerics.{name} must be positive, got {v}"
            )));
        }
    }
    if let Some(rho) = n.rho {
        if !(rho >= 0.0) {
            return Err(CliError::value(format!(
                "numerics.rho must be nonnegative, got {rho}"
            )));
        }
    }
    if n.grid < 8 {
        return Err(CliError::value("numerics.grid must be at least 8".into()));
    }
    if n.t_nodes < 2 {
        return Err(CliError::value(
            "numerics.t_nodes must be at least 2".into(),
        ));
    }
    for (name, w) in [("u_window", n.u_window), ("x_window", n.x_window)] {
        if !(w[0] > 0.0 && w[1] > w[0]) {
            return Err(CliError::value(format!(
                "numerics.{name} must be an increasing positive pair"
            )));
        }
    }
    if n.branch != "plus" && n.branch != "minus" {
        return Err(CliError::value(format!(
            "numerics.branch must be plus or minus, got {}",
            n.branch
        )));
    }
    match &config.game {
        GameConfig::CobbDouglas {
            alpha,
            beta,
            players,
            discount,
            ..
        } => {
            if (*alpha - 1.0).abs() < 1e-12 {
                return Err(CliError::value(
                    "cobb_douglas alpha = 1 divides by 1 - alpha".into(),
                ));
            }
            if *alpha <= 0.0 || *beta <= 0.0 {
                return Err(CliError::value(
                    "cobb_douglas requires positive alpha and beta".into(),
                ));
            }
            let d0 = -alpha + (*players as f64 - 1.0) * (1.0 - beta);
            if d0 >= 0.0 {
                return Err(CliError::value(format!(
                    "cobb_douglas requires -alpha + (N-1)(1-beta) < 0, got {d0}"
                )));
            }
            if !(*discount >= 0.0) {
                return Err(CliError::value("discount must be nonnegative".into()));
            }
        }
        GameConfig::IsoelasticPricing {
            scale, elasticity, ..
        } => {
            if !(*scale > 0.0) || !(*elasticity > 0.0) {
                return Err(CliError::value(
                    "isoelastic_pricing requires positive scale and elasticity".into(),
                ));
            }
        }
        _ => {}
    }
    if config.command == Command::Sweep && config.sweep.is_none() {
        return Err(CliError::schema(
            "sweep command requires a sweep section".into(),
        ));
    }
    Ok(())
}

/// Build the core game from a symmetric game config.
pub fn build_symmetric(game: &GameConfig) -> CliResult<GameSpec> {
    let (utility, players, discount, horizon) = match game {
        GameConfig::CobbDouglas {
            alpha,
            beta,
            players,
            discount,
            horizon,
        } => (
            UtilityFamily::CobbDouglas {
                alpha: *alpha,
                beta: *beta,
            },
            *players,
            *discount,
            horizon,
        ),
        GameConfig::IsoelasticPricing {
            scale,
            elasticity,
            players,
            discount,
            horizon,
        } => (
            UtilityFamily::IsoelasticPricing {
                scale: *scale,
                elasticity: *elasticity,
                cost: None,
            },
            *players,
            *discount,
            horizon,
        ),
        GameConfig::Additive {
            own,
            cross,
            players,
            discount,
            horizon,
        } => (
            UtilityFamily::AdditiveSeparable {
                own: own.build(),
                cross: cross.as_ref().map(|c| c.build()),
            },
            *players,
            *discount,
            horizon,
        ),
        _ => return Err(CliError::value(
            "this command needs a symmetric game (cobb_douglas, isoelastic_pricing or additive)"
                .into(),
        )),
    };
    let horizon = match horizon {
        HorizonConfig::Infinite => Horizon::Infinite,
        HorizonConfig::Finite { t_end, bequest } => Horizon::Finite {
            t_end: *t_end,
            bequest: bequest.build(),
        },
    };
    GameSpec::new(players, utility, discount, horizon).map_err(CliError::from)
}

/// The report/check window from the numerics block.
pub fn u_window(n: &NumericsConfig) -> Interval {
    Interval::new(n.u_window[0], n.u_window[1])
}

pub fn x_window(n: &NumericsConfig) -> Interval {
    Interval::new(n.x_window[0], n.x_window[1])
}
