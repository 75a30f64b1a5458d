//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, numerics and diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation requested outside a declared domain. Never extrapolate.
    #[error("domain error: {what} = {value} outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Evaluation hit a pole or a vanishing denominator.
    #[error("singularity at {what} = {value}: {detail}")]
    Singularity {
        what: &'static str,
        value: f64,
        detail: &'static str,
    },

    /// A quantity required to be positive came out nonpositive.
    #[error("sign error: {what}({at}) = {value} must be positive")]
    Sign {
        what: &'static str,
        at: f64,
        value: f64,
    },

    /// Adaptive quadrature could not meet the tolerance.
    #[error("quadrature failed on [{a}, {b}]: error estimate {err_est:.3e} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        err_est: f64,
        subdivisions: usize,
    },

    /// The closed-form payoff exponent degenerates (logarithmic case).
    #[error("singular payoff: exponent 1 - {exponent} vanishes; the power-law form is invalid")]
    SingularPayoff { exponent: f64 },

    /// Root bracketing failed: no sign change over the search interval.
    #[error("no root of {what} bracketed in [{lo}, {hi}]")]
    NoRoot {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    /// A map required to be strictly monotone is not.
    #[error("non-unique solution: {what} is not strictly monotone near {at}")]
    NonUnique { what: &'static str, at: f64 },

    /// An ODE trajectory left the admissible region.
    #[error("solution blow-up at x = {x}: u = {u} left the domain [{lo}, {hi}]")]
    BlowUp { x: f64, u: f64, lo: f64, hi: f64 },

    /// The advection coefficient vanished while the source term did not.
    #[error("stalled at x = {x}: advection coefficient vanished at u = {u}")]
    Stall { x: f64, u: f64 },

    /// Two characteristics crossed; no classical solution on the window.
    #[error(
        "characteristics cross near t = {t}, x = {x}: no classical equilibrium on this window"
    )]
    Shock { t: f64, x: f64 },

    /// Parameters violate a standing assumption of the model family.
    #[error("invalid parameter: {detail}")]
    Parameter { detail: String },

    /// The linear equation for the strategy ratio is degenerate.
    #[error("degenerate equation: {detail}")]
    Degenerate { detail: String },

    /// A computed quantity fails its feasibility requirement.
    #[error("infeasible: {what} = {value} (requires {requirement})")]
    Infeasible {
        what: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// Power-law exponent equals one; the integral is logarithmic.
    #[error("degenerate exponent: {what} = 1")]
    Exponent { what: &'static str },

    /// The coefficient matrix has no real eigenvalues at this point.
    #[error("complex eigenvalues at (u1, u2) = ({u1}, {u2}): discriminant {discriminant:.6e} < 0")]
    ComplexEigen { u1: f64, u2: f64, discriminant: f64 },

    /// The ODE branch denominator index vanished.
    #[error("branch singular at u1 = {u1}: denominator index {value:.3e}")]
    BranchSingular { u1: f64, value: f64 },

    /// No bequest template yields a strictly concave payoff.
    #[error("concavity failure: no bequest shape gives a strictly concave payoff on [{lo}, {hi}]")]
    Concavity { lo: f64, hi: f64 },

    /// A structural hypothesis of the constructive theorem fails.
    #[error("hypothesis failure: {detail}")]
    Hypothesis { detail: String },

    /// A marginal utility could not be inverted at the requested value.
    #[error("inversion failure: {what} has no preimage for {value}")]
    Inversion { what: &'static str, value: f64 },

    /// Construction produced an object violating its own invariants.
    #[error("validation failed at stage `{stage}`: {detail}")]
    Validation { stage: &'static str, detail: String },

    /// ODE integration failed to reach the requested tolerance.
    #[error("ode integration failed at t = {t}: {detail}")]
    Ode { t: f64, detail: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
