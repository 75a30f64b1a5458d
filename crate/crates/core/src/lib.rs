//! Equivalence analysis for dynamic resource oligopolies.
//!
//! Given an N-player nonrenewable-resource extraction game with Markov
//! (feedback) strategies, this crate constructs a single-agent control
//! problem (payoff integrand, discount, dynamics and bequest) whose
//! optimal feedback reproduces the game's symmetric equilibrium, computes
//! a competition index comparing oligopoly and monopoly extraction, solves
//! the equilibrium feedback itself, and certifies the construction through
//! residual diagnostics. Asymmetric and additive-externality duopolies are
//! handled by dedicated pipelines, including detection of games that no
//! single-agent problem can reproduce.

pub mod additive_duopoly;
pub mod asym_duopoly;
pub mod curve;
pub mod error;
pub mod game_model;
pub mod mpne_solver;
pub mod numerics;
pub mod symmetric_equiv;
pub mod verifier;

pub use curve::{Curve, CurveFn, Interval, Provenance};
pub use error::{Error, Result};
pub use game_model::{
    risk_index_cross, risk_index_own, symmetric_reduce, GameSpec, Horizon, PartialDerivatives,
    RiskProfile, SmoothFn, UtilityFamily,
};
pub use symmetric_equiv::{
    coestate_gamma, competition_index, derive_monopoly, fictitious_bequest, fictitious_dynamics,
    fictitious_payoff, terminal_strategy, DeriveOptions, MonopolyProblem, TerminalMap,
};
