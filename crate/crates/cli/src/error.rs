//! CLI error envelope: machine-readable kind + message, mapped to exit
//! codes by `main`.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn schema(message: String) -> Self {
        Self {
            kind: "SchemaError".into(),
            message,
        }
    }

    pub fn value(message: String) -> Self {
        Self {
            kind: "ValueError".into(),
            message,
        }
    }

    pub fn io(message: String) -> Self {
        Self {
            kind: "IoError".into(),
            message,
        }
    }
}

impl From<oligeq_core::Error> for CliError {
    fn from(e: oligeq_core::Error) -> Self {
        let kind = match &e {
            oligeq_core::Error::Domain { .. } => "DomainError",
            oligeq_core::Error::Singularity { .. } => "SingularityError",
            oligeq_core::Error::Sign { .. } => "SignError",
            oligeq_core::Error::Quadrature { .. } => "QuadratureError",
            oligeq_core::Error::SingularPayoff { .. } => "SingularPayoffError",
            oligeq_core::Error::NoRoot { .. } => "NoRootError",
            oligeq_core::Error::NonUnique { .. } => "NonUniqueError",
            oligeq_core::Error::BlowUp { .. } => "BlowUpError",
            oligeq_core::Error::Stall { .. } => "StallError",
            oligeq_core::Error::Shock { .. } => "ShockError",
            oligeq_core::Error::Parameter { .. } => "ParameterError",
            oligeq_core::Error::Degenerate { .. } => "DegenerateError",
            oligeq_core::Error::Infeasible { .. } => "InfeasibleError",
            oligeq_core::Error::Exponent { .. } => "ExponentError",
            oligeq_core::Error::ComplexEigen { .. } => "ComplexEigenError",
            oligeq_core::Error::BranchSingular { .. } => "BranchSingularError",
            oligeq_core::Error::Concavity { .. } => "ConcavityError",
            oligeq_core::Error::Hypothesis { .. } => "HypothesisError",
            oligeq_core::Error::Inversion { .. } => "InversionError",
            oligeq_core::Error::Validation { .. } => "ValidationError",
            oligeq_core::Error::Ode { .. } => "OdeError",
        };
        Self {
            kind: kind.into(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
