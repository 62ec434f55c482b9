use kmslab::analysis::AnalysisError;
use kmslab::experiments_davies::ExperimentError;
use kmslab::generators::GenError;
use kmslab::models::ModelError;
use kmslab::numlin::LinalgError;
use kmslab::ri_sim::RiError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One failed invariant, as written to `violations.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
    /// Measured quantity, when there is a single one.
    pub value: Option<f64>,
    pub threshold: Option<f64>,
}

impl Violation {
    pub fn new(invariant: &str, detail: impl Into<String>) -> Self {
        Violation { invariant: invariant.into(), detail: detail.into(), value: None, threshold: None }
    }

    pub fn measured(invariant: &str, detail: impl Into<String>, value: f64, threshold: f64) -> Self {
        Violation { invariant: invariant.into(), detail: detail.into(), value: Some(value), threshold: Some(threshold) }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("no report.json files found under {0}")]
    EmptyResults(String),
    #[error("{} invariant violation(s)", .0.len())]
    Invariant(Vec<Violation>),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("experiment failed: {0}")]
    ExperimentFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse(_) | CliError::EmptyResults(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::ExperimentFailed(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NotDetailedBalanced { residual } => {
                CliError::Invariant(vec![Violation::measured("kms_detailed_balance", e.to_string(), residual, 0.0)])
            }
            LinalgError::DomainError { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::ConfigParse(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Linalg(l) => l.into(),
            _ => CliError::ConfigParse(e.to_string()),
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::KappaBelowOne { .. } | GenError::InvalidParameter(_) | GenError::FrequencyOutOfBathRange { .. } => {
                CliError::ConfigParse(e.to_string())
            }
            GenError::NonPositiveCoeffMatrix { min_eigenvalue, .. } => {
                CliError::Invariant(vec![Violation::measured("coefficient_psd", e.to_string(), min_eigenvalue, 0.0)])
            }
            GenError::KMSViolation { residual } | GenError::KMSConditionViolation { residual } => {
                CliError::Invariant(vec![Violation::measured("kms_condition", e.to_string(), residual, 0.0)])
            }
            GenError::QuadratureDivergence { .. } => CliError::NonConvergence(e.to_string()),
            GenError::Model(m) => m.into(),
            GenError::Linalg(l) => l.into(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::SingularState { .. } | AnalysisError::InvalidArgument(_) => CliError::ConfigParse(e.to_string()),
            AnalysisError::Linalg(l) => l.into(),
            AnalysisError::Generator(g) => g.into(),
        }
    }
}

impl From<RiError> for CliError {
    fn from(e: RiError) -> Self {
        match e {
            RiError::InvalidConfig(_) => CliError::ConfigParse(e.to_string()),
            RiError::NotConverged { .. } | RiError::QuadratureNotConverged { .. } | RiError::ThermalizationCap { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            RiError::CPViolation { min_eigenvalue } => {
                CliError::Invariant(vec![Violation::measured("complete_positivity", e.to_string(), min_eigenvalue, -1e-9)])
            }
            RiError::NonUniqueFixedPoint { multiplicity } => {
                CliError::Invariant(vec![Violation::measured("unique_fixed_point", e.to_string(), multiplicity as f64, 1.0)])
            }
            RiError::Generator(g) => g.into(),
            RiError::Linalg(l) => l.into(),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::NotCommuting | ExperimentError::InvalidArgument(_) => CliError::ConfigParse(e.to_string()),
            ExperimentError::Generator(g) => g.into(),
            ExperimentError::Analysis(a) => a.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let code = |e: CliError| e.exit_code();
        assert_eq!(code(RiError::CPViolation { min_eigenvalue: -1e-3 }.into()), 3);
        assert_eq!(code(RiError::NonUniqueFixedPoint { multiplicity: 2 }.into()), 3);
        assert_eq!(code(RiError::NotConverged { difference: 1.0 }.into()), 4);
        assert_eq!(code(RiError::ThermalizationCap { max_steps: 10 }.into()), 4);
        assert_eq!(code(RiError::InvalidConfig("x".into()).into()), 2);
        assert_eq!(code(GenError::KappaBelowOne { kappa: 0.5 }.into()), 2);
        assert_eq!(code(GenError::KMSViolation { residual: 1.0 }.into()), 3);
        assert_eq!(code(AnalysisError::Linalg(LinalgError::NotDetailedBalanced { residual: 1.0 }).into()), 3);
        assert_eq!(code(ExperimentError::NotCommuting.into()), 2);
        match CliError::from(RiError::CPViolation { min_eigenvalue: -1e-3 }) {
            CliError::Invariant(v) => {
                assert_eq!(v[0].invariant, "complete_positivity");
                assert_eq!(v[0].value, Some(-1e-3));
            }
            e => panic!("unexpected {e}"),
        }
    }
}
