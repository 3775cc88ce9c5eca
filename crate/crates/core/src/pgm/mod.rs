//! Discrete Bayesian networks: representation, exact inference, parameter
//! fitting and sampling.

mod factor;
mod format;
mod inference;
mod learn;
mod model;
mod sample;

use thiserror::Error;

pub(crate) use factor::{eliminate, Factor};
pub use format::{CptFile, NetworkFile, RowFile};
pub(crate) use format::VariableLookup;
pub(crate) use inference::posterior_factor;
pub use inference::{
    for_each_completion, joint_probability, log_joint_probability, posterior, posterior_enumeration,
    ENUMERATION_CUTOFF,
};
pub use learn::{fit_parameters, Dataset, Family, FamilyCounts, FitReport, Structure, UniformFallback, DEFAULT_ALPHA};
pub(crate) use model::{check_rows, describe_row};
pub use model::{
    validate_network, Assignment, Cpt, Distribution, Network, Variable, Violation, LOAD_ROW_SUM_TOLERANCE,
    ROW_SUM_TOLERANCE,
};
pub use sample::{draw, sample, sample_states, sample_states_given};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PgmError {
    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("{state} is not a state of {variable}")]
    InvalidState { variable: String, state: String },
    #[error("assignment leaves variables unbound: {}", .0.join(", "))]
    IncompleteAssignment(Vec<String>),
    #[error("query variable {0} is bound in the evidence")]
    QueryObserved(String),
    #[error("evidence has probability zero under the model")]
    ImpossibleEvidence,
    #[error("joint state space of {0} exceeds the enumeration cutoff")]
    TooLargeForEnumeration(u128),
    #[error("data column for {0} is missing")]
    MissingColumn(String),
    #[error("data label {state} is not a state of {variable}")]
    SchemaMismatch { variable: String, state: String },
    #[error("smoothing pseudo-count must be finite and >= 0, got {0}")]
    InvalidAlpha(f64),
    #[error("malformed network file: {0}")]
    Format(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
