//! Two-part dynamic Bayesian networks: an admission-time static slice plus a
//! daily slice template repeated once per day of stay.

mod filter;
mod learn;
mod sample;
mod spec;
mod unroll;

use thiserror::Error;

use crate::pgm::PgmError;

pub use filter::{
    filter, filter_enumeration, filter_unrolled, forward_equals_unrolled, predict_trajectory, ConsistencyReport,
    DayComparison, EvidenceTimeline, FilterState, PredictionTrace, TracePoint,
};
pub use learn::{fit_dbn, DbnFitReport, SequenceRecord};
pub use sample::{sample_days, sample_sequence, SampledSequence};
pub use spec::{at_day, DbnSpec, DbnSpecFile, DbnStructure, ParentRef, TemplateFile, PREV_SUFFIX};
pub use unroll::unroll;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DbnError {
    #[error("invalid dynamic network: {}", .0.join("; "))]
    Spec(Vec<String>),
    #[error(transparent)]
    Network(#[from] PgmError),
    #[error("malformed dynamic network file: {0}")]
    Format(String),
    #[error("day {day} is out of range (1..={available} available)")]
    DayOutOfRange { day: usize, available: usize },
    #[error("{0} is the predicted node and cannot be given as evidence")]
    ResultObserved(String),
}
