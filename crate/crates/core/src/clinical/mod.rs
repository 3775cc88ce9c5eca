//! The ICU patient-record pipeline: schema, ingestion and cleaning,
//! discretization, and conversion to learning data and evidence timelines.

mod defaults;
mod ingest;
mod records;
mod schema;

use thiserror::Error;

use crate::dbn::DbnError;

pub use defaults::{
    default_ground_truth, default_schema, default_structure, ACT_COUNT, EXAM_COUNT, RESULT_DAILY, RESULT_STATIC,
};
pub use ingest::{
    ingest, ingest_readers, write_records, CleaningReport, Correction, PatientRecord, DAILY_HEADER, DATE_FORMAT,
    FIXED_HEADER,
};
pub use records::{daily_labels, discretize, to_dataset, DiscreteRecord, LearningData};
pub use schema::{bin, ClinicalSchema, FixedSource, FixedVariable, Role, TemporalVariable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClinicalError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{file} file header must be `{expected}`, found `{found}`")]
    Header { file: String, expected: String, found: String },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("daily file line {line}: variable code {code} is not in the schema")]
    UnknownCode { code: String, line: u64 },
    #[error("value {value:?} of {variable} falls outside every state or bin")]
    Binning { variable: String, value: String },
    #[error("invalid schema: {}", .0.join("; "))]
    Schema(Vec<String>),
    #[error("schema does not match the model: {}", .0.join("; "))]
    ModelMismatch(Vec<String>),
    #[error(transparent)]
    Model(#[from] DbnError),
}
