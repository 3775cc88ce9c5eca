//! Ground-truth cohort simulation, used to verify learning and inference
//! where real patient data is unavailable.

mod cohort;
mod recovery;

use thiserror::Error;

use crate::clinical::ClinicalError;
use crate::dbn::DbnError;

pub use cohort::{
    generate_cohort, write_cohort, CohortConfig, Manifest, StayLength, DAILY_FILE, FIXED_FILE, MANIFEST_FILE,
};
pub use recovery::{recovery_report, RecoveryReport, RowDistance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid cohort configuration: {0}")]
    Config(String),
    #[error("the two models do not share a structure")]
    StructureMismatch,
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Clinical(#[from] ClinicalError),
    #[error(transparent)]
    Model(#[from] DbnError),
}
