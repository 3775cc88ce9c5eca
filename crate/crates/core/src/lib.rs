//! Dynamic Bayesian networks for daily nosocomial-infection risk.
//!
//! The crate is organized as a pipeline:
//!
//! - [`pgm`]: discrete Bayesian networks with exact inference, smoothed
//!   maximum-likelihood fitting and ancestral sampling.
//! - [`dbn`]: two-part dynamic networks (admission slice plus a repeated daily
//!   slice), unrolling, and exact per-day filtering of the risk node.
//! - [`clinical`]: the patient-record schema, CSV ingestion, discretization
//!   and conversion into learning data and evidence timelines.
//! - [`synth`]: a ground-truth cohort simulator.
//! - [`eval`]: thresholded classification and confusion-matrix metrics.
//! - [`service`]: the HTTP session service.

pub mod clinical;
pub mod dbn;
pub mod eval;
pub mod pgm;
pub mod service;
pub mod synth;
