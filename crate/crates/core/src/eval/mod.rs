//! Thresholded classification, confusion matrices and predictive values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clinical::{to_dataset, ClinicalError, ClinicalSchema, PatientRecord};
use crate::dbn::{predict_trajectory, DbnError, DbnSpec};

/// Default alarm threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{what} must be in [0, 1], got {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("{predicted} predictions for {actual} outcomes")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("nothing to evaluate: no cases with a known outcome")]
    Empty,
    #[error(transparent)]
    Clinical(#[from] ClinicalError),
    #[error("patient {patient_id}: {source}")]
    Prediction { patient_id: String, source: DbnError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::Yes
        } else {
            Label::No
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "yes",
            Label::No => "no",
        }
    }
}

fn unit(what: &'static str, value: f64) -> Result<f64, EvalError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(EvalError::OutOfRange { what, value })
    }
}

/// `yes` iff `p >= threshold`; a probability exactly on the threshold alarms.
pub fn classify(p: f64, threshold: f64) -> Result<Label, EvalError> {
    Ok(Label::from_bool(unit("probability", p)? >= unit("threshold", threshold)?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        ConfusionMatrix { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    fn add(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::No, Label::No) => self.tn += 1,
            (Label::Yes, Label::No) => self.fp += 1,
            (Label::No, Label::Yes) => self.fn_ += 1,
            (Label::Yes, Label::Yes) => self.tp += 1,
        }
    }
}

/// Counts prediction/outcome pairs.
pub fn confusion(predicted: &[Label], actual: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        m.add(p, a);
    }
    Ok(m)
}

/// Classification rate and predictive values. A predictive value with an
/// empty denominator is absent rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(m: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = m.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    Ok(MetricsReport {
        accuracy: (m.tn + m.tp) as f64 / total as f64,
        ppv: ratio(m.tp, m.tp + m.fp),
        npv: ratio(m.tn, m.tn + m.fn_),
        threshold: None,
        total,
    })
}

/// How daily probabilities become cases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// One case per patient: the largest daily probability against whether
    /// the patient ever acquired an infection.
    #[default]
    PerStay,
    /// One case per labeled patient-day.
    PerDay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub patient_id: String,
    /// Present in per-day mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day: Option<usize>,
    pub probability: f64,
    pub predicted: Label,
    pub actual: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub horizon: Horizon,
    pub matrix: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub cases: Vec<Case>,
    /// Patients without a known outcome, left out of the matrix.
    pub skipped: Vec<String>,
}

/// Builds an evaluation from already-scored cases.
pub fn evaluate_cases(cases: Vec<Case>, skipped: Vec<String>, threshold: f64, horizon: Horizon) -> Result<Evaluation, EvalError> {
    let predicted: Vec<Label> = cases.iter().map(|c| c.predicted).collect();
    let actual: Vec<Label> = cases.iter().map(|c| c.actual).collect();
    let matrix = confusion(&predicted, &actual)?;
    let mut metrics = metrics(&matrix)?;
    metrics.threshold = Some(threshold);
    Ok(Evaluation {
        horizon,
        matrix,
        metrics,
        cases,
        skipped,
    })
}

/// Scores every test patient with the model and classifies at `threshold`.
pub fn evaluate_model(
    spec: &DbnSpec,
    records: &[PatientRecord],
    schema: &ClinicalSchema,
    threshold: f64,
    horizon: Horizon,
) -> Result<Evaluation, EvalError> {
    unit("threshold", threshold)?;
    schema.check_model(spec)?;
    let data = to_dataset(records, schema)?;
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for (rec, (pid, timeline)) in data.records.iter().zip(&data.timelines) {
        let trace = predict_trajectory(spec, timeline).map_err(|source| EvalError::Prediction {
            patient_id: pid.clone(),
            source,
        })?;
        match horizon {
            Horizon::PerStay => {
                let Some(actual) = rec.ni_ever else {
                    skipped.push(pid.clone());
                    continue;
                };
                let p = trace.max_daily().or(trace.baseline()).unwrap_or(0.0);
                cases.push(Case {
                    patient_id: pid.clone(),
                    day: None,
                    probability: p,
                    predicted: classify(p, threshold)?,
                    actual: Label::from_bool(actual),
                });
            }
            Horizon::PerDay => {
                let mut any = false;
                for (point, label) in trace.daily().zip(&rec.labels) {
                    if let Some(label) = label {
                        any = true;
                        cases.push(Case {
                            patient_id: pid.clone(),
                            day: Some(point.day),
                            probability: point.probability,
                            predicted: classify(point.probability, threshold)?,
                            actual: Label::from_bool(label == "yes"),
                        });
                    }
                }
                if !any {
                    skipped.push(pid.clone());
                }
            }
        }
    }
    evaluate_cases(cases, skipped, threshold, horizon)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

/// Aligned plain-text table of the metrics (two decimals) and the matrix.
pub fn render_table(m: &ConfusionMatrix, r: &MetricsReport) -> String {
    let mut s = String::new();
    if let Some(t) = r.threshold {
        let _ = writeln!(s, "{:<10}{:>6.2}", "threshold", t);
    }
    let _ = writeln!(s, "{:<10}{:>6}", "cases", r.total);
    let _ = writeln!(s, "{:<10}{:>6.2}", "accuracy", r.accuracy);
    let _ = writeln!(s, "{:<10}{:>6}", "ppv", fmt_opt(r.ppv));
    let _ = writeln!(s, "{:<10}{:>6}", "npv", fmt_opt(r.npv));
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<12}{:>14}{:>14}", "", "predicted no", "predicted yes");
    let _ = writeln!(s, "{:<12}{:>14}{:>14}", "actual no", m.tn, m.fp);
    let _ = writeln!(s, "{:<12}{:>14}{:>14}", "actual yes", m.fn_, m.tp);
    s
}

/// Observed versus predicted counts per class, as CSV.
pub fn histogram_csv(m: &ConfusionMatrix) -> String {
    format!(
        "class,observed,predicted\nno,{},{}\nyes,{},{}\n",
        m.tn + m.fp,
        m.tn + m.fn_,
        m.fn_ + m.tp,
        m.fp + m.tp
    )
}
