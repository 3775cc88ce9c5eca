//! Discretized records and their conversion to learning data and evidence.

use serde::Serialize;

use super::ingest::PatientRecord;
use super::schema::{ClinicalSchema, Role};
use super::ClinicalError;
use crate::dbn::{EvidenceTimeline, SequenceRecord};
use crate::pgm::{Assignment, Dataset};

/// A record mapped onto schema states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteRecord {
    pub patient_id: String,
    /// Every fixed variable whose raw value is present, outcome included.
    pub fixed: Assignment,
    /// Daily evidence variables (never the daily outcome); index 0 is day 1.
    pub days: Vec<Assignment>,
    /// Daily outcome label per day, where it can be determined.
    pub labels: Vec<Option<String>>,
    /// Whether the patient acquired an infection during the stay, where known.
    pub ni_ever: Option<bool>,
}

impl DiscreteRecord {
    /// Static evidence for prediction: the fixed assignment without outcomes.
    pub fn timeline(&self, schema: &ClinicalSchema) -> EvidenceTimeline {
        let mut static_evidence = self.fixed.clone();
        for f in schema.fixed.iter().filter(|f| f.role == Role::Outcome) {
            static_evidence.remove(&f.name);
        }
        EvidenceTimeline {
            static_evidence,
            days: self.days.clone(),
        }
    }

    /// Fully labeled sequence for learning.
    pub fn sequence(&self, schema: &ClinicalSchema) -> SequenceRecord {
        let outcome = &schema.daily_outcome().name;
        SequenceRecord {
            static_values: self.fixed.clone(),
            days: self
                .days
                .iter()
                .zip(&self.labels)
                .map(|(d, l)| {
                    let mut d = d.clone();
                    if let Some(l) = l {
                        d.insert(outcome.clone(), l.clone());
                    }
                    d
                })
                .collect(),
        }
    }
}

/// Daily outcome labels.
///
/// An explicit daily value wins. Otherwise a day is `yes` once any earlier
/// day was `yes` (an acquired infection persists), `no` when a later day is
/// the first `yes` or when the patient never acquired one, and unknown
/// otherwise.
pub fn daily_labels(explicit: &[Option<bool>], ni_ever: Option<bool>) -> Vec<Option<bool>> {
    let first_yes = explicit.iter().position(|v| *v == Some(true));
    explicit
        .iter()
        .enumerate()
        .map(|(i, v)| match (v, first_yes) {
            (Some(v), _) => Some(*v),
            (None, Some(f)) => Some(i > f),
            (None, None) if ni_ever == Some(false) => Some(false),
            (None, None) => None,
        })
        .collect()
}

/// Maps every raw value to a schema state. Pure and deterministic.
pub fn discretize(record: &PatientRecord, schema: &ClinicalSchema) -> Result<DiscreteRecord, ClinicalError> {
    let mut fixed = Assignment::new();
    for var in &schema.fixed {
        if let Some(raw) = record.raw_value(&var.source) {
            fixed.insert(var.name.clone(), var.derive(&raw)?);
        }
    }
    let outcome = schema.daily_outcome();
    let mut days = Vec::with_capacity(record.days.len());
    let mut explicit = Vec::with_capacity(record.days.len());
    for obs in &record.days {
        let mut a = Assignment::new();
        let mut label = None;
        for (name, value) in obs {
            let var = schema
                .temporal_variable(name)
                .ok_or_else(|| ClinicalError::UnknownCode { code: name.clone(), line: 0 })?;
            if !var.states.contains(value) {
                return Err(ClinicalError::Binning {
                    variable: name.clone(),
                    value: value.clone(),
                });
            }
            if var.name == outcome.name {
                label = Some(value == "yes");
            } else {
                a.insert(name.clone(), value.clone());
            }
        }
        days.push(a);
        explicit.push(label);
    }
    let ni_ever = record.ni_ever().or_else(|| explicit.contains(&Some(true)).then_some(true));
    let labels = daily_labels(&explicit, record.ni_ever())
        .into_iter()
        .map(|l| l.map(|y| if y { "yes" } else { "no" }.to_string()))
        .collect();
    Ok(DiscreteRecord {
        patient_id: record.patient_id.clone(),
        fixed,
        days,
        labels,
        ni_ever,
    })
}

/// Learning rows and prediction timelines for a set of records.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningData {
    /// One row per patient over the fixed variables.
    pub static_rows: Dataset,
    /// One row per patient-day: `patient_id`, `day`, then every daily variable
    /// with the outcome label filled in.
    pub temporal_rows: Dataset,
    pub sequences: Vec<SequenceRecord>,
    /// Prediction evidence per patient, outcomes unbound.
    pub timelines: Vec<(String, EvidenceTimeline)>,
    pub records: Vec<DiscreteRecord>,
}

/// Discretizes `records` and lays them out for learning and prediction.
pub fn to_dataset(records: &[PatientRecord], schema: &ClinicalSchema) -> Result<LearningData, ClinicalError> {
    let discrete = records
        .iter()
        .map(|r| discretize(r, schema))
        .collect::<Result<Vec<_>, _>>()?;
    let mut static_rows = Dataset::new(schema.fixed.iter().map(|f| f.name.clone()).collect());
    let mut cols = vec!["patient_id".to_string(), "day".to_string()];
    cols.extend(schema.temporal.iter().map(|t| t.name.clone()));
    let mut temporal_rows = Dataset::new(cols);
    let mut sequences = Vec::with_capacity(discrete.len());
    let mut timelines = Vec::with_capacity(discrete.len());
    for d in &discrete {
        static_rows.push(schema.fixed.iter().map(|f| d.fixed.get(&f.name).map(str::to_string)).collect());
        let seq = d.sequence(schema);
        for (i, day) in seq.days.iter().enumerate() {
            let mut row = vec![Some(d.patient_id.clone()), Some((i + 1).to_string())];
            row.extend(schema.temporal.iter().map(|t| day.get(&t.name).map(str::to_string)));
            temporal_rows.push(row);
        }
        sequences.push(seq);
        timelines.push((d.patient_id.clone(), d.timeline(schema)));
    }
    Ok(LearningData {
        static_rows,
        temporal_rows,
        sequences,
        timelines,
        records: discrete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clinical::default_schema;
    use chrono::NaiveDate;
    use std::collections::BTreeMap;

    fn record(days: usize, ni: &str) -> PatientRecord {
        let entry = NaiveDate::from_ymd_opt(2021, 1, 10).unwrap();
        let mut fixed = BTreeMap::new();
        fixed.insert("age".to_string(), "0".to_string());
        fixed.insert("sex".to_string(), "F".to_string());
        fixed.insert("ni_ever".to_string(), ni.to_string());
        PatientRecord {
            patient_id: "p".into(),
            fixed,
            entry_date: entry,
            exit_date: entry + chrono::Days::new(days as u64 - 1),
            days: vec![BTreeMap::new(); days],
        }
    }

    #[test]
    fn same_day_discharge_is_the_shortest_stay_bin() {
        let d = discretize(&record(1, "no"), &default_schema()).unwrap();
        assert_eq!(d.fixed.get("dsj"), Some("0-2d"));
        assert_eq!(d.fixed.get("age1"), Some("0-15"));
        assert_eq!(d.fixed.get("periode_entr"), Some("winter"));
        assert_eq!(d.fixed.get("result"), Some("no"));
        assert_eq!(d.fixed.get("orig"), None);
    }

    #[test]
    fn onset_day_and_later_are_labeled_yes() {
        let mut r = record(4, "yes");
        r.days[1].insert("result_t".into(), "yes".into());
        r.days[0].insert("act_1".into(), "no".into());
        let d = discretize(&r, &default_schema()).unwrap();
        assert_eq!(
            d.labels,
            vec![Some("no".into()), Some("yes".into()), Some("yes".into()), Some("yes".into())]
        );
        assert_eq!(d.days[0].get("act_1"), Some("no"));
        assert!(d.days.iter().all(|a| !a.contains("result_t")));
    }

    #[test]
    fn infection_without_onset_day_leaves_labels_unknown() {
        assert_eq!(daily_labels(&[None, None], Some(true)), vec![None, None]);
        assert_eq!(daily_labels(&[None, None], Some(false)), vec![Some(false), Some(false)]);
        assert_eq!(daily_labels(&[None, Some(false), None], None), vec![None, Some(false), None]);
    }

    #[test]
    fn dataset_has_one_static_row_and_one_row_per_day() {
        let data = to_dataset(&[record(3, "no")], &default_schema()).unwrap();
        assert_eq!(data.static_rows.len(), 1);
        assert_eq!(data.temporal_rows.len(), 3);
        assert_eq!(data.timelines[0].1.days.len(), 3);
        assert!(!data.timelines[0].1.static_evidence.contains("result"));
        assert_eq!(data.sequences[0].days[2].get("result_t"), Some("no"));
    }

    #[test]
    fn discretize_is_deterministic() {
        let r = record(5, "no");
        assert_eq!(discretize(&r, &default_schema()).unwrap(), discretize(&r, &default_schema()).unwrap());
    }
}
