//! Declarative mapping from raw patient-file columns to model variables.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::ClinicalError;
use crate::dbn::DbnSpec;
use crate::pgm::Variable;

/// What a variable is used for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Observed and used as evidence.
    #[default]
    Evidence,
    /// Training label only; never bound at prediction time.
    Outcome,
}

/// How a fixed variable's state is derived from the fixed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedSource {
    /// The cell must equal one of the variable's states.
    Categorical { column: String },
    /// Numeric cell binned into half-open intervals `[edges[i], edges[i+1])`,
    /// the last one unbounded. One edge per state.
    Bins { column: String, edges: Vec<f64> },
    /// Month of a date cell mapped to a state; `months[0]` is January.
    Season { column: String, months: Vec<String> },
    /// Whole days from entry date to exit date, binned like [`FixedSource::Bins`].
    StayDays { edges: Vec<f64> },
}

impl FixedSource {
    pub fn column(&self) -> Option<&str> {
        match self {
            FixedSource::Categorical { column } | FixedSource::Bins { column, .. } | FixedSource::Season { column, .. } => {
                Some(column)
            }
            FixedSource::StayDays { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedVariable {
    pub name: String,
    pub states: Vec<String>,
    pub source: FixedSource,
    #[serde(default, skip_serializing_if = "is_evidence")]
    pub role: Role,
}

/// A daily variable read from the long-format daily file under `code`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalVariable {
    pub name: String,
    pub code: String,
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "is_evidence")]
    pub role: Role,
}

fn is_evidence(r: &Role) -> bool {
    *r == Role::Evidence
}

/// Fixed and daily variables plus their derivation rules.
///
/// Exactly one daily variable has the outcome role (the daily infection
/// state, states `yes`/`no`); at most one fixed variable does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalSchema {
    pub fixed: Vec<FixedVariable>,
    pub temporal: Vec<TemporalVariable>,
}

impl FixedVariable {
    pub fn variable(&self) -> Variable {
        Variable::new(self.name.clone(), self.states.iter().cloned())
    }

    /// Bins or maps a raw value. `raw` is the cell text, or the stay length
    /// in days for [`FixedSource::StayDays`].
    pub fn derive(&self, raw: &str) -> Result<String, ClinicalError> {
        let bad = || ClinicalError::Binning {
            variable: self.name.clone(),
            value: raw.to_string(),
        };
        match &self.source {
            FixedSource::Categorical { .. } => {
                if self.states.iter().any(|s| s == raw) {
                    Ok(raw.to_string())
                } else {
                    Err(bad())
                }
            }
            FixedSource::Bins { edges, .. } | FixedSource::StayDays { edges } => {
                let x: f64 = raw.trim().parse().map_err(|_| bad())?;
                bin(x, edges).map(|i| self.states[i].clone()).ok_or_else(bad)
            }
            FixedSource::Season { months, .. } => {
                let d = NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").map_err(|_| bad())?;
                Ok(months[d.month0() as usize].clone())
            }
        }
    }
}

/// Index of the half-open bin holding `x`; `None` below the first edge or
/// for non-finite input.
pub fn bin(x: f64, edges: &[f64]) -> Option<usize> {
    if !x.is_finite() || edges.is_empty() || x < edges[0] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

impl TemporalVariable {
    pub fn variable(&self) -> Variable {
        Variable::new(self.name.clone(), self.states.iter().cloned())
    }
}

fn check_states(name: &str, states: &[String], problems: &mut Vec<String>) {
    if states.len() < 2 {
        problems.push(format!("{name} needs at least 2 states"));
    }
    if states.iter().collect::<BTreeSet<_>>().len() != states.len() {
        problems.push(format!("{name} repeats a state"));
    }
}

fn is_yes_no(states: &[String]) -> bool {
    states.len() == 2 && states.iter().any(|s| s == "yes") && states.iter().any(|s| s == "no")
}

impl ClinicalSchema {
    pub fn from_json(text: &str) -> Result<Self, ClinicalError> {
        let schema: ClinicalSchema = serde_json::from_str(text).map_err(|e| ClinicalError::Format(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schema serializes");
        s.push('\n');
        s
    }

    /// Checks names, states, bin edges and roles.
    pub fn validate(&self) -> Result<(), ClinicalError> {
        let mut problems = Vec::new();
        let mut names = BTreeSet::new();
        for f in &self.fixed {
            if !names.insert(f.name.as_str()) {
                problems.push(format!("duplicate variable {}", f.name));
            }
            check_states(&f.name, &f.states, &mut problems);
            match &f.source {
                FixedSource::Bins { edges, .. } | FixedSource::StayDays { edges } => {
                    if edges.len() != f.states.len() {
                        problems.push(format!("{} has {} states but {} bin edges", f.name, f.states.len(), edges.len()));
                    }
                    if edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) || edges.iter().any(|e| !e.is_finite()) {
                        problems.push(format!("bin edges of {} must be finite and strictly increasing", f.name));
                    }
                }
                FixedSource::Season { months, .. } => {
                    if months.len() != 12 {
                        problems.push(format!("season map of {} needs 12 months", f.name));
                    }
                    for m in months {
                        if !f.states.contains(m) {
                            problems.push(format!("season map of {} uses unknown state {m}", f.name));
                        }
                    }
                }
                FixedSource::Categorical { .. } => {}
            }
        }
        let mut codes = BTreeSet::new();
        for t in &self.temporal {
            if !names.insert(t.name.as_str()) {
                problems.push(format!("duplicate variable {}", t.name));
            }
            if !codes.insert(t.code.as_str()) {
                problems.push(format!("duplicate daily code {}", t.code));
            }
            check_states(&t.name, &t.states, &mut problems);
        }
        let fixed_outcomes: Vec<_> = self.fixed.iter().filter(|f| f.role == Role::Outcome).collect();
        if fixed_outcomes.len() > 1 {
            problems.push("at most one fixed variable may be an outcome".to_string());
        }
        if let Some(f) = fixed_outcomes.first() {
            if !is_yes_no(&f.states) {
                problems.push(format!("outcome {} must have states yes/no", f.name));
            }
        }
        let daily_outcomes: Vec<_> = self.temporal.iter().filter(|t| t.role == Role::Outcome).collect();
        match daily_outcomes.as_slice() {
            [t] if !is_yes_no(&t.states) => problems.push(format!("outcome {} must have states yes/no", t.name)),
            [_] => {}
            _ => problems.push("exactly one daily variable must be the outcome".to_string()),
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ClinicalError::Schema(problems))
        }
    }

    pub fn fixed_variable(&self, name: &str) -> Option<&FixedVariable> {
        self.fixed.iter().find(|f| f.name == name)
    }

    pub fn temporal_by_code(&self, code: &str) -> Option<&TemporalVariable> {
        self.temporal.iter().find(|t| t.code == code)
    }

    pub fn temporal_variable(&self, name: &str) -> Option<&TemporalVariable> {
        self.temporal.iter().find(|t| t.name == name)
    }

    /// The daily outcome variable (validated to exist).
    pub fn daily_outcome(&self) -> &TemporalVariable {
        self.temporal
            .iter()
            .find(|t| t.role == Role::Outcome)
            .expect("validated schema has a daily outcome")
    }

    pub fn fixed_outcome(&self) -> Option<&FixedVariable> {
        self.fixed.iter().find(|f| f.role == Role::Outcome)
    }

    /// Every schema variable must exist in the model with identical states,
    /// the daily outcome must be the model's result node, and a fixed outcome
    /// must be its baseline node.
    pub fn check_model(&self, spec: &DbnSpec) -> Result<(), ClinicalError> {
        let mut problems = Vec::new();
        for f in &self.fixed {
            match spec.static_slice().variable(&f.name) {
                None => problems.push(format!("fixed variable {} is not in the model", f.name)),
                Some(v) if v.states != f.states => problems.push(format!("states of {} differ from the model", f.name)),
                _ => {}
            }
        }
        for t in &self.temporal {
            match spec.template_variable(&t.name) {
                None => problems.push(format!("daily variable {} is not in the model", t.name)),
                Some(v) if v.states != t.states => problems.push(format!("states of {} differ from the model", t.name)),
                _ => {}
            }
        }
        if self.daily_outcome().name != spec.result_node() {
            problems.push(format!(
                "daily outcome {} is not the model's result node {}",
                self.daily_outcome().name,
                spec.result_node()
            ));
        }
        if let Some(f) = self.fixed_outcome() {
            if spec.baseline_node() != Some(f.name.as_str()) {
                problems.push(format!("fixed outcome {} is not the model's baseline node", f.name));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ClinicalError::ModelMismatch(problems))
        }
    }
}
