//! Fitting a dynamic spec from per-patient sequences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spec::{DbnSpec, DbnStructure, ParentRef};
use super::DbnError;
use crate::pgm::{
    describe_row, fit_parameters, Assignment, Cpt, Dataset, FamilyCounts, FitReport, PgmError, UniformFallback,
    Variable,
};

/// One patient: static labels and one labeled assignment per day. Any label
/// may be missing; the result node is expected on days where it is known.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    #[serde(rename = "static", default)]
    pub static_values: Assignment,
    #[serde(default)]
    pub days: Vec<Assignment>,
}

/// Counts and fallbacks from [`fit_dbn`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DbnFitReport {
    pub alpha: f64,
    pub sequences: usize,
    pub days_seen: usize,
    pub static_slice: FitReport,
    /// Per template node: number of days where the whole transition family was observed.
    pub transition_rows: BTreeMap<String, usize>,
    /// Per template node with a day-1 CPT: number of first days with the family observed.
    pub initial_rows: BTreeMap<String, usize>,
    pub uniform_rows: Vec<UniformFallback>,
}

fn encode(vars: &[Variable], index: &BTreeMap<String, usize>, a: &Assignment) -> Result<Vec<Option<usize>>, PgmError> {
    let mut out = vec![None; vars.len()];
    for (name, label) in a.iter() {
        let &i = index.get(name).ok_or_else(|| PgmError::UnknownVariable(name.to_string()))?;
        out[i] = Some(vars[i].state_index(label).ok_or_else(|| PgmError::SchemaMismatch {
            variable: name.to_string(),
            state: label.to_string(),
        })?);
    }
    Ok(out)
}

/// Fits the static slice, the transition CPTs and the day-1 CPTs with the
/// same additive smoothing as [`fit_parameters`].
///
/// Transition CPTs of nodes with a previous-day parent learn from days 2
/// onward and their day-1 CPTs from day 1; every other template CPT is shared
/// by all days and learns from all of them.
pub fn fit_dbn(structure: &DbnStructure, records: &[SequenceRecord], alpha: f64) -> Result<(DbnSpec, DbnFitReport), DbnError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(PgmError::InvalidAlpha(alpha).into());
    }
    let compiled = structure.compile()?;
    let statics = &structure.static_slice.variables;
    let template = &structure.template_variables;

    let mut data = Dataset::new(statics.iter().map(|v| v.name.clone()).collect());
    let mut static_rows = Vec::with_capacity(records.len());
    let mut day_rows = Vec::with_capacity(records.len());
    for r in records {
        let s = encode(statics, &compiled.static_index, &r.static_values)?;
        data.push(
            statics
                .iter()
                .map(|v| r.static_values.get(&v.name).map(str::to_string))
                .collect(),
        );
        static_rows.push(s);
        day_rows.push(
            r.days
                .iter()
                .map(|d| encode(template, &compiled.template_index, d))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let (static_net, static_report) = fit_parameters(&structure.static_slice, &data, alpha)?;

    let card = |r: &ParentRef| match *r {
        ParentRef::Static(s) => statics[s].cardinality(),
        ParentRef::Current(k) | ParentRef::Previous(k) => template[k].cardinality(),
    };
    let parent_vars = |refs: &[ParentRef]| -> Vec<&Variable> {
        refs.iter()
            .map(|r| match *r {
                ParentRef::Static(s) => &statics[s],
                ParentRef::Current(k) | ParentRef::Previous(k) => &template[k],
            })
            .collect()
    };

    let mut report = DbnFitReport {
        alpha,
        sequences: records.len(),
        days_seen: day_rows.iter().map(Vec::len).sum(),
        static_slice: static_report,
        ..Default::default()
    };
    let mut template_cpts = Vec::with_capacity(template.len());
    let mut initial_cpts = Vec::new();
    for (j, var) in template.iter().enumerate() {
        let trans_refs = &compiled.transition_parents[j];
        let mut trans = FamilyCounts::new(var.cardinality(), trans_refs.iter().map(card).collect());
        let init_refs = compiled.initial_parents[j].as_ref();
        let mut init = init_refs.map(|refs| FamilyCounts::new(var.cardinality(), refs.iter().map(card).collect()));
        for (s, days) in static_rows.iter().zip(&day_rows) {
            for (t, today) in days.iter().enumerate() {
                let value = |r: &ParentRef| match *r {
                    ParentRef::Static(x) => s[x],
                    ParentRef::Current(k) => today[k],
                    ParentRef::Previous(k) => t.checked_sub(1).and_then(|p| days[p][k]),
                };
                match (&mut init, init_refs) {
                    (Some(counts), Some(refs)) if t == 0 => counts.observe(today[j], refs.iter().map(value)),
                    _ => trans.observe(today[j], trans_refs.iter().map(value)),
                }
            }
        }
        let (rows, uniform) = trans.estimate(alpha);
        report.transition_rows.insert(var.name.clone(), trans.observed());
        let pv = parent_vars(trans_refs);
        report.uniform_rows.extend(uniform.into_iter().map(|r| UniformFallback {
            child: var.name.clone(),
            row: describe_row(&pv, r),
        }));
        template_cpts.push(Cpt::new(var.name.clone(), structure.template_parents[j].clone(), rows));
        if let (Some(counts), Some(refs)) = (init, init_refs) {
            let (rows, uniform) = counts.estimate(alpha);
            report.initial_rows.insert(var.name.clone(), counts.observed());
            let pv = parent_vars(refs);
            report.uniform_rows.extend(uniform.into_iter().map(|r| UniformFallback {
                child: format!("{} (day 1)", var.name),
                row: describe_row(&pv, r),
            }));
            initial_cpts.push(Cpt::new(var.name.clone(), structure.initial_parent_names(j), rows));
        }
    }

    let spec = DbnSpec::new(
        static_net,
        template.clone(),
        template_cpts,
        initial_cpts,
        structure.inter_slice_arcs.clone(),
        structure.bridge_arcs.clone(),
        structure.result_node.clone(),
        structure.baseline_node.clone(),
    )?;
    Ok((spec, report))
}
