//! Comparing learned parameters with the ground truth.

use serde::Serialize;

use super::SynthError;
use crate::dbn::{DbnSpec, ParentRef};
use crate::pgm::{describe_row, Cpt, Variable};

/// L1 distance between one learned CPT row and its ground-truth row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDistance {
    /// `static:<node>`, `template:<node>` or `initial:<node>`.
    pub table: String,
    pub row: String,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub rows: Vec<RowDistance>,
    pub max_l1: f64,
    pub mean_l1: f64,
}

impl RecoveryReport {
    /// The row with the largest distance.
    pub fn worst(&self) -> Option<&RowDistance> {
        self.rows.iter().max_by(|a, b| a.l1.total_cmp(&b.l1))
    }
}

fn compare(table: String, parents: &[&Variable], truth: &Cpt, learned: &Cpt, out: &mut Vec<RowDistance>) {
    for (r, (a, b)) in truth.rows.iter().zip(&learned.rows).enumerate() {
        out.push(RowDistance {
            table: table.clone(),
            row: describe_row(parents, r),
            l1: a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        });
    }
}

/// Per-row L1 distances over every CPT of two specs with identical structure.
pub fn recovery_report(ground_truth: &DbnSpec, learned: &DbnSpec) -> Result<RecoveryReport, SynthError> {
    if ground_truth.structure() != learned.structure() {
        return Err(SynthError::StructureMismatch);
    }
    let mut rows = Vec::new();
    let statics = ground_truth.static_slice();
    for (id, (t, l)) in statics.cpts().iter().zip(learned.static_slice().cpts()).enumerate() {
        let parents: Vec<&Variable> = statics.parents_of(id).iter().map(|&p| &statics.variables()[p]).collect();
        compare(format!("static:{}", t.child), &parents, t, l, &mut rows);
    }
    let template = ground_truth.template_variables();
    let resolve = |refs: &[ParentRef]| -> Vec<&Variable> {
        refs.iter()
            .map(|r| match *r {
                ParentRef::Static(s) => &statics.variables()[s],
                ParentRef::Current(k) | ParentRef::Previous(k) => &template[k],
            })
            .collect()
    };
    let compiled = ground_truth.compiled();
    for (j, (t, l)) in ground_truth.template_cpts().iter().zip(learned.template_cpts()).enumerate() {
        compare(
            format!("template:{}", t.child),
            &resolve(&compiled.transition_parents[j]),
            t,
            l,
            &mut rows,
        );
    }
    for (j, (t, l)) in ground_truth.initial_cpts().iter().zip(learned.initial_cpts()).enumerate() {
        if let (Some(t), Some(l), Some(refs)) = (t, l, &compiled.initial_parents[j]) {
            compare(format!("initial:{}", t.child), &resolve(refs), t, l, &mut rows);
        }
    }
    let max_l1 = rows.iter().map(|r| r.l1).fold(0.0, f64::max);
    let mean_l1 = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.l1).sum::<f64>() / rows.len() as f64
    };
    Ok(RecoveryReport { rows, max_l1, mean_l1 })
}
