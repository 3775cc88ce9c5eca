//! Built-in ICU schema, model structure and ground-truth parameters.
//!
//! Fixed variables: sex, age1, periode_entr, orig, detorig, priseAnti, knaus,
//! cissue, diag, ant, result, plus dsj (length of stay, derived from the entry
//! and exit dates). Daily variables: act_1..act_10, examinf_1..examinf_30,
//! sens_t and the daily infection state result_t.

use super::schema::{ClinicalSchema, FixedSource, FixedVariable, Role, TemporalVariable};
use crate::dbn::{DbnSpec, DbnStructure};
use crate::pgm::{Cpt, Family, Network, Structure, Variable};

pub const ACT_COUNT: usize = 10;
pub const EXAM_COUNT: usize = 30;
pub const RESULT_STATIC: &str = "result";
pub const RESULT_DAILY: &str = "result_t";

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn categorical(name: &str, states: &[&str]) -> FixedVariable {
    FixedVariable {
        name: name.into(),
        states: strings(states),
        source: FixedSource::Categorical { column: name.into() },
        role: Role::Evidence,
    }
}

const YES_NO: &[&str] = &["yes", "no"];

/// Fixed-file columns and daily-file codes of the built-in schema.
pub fn default_schema() -> ClinicalSchema {
    let months = strings(&[
        "winter", "winter", "spring", "spring", "spring", "summer", "summer", "summer", "autumn", "autumn", "autumn",
        "winter",
    ]);
    let fixed = vec![
        categorical("sex", &["M", "F"]),
        FixedVariable {
            name: "age1".into(),
            states: strings(&["0-15", "16-40", "41-65", "66+"]),
            source: FixedSource::Bins {
                column: "age".into(),
                edges: vec![0.0, 16.0, 41.0, 66.0],
            },
            role: Role::Evidence,
        },
        FixedVariable {
            name: "periode_entr".into(),
            states: strings(&["winter", "spring", "summer", "autumn"]),
            source: FixedSource::Season {
                column: "entry_date".into(),
                months,
            },
            role: Role::Evidence,
        },
        categorical("orig", &["home", "ward", "other_hospital"]),
        categorical("detorig", &["medical", "surgical", "trauma"]),
        categorical("priseAnti", YES_NO),
        categorical("knaus", &["A", "B", "C", "D"]),
        categorical("cissue", &["survived", "dead"]),
        categorical("diag", &["cardiovascular", "respiratory", "neurological", "digestive", "other"]),
        categorical("ant", YES_NO),
        FixedVariable {
            name: RESULT_STATIC.into(),
            states: strings(YES_NO),
            source: FixedSource::Categorical {
                column: "ni_ever".into(),
            },
            role: Role::Outcome,
        },
        FixedVariable {
            name: "dsj".into(),
            states: strings(&["0-2d", "3-7d", "8-14d", "15d+"]),
            source: FixedSource::StayDays {
                edges: vec![0.0, 3.0, 8.0, 15.0],
            },
            role: Role::Evidence,
        },
    ];
    let mut temporal = Vec::new();
    for i in 1..=ACT_COUNT {
        let n = format!("act_{i}");
        temporal.push(TemporalVariable {
            name: n.clone(),
            code: n,
            states: strings(YES_NO),
            role: Role::Evidence,
        });
    }
    for i in 1..=EXAM_COUNT {
        let n = format!("examinf_{i}");
        temporal.push(TemporalVariable {
            name: n.clone(),
            code: n,
            states: strings(YES_NO),
            role: Role::Evidence,
        });
    }
    temporal.push(TemporalVariable {
        name: "sens_t".into(),
        code: "sens".into(),
        states: strings(&["sensitive", "resistant", "not_tested"]),
        role: Role::Evidence,
    });
    temporal.push(TemporalVariable {
        name: RESULT_DAILY.into(),
        code: "result".into(),
        states: strings(YES_NO),
        role: Role::Outcome,
    });
    ClinicalSchema { fixed, temporal }
}

fn static_parents(name: &str) -> Vec<String> {
    let p: &[&str] = match name {
        "result" => &[],
        "detorig" => &["orig", "result"],
        "priseAnti" | "ant" => &["age1", "result"],
        "cissue" => &["age1"],
        _ => &["result"],
    };
    strings(p)
}

/// The default graph: the static result node feeds most fixed variables and
/// every day's result_t; each day's observations depend on that day's
/// result_t; result_t depends on the previous day's result_t.
pub fn default_structure() -> DbnStructure {
    let schema = default_schema();
    let variables: Vec<Variable> = schema.fixed.iter().map(FixedVariable::variable).collect();
    let families = variables
        .iter()
        .map(|v| Family {
            child: v.name.clone(),
            parents: static_parents(&v.name),
        })
        .collect();
    let template_variables: Vec<Variable> = schema.temporal.iter().map(TemporalVariable::variable).collect();
    let template_parents = template_variables
        .iter()
        .map(|v| {
            if v.name == RESULT_DAILY {
                vec![format!("{RESULT_DAILY}@prev"), RESULT_STATIC.to_string()]
            } else {
                vec![RESULT_DAILY.to_string()]
            }
        })
        .collect();
    DbnStructure {
        static_slice: Structure { variables, families },
        template_variables,
        template_parents,
        inter_slice_arcs: vec![(RESULT_DAILY.into(), RESULT_DAILY.into())],
        bridge_arcs: vec![(RESULT_STATIC.into(), RESULT_DAILY.into())],
        result_node: RESULT_DAILY.into(),
        baseline_node: Some(RESULT_STATIC.into()),
    }
}

fn yes_rows(p_yes: &[f64]) -> Vec<Vec<f64>> {
    p_yes.iter().map(|&p| vec![p, 1.0 - p]).collect()
}

fn static_rows(name: &str) -> Vec<Vec<f64>> {
    match name {
        "result" => yes_rows(&[0.3]),
        "sex" => yes_rows(&[0.65, 0.55]),
        "age1" => vec![vec![0.05, 0.2, 0.4, 0.35], vec![0.1, 0.3, 0.35, 0.25]],
        "periode_entr" => vec![vec![0.3, 0.25, 0.2, 0.25], vec![0.25; 4]],
        "orig" => vec![vec![0.3, 0.4, 0.3], vec![0.6, 0.3, 0.1]],
        // rows: (orig, result) with orig most significant
        "detorig" => vec![
            vec![0.6, 0.2, 0.2],
            vec![0.7, 0.2, 0.1],
            vec![0.3, 0.5, 0.2],
            vec![0.4, 0.5, 0.1],
            vec![0.4, 0.3, 0.3],
            vec![0.5, 0.3, 0.2],
        ],
        // rows: (age1, result)
        "priseAnti" => yes_rows(&[0.5, 0.3, 0.6, 0.4, 0.7, 0.5, 0.8, 0.6]),
        "ant" => yes_rows(&[0.2, 0.1, 0.35, 0.25, 0.5, 0.4, 0.65, 0.55]),
        "knaus" => vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.3, 0.3, 0.25, 0.15]],
        "cissue" => vec![vec![0.95, 0.05], vec![0.9, 0.1], vec![0.8, 0.2], vec![0.65, 0.35]],
        "diag" => vec![vec![0.3, 0.3, 0.15, 0.15, 0.1], vec![0.25, 0.2, 0.2, 0.15, 0.2]],
        "dsj" => vec![vec![0.05, 0.35, 0.35, 0.25], vec![0.3, 0.45, 0.15, 0.1]],
        other => unreachable!("no default rows for {other}"),
    }
}

fn template_rows(name: &str) -> Vec<Vec<f64>> {
    if let Some(i) = name.strip_prefix("act_").and_then(|s| s.parse::<usize>().ok()) {
        let k = (i % 5) as f64;
        yes_rows(&[0.55 + 0.01 * k, 0.4])
    } else if let Some(j) = name.strip_prefix("examinf_").and_then(|s| s.parse::<usize>().ok()) {
        let k = (j % 10) as f64;
        yes_rows(&[0.2 + 0.002 * k, 0.1])
    } else if name == "sens_t" {
        vec![vec![0.3, 0.2, 0.5], vec![0.15, 0.1, 0.75]]
    } else if name == RESULT_DAILY {
        // rows: (result_t@prev, result); an acquired infection persists
        yes_rows(&[1.0, 1.0, 0.35, 0.01])
    } else {
        unreachable!("no default rows for {name}")
    }
}

/// A fully parameterized model on [`default_structure`], used as the
/// simulator's ground truth and as the starting model before any learning.
pub fn default_ground_truth() -> DbnSpec {
    let structure = default_structure();
    let cpts = structure
        .static_slice
        .families
        .iter()
        .map(|f| Cpt::new(f.child.clone(), f.parents.clone(), static_rows(&f.child)))
        .collect();
    let static_slice = Network::new(structure.static_slice.variables.clone(), cpts).expect("default static slice is valid");
    let template_cpts = structure
        .template_variables
        .iter()
        .zip(&structure.template_parents)
        .map(|(v, p)| Cpt::new(v.name.clone(), p.clone(), template_rows(&v.name)))
        .collect();
    // day 1: rows by the static result
    let initial = vec![Cpt::new(RESULT_DAILY, vec![RESULT_STATIC.into()], yes_rows(&[0.3, 0.02]))];
    DbnSpec::new(
        static_slice,
        structure.template_variables,
        template_cpts,
        initial,
        structure.inter_slice_arcs,
        structure.bridge_arcs,
        structure.result_node,
        structure.baseline_node,
    )
    .expect("default ground truth is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::unroll;

    #[test]
    fn default_schema_validates_and_matches_the_model() {
        let schema = default_schema();
        schema.validate().unwrap();
        schema.check_model(&default_ground_truth()).unwrap();
    }

    #[test]
    fn default_template_has_acts_exams_sens_and_result() {
        let spec = default_ground_truth();
        assert_eq!(spec.template_variables().len(), ACT_COUNT + EXAM_COUNT + 2);
        assert_eq!(spec.static_slice().len(), 12);
        let net = unroll(&spec, 3).unwrap();
        assert_eq!(net.len(), 12 + 3 * 42);
    }

    #[test]
    fn structure_round_trips_through_the_spec() {
        assert_eq!(default_ground_truth().structure(), &default_structure());
    }
}
