//! Sampling synthetic patients from a ground-truth model.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::clinical::{bin, write_records, ClinicalSchema, FixedSource, PatientRecord, Role, DATE_FORMAT};
use crate::dbn::{sample_days, DbnSpec};
use crate::pgm::sample_states_given;

/// Distribution of the number of hospitalization days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StayLength {
    /// Uniform over `min..=max` days.
    Uniform { min: usize, max: usize },
    /// `weights[i]` is the relative weight of a stay of `i + 1` days.
    Categorical { weights: Vec<f64> },
}

impl Default for StayLength {
    fn default() -> Self {
        StayLength::Uniform { min: 3, max: 10 }
    }
}

impl StayLength {
    fn validate(&self) -> Result<(), SynthError> {
        match self {
            StayLength::Uniform { min, max } if *min >= 1 && min <= max => Ok(()),
            StayLength::Uniform { min, max } => Err(SynthError::Config(format!(
                "stay length range {min}..={max} must be non-empty and start at 1 or more"
            ))),
            StayLength::Categorical { weights } => {
                if weights.iter().all(|w| w.is_finite() && *w >= 0.0) && weights.iter().sum::<f64>() > 0.0 {
                    Ok(())
                } else {
                    Err(SynthError::Config("stay length weights must be non-negative with a positive sum".into()))
                }
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            StayLength::Uniform { min, max } => rng.random_range(*min..=*max),
            StayLength::Categorical { weights } => {
                let total: f64 = weights.iter().sum();
                let row: Vec<f64> = weights.iter().map(|w| w / total).collect();
                crate::pgm::draw(&row, rng) + 1
            }
        }
    }
}

/// Everything that determines a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_patients: usize,
    #[serde(default)]
    pub stay_length: StayLength,
    pub seed: u64,
    /// Entry dates fall within the year starting here.
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date")
}

impl CohortConfig {
    pub fn new(n_patients: usize, seed: u64) -> Self {
        CohortConfig {
            n_patients,
            stay_length: StayLength::default(),
            seed,
            start_date: default_start(),
        }
    }
}

/// Samples `cfg.n_patients` patients.
///
/// Each patient uses its own generator stream derived from the seed and its
/// index, so output is deterministic and independent of evaluation order.
/// The stay length is drawn first; a stay-length variable in the model is
/// clamped to the matching bin and the static slice is sampled given it.
/// Raw file values are then chosen inside the sampled states (ages inside
/// the age bin, entry dates inside the season). `ni_ever` is `yes` exactly
/// when the daily outcome is `yes` on some day of the stay.
pub fn generate_cohort(spec: &DbnSpec, schema: &ClinicalSchema, cfg: &CohortConfig) -> Result<Vec<PatientRecord>, SynthError> {
    if cfg.n_patients == 0 {
        return Err(SynthError::Config("n_patients must be at least 1".into()));
    }
    cfg.stay_length.validate()?;
    schema.check_model(spec)?;
    let width = cfg.n_patients.to_string().len().max(4);
    (0..cfg.n_patients)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            sample_patient(spec, schema, cfg, format!("P{:0width$}", i + 1), &mut rng)
        })
        .collect()
}

fn sample_patient(
    spec: &DbnSpec,
    schema: &ClinicalSchema,
    cfg: &CohortConfig,
    patient_id: String,
    rng: &mut ChaCha8Rng,
) -> Result<PatientRecord, SynthError> {
    let stay = cfg.stay_length.draw(rng);
    let statics = spec.static_slice();
    let mut evidence = vec![None; statics.len()];
    for f in &schema.fixed {
        if let FixedSource::StayDays { edges } = &f.source {
            let id = statics.index_of(&f.name).expect("schema checked against model");
            evidence[id] = Some(bin((stay - 1) as f64, edges).ok_or_else(|| {
                SynthError::Config(format!("a stay of {stay} days falls outside every bin of {}", f.name))
            })?);
        }
    }
    let static_states = sample_states_given(statics, &evidence, rng).map_err(crate::dbn::DbnError::from)?;
    let seq = sample_days(spec, static_states, stay, rng);

    let outcome_idx = spec.compiled().result;
    let yes = spec.compiled().result_yes;
    let ever = seq.days.iter().any(|d| d[outcome_idx] == yes);

    let state_of = |name: &str| -> &str {
        let id = statics.index_of(name).expect("schema checked against model");
        &statics.variables()[id].states[seq.static_states[id]]
    };
    let mut fixed = BTreeMap::new();
    let mut entry_month: Option<u32> = None;
    for f in &schema.fixed {
        let state = state_of(&f.name);
        match &f.source {
            FixedSource::Categorical { column } => {
                let value = if f.role == Role::Outcome {
                    if ever { "yes" } else { "no" }
                } else {
                    state
                };
                fixed.insert(column.clone(), value.to_string());
            }
            FixedSource::Bins { column, edges } => {
                let i = f.states.iter().position(|s| s == state).expect("state of variable");
                fixed.insert(column.clone(), raw_in_bin(edges, i, rng));
            }
            FixedSource::Season { months, .. } => {
                let candidates: Vec<u32> = (0..12).filter(|&m| months[m as usize] == state).collect();
                entry_month = Some(candidates[rng.random_range(0..candidates.len())]);
            }
            FixedSource::StayDays { .. } => {}
        }
    }
    fixed.entry("ni_ever".to_string()).or_insert_with(|| if ever { "yes" } else { "no" }.to_string());
    let entry_date = match entry_month {
        Some(m) => NaiveDate::from_ymd_opt(cfg.start_date.year(), m + 1, rng.random_range(1..=28)).expect("valid day"),
        None => cfg.start_date + Days::new(rng.random_range(0..365)),
    };
    let exit_date = entry_date + Days::new(stay as u64 - 1);
    fixed.insert("entry_date".into(), entry_date.format(DATE_FORMAT).to_string());
    fixed.insert("exit_date".into(), exit_date.format(DATE_FORMAT).to_string());

    let template = spec.template_variables();
    let days = seq
        .days
        .iter()
        .map(|d| {
            template
                .iter()
                .zip(d)
                .map(|(v, &s)| (v.name.clone(), v.states[s].clone()))
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    Ok(PatientRecord {
        patient_id,
        fixed,
        entry_date,
        exit_date,
        days,
    })
}

/// A raw number inside bin `i`; whole numbers when the bin edges are whole.
/// The open last bin is given the width of the one before it.
fn raw_in_bin<R: Rng + ?Sized>(edges: &[f64], i: usize, rng: &mut R) -> String {
    let lo = edges[i];
    let hi = match edges.get(i + 1) {
        Some(&h) => h,
        None if edges.len() > 1 => lo + (edges[i] - edges[i - 1]).max(1.0),
        None => lo + 1.0,
    };
    if lo.fract() == 0.0 && hi.fract() == 0.0 {
        let v = rng.random_range(lo as i64..hi as i64);
        return v.to_string();
    }
    let v = lo + (hi - lo) * rng.random::<f64>();
    let s = format!("{v:.2}");
    match s.parse::<f64>() {
        Ok(x) if bin(x, edges) == Some(i) => s,
        _ => lo.to_string(),
    }
}

/// Paths and settings of a written cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub config: CohortConfig,
    pub ground_truth: String,
    pub fixed_file: String,
    pub daily_file: String,
    pub patients: usize,
    pub patient_days: usize,
}

pub const FIXED_FILE: &str = "fixed.csv";
pub const DAILY_FILE: &str = "daily.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn io_err(path: &Path, e: std::io::Error) -> SynthError {
    SynthError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `fixed.csv`, `daily.csv` and `manifest.json` into `dir` (created
/// if needed). `ground_truth` describes where the model came from.
pub fn write_cohort(
    dir: &Path,
    records: &[PatientRecord],
    schema: &ClinicalSchema,
    cfg: &CohortConfig,
    ground_truth: &str,
) -> Result<Manifest, SynthError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let (mut fixed, mut daily) = (Vec::new(), Vec::new());
    write_records(records, schema, &mut fixed, &mut daily)?;
    let write = |name: &str, bytes: &[u8]| -> Result<PathBuf, SynthError> {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        Ok(p)
    };
    write(FIXED_FILE, &fixed)?;
    write(DAILY_FILE, &daily)?;
    let manifest = Manifest {
        generator: format!("nirisk {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        ground_truth: ground_truth.to_string(),
        fixed_file: FIXED_FILE.into(),
        daily_file: DAILY_FILE.into(),
        patients: records.len(),
        patient_days: records.iter().map(|r| r.days.len()).sum(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(MANIFEST_FILE, text.as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clinical::{default_ground_truth, default_schema, ingest_readers};

    #[test]
    fn one_patient_one_day() {
        let mut cfg = CohortConfig::new(1, 5);
        cfg.stay_length = StayLength::Uniform { min: 1, max: 1 };
        let recs = generate_cohort(&default_ground_truth(), &default_schema(), &cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].days.len(), 1);
        assert_eq!(recs[0].entry_date, recs[0].exit_date);
    }

    #[test]
    fn same_seed_same_records_and_reingest_drops_nothing() {
        let cfg = CohortConfig::new(20, 11);
        let (spec, schema) = (default_ground_truth(), default_schema());
        let a = generate_cohort(&spec, &schema, &cfg).unwrap();
        assert_eq!(a, generate_cohort(&spec, &schema, &cfg).unwrap());
        let (mut f, mut d) = (Vec::new(), Vec::new());
        write_records(&a, &schema, &mut f, &mut d).unwrap();
        let (back, report) = ingest_readers(f.as_slice(), d.as_slice(), &schema).unwrap();
        assert_eq!(report.rows_dropped, 0);
        assert_eq!(back, a);
    }

    #[test]
    fn raw_values_land_in_their_bins() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let edges = [0.0, 16.0, 41.0, 66.0];
        for i in 0..4 {
            for _ in 0..50 {
                let v: f64 = raw_in_bin(&edges, i, &mut rng).parse().unwrap();
                assert_eq!(bin(v, &edges), Some(i));
            }
        }
        let frac = [0.5, 1.25];
        for _ in 0..50 {
            let v: f64 = raw_in_bin(&frac, 0, &mut rng).parse().unwrap();
            assert_eq!(bin(v, &frac), Some(0));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (spec, schema) = (default_ground_truth(), default_schema());
        assert!(generate_cohort(&spec, &schema, &CohortConfig::new(0, 1)).is_err());
        let mut cfg = CohortConfig::new(1, 1);
        cfg.stay_length = StayLength::Uniform { min: 0, max: 3 };
        assert!(generate_cohort(&spec, &schema, &cfg).is_err());
    }
}
