//! Reading and cleaning the fixed and daily patient files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use super::schema::{ClinicalSchema, FixedSource};
use super::ClinicalError;

/// Required header of the fixed file, in order.
pub const FIXED_HEADER: [&str; 13] = [
    "patient_id",
    "sex",
    "age",
    "entry_date",
    "exit_date",
    "orig",
    "detorig",
    "priseAnti",
    "knaus",
    "diag",
    "ant",
    "cissue",
    "ni_ever",
];

/// Required header of the long-format daily file.
pub const DAILY_HEADER: [&str; 4] = ["patient_id", "day", "variable", "value"];

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// One admitted patient after cleaning. Cells are raw text; empty cells are
/// absent from `fixed` and missing observations are absent from `days`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientRecord {
    pub patient_id: String,
    /// Fixed-file cells by column name (everything except `patient_id`).
    pub fixed: BTreeMap<String, String>,
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    /// Daily observations by schema variable name; index 0 is day 1.
    pub days: Vec<BTreeMap<String, String>>,
}

impl PatientRecord {
    /// Whole days between entry and exit (0 when discharged the same day).
    pub fn stay_span(&self) -> i64 {
        (self.exit_date - self.entry_date).num_days()
    }

    /// Number of hospitalization days, counting the entry day as day 1.
    pub fn stay_days(&self) -> usize {
        self.stay_span() as usize + 1
    }

    /// Raw input of a fixed variable's derivation: the named cell, with the
    /// entry and exit dates always available, or the stay span.
    pub fn raw_value(&self, source: &FixedSource) -> Option<String> {
        match source.column() {
            None => Some(self.stay_span().to_string()),
            Some("entry_date") => Some(self.entry_date.format(DATE_FORMAT).to_string()),
            Some("exit_date") => Some(self.exit_date.format(DATE_FORMAT).to_string()),
            Some(c) => self.fixed.get(c).cloned(),
        }
    }

    /// The `ni_ever` cell, when present.
    pub fn ni_ever(&self) -> Option<bool> {
        self.fixed.get("ni_ever").map(|v| v == "yes")
    }
}

/// A row that was dropped, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Correction {
    pub file: String,
    pub line: u64,
    pub patient_id: String,
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleaningReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub corrections: Vec<Correction>,
}

impl CleaningReport {
    fn drop_row(&mut self, file: &str, line: u64, patient_id: &str, field: &str, reason: impl Into<String>) {
        self.rows_dropped += 1;
        self.corrections.push(Correction {
            file: file.to_string(),
            line,
            patient_id: patient_id.to_string(),
            field: field.to_string(),
            reason: reason.into(),
        });
    }
}

fn open(path: &Path) -> Result<File, ClinicalError> {
    File::open(path).map_err(|e| ClinicalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Reads both files from disk. See [`ingest_readers`].
pub fn ingest(fixed: &Path, daily: &Path, schema: &ClinicalSchema) -> Result<(Vec<PatientRecord>, CleaningReport), ClinicalError> {
    ingest_readers(open(fixed)?, open(daily)?, schema)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, file: &str, expected: &[&str]) -> Result<bool, ClinicalError> {
    let header = rdr.headers().map_err(|e| ClinicalError::Format(format!("{file} file: {e}")))?;
    if header.is_empty() {
        return Ok(false);
    }
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(ClinicalError::Header {
            file: file.to_string(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(true)
}

/// Parses and cleans the fixed and daily files.
///
/// Rows with unparseable or out-of-schema values, unknown patients, days
/// outside the stay, or duplicate keys are dropped and listed in the report.
/// A header mismatch or a daily variable code absent from the schema is a
/// hard error, since it means the file does not follow the schema at all.
/// An input with no header line at all is treated as empty.
pub fn ingest_readers<F: Read, D: Read>(
    fixed: F,
    daily: D,
    schema: &ClinicalSchema,
) -> Result<(Vec<PatientRecord>, CleaningReport), ClinicalError> {
    let mut report = CleaningReport::default();
    let mut records: Vec<PatientRecord> = Vec::new();
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();

    let mut rdr = reader(fixed);
    if check_header(&mut rdr, "fixed", &FIXED_HEADER)? {
        for (i, row) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|e| ClinicalError::Format(format!("fixed file line {line}: {e}")))?;
            report.rows_read += 1;
            match clean_fixed_row(&row, schema) {
                Ok(rec) => {
                    if by_id.contains_key(&rec.patient_id) {
                        report.drop_row("fixed", line, &rec.patient_id, "patient_id", "duplicate patient_id");
                        continue;
                    }
                    by_id.insert(rec.patient_id.clone(), records.len());
                    records.push(rec);
                    report.rows_kept += 1;
                }
                Err((pid, field, reason)) => report.drop_row("fixed", line, &pid, &field, reason),
            }
        }
    }

    let mut rdr = reader(daily);
    if check_header(&mut rdr, "daily", &DAILY_HEADER)? {
        for (i, row) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|e| ClinicalError::Format(format!("daily file line {line}: {e}")))?;
            report.rows_read += 1;
            let cell = |k: usize| row.get(k).map(str::trim).unwrap_or("");
            let pid = cell(0);
            if row.len() != DAILY_HEADER.len() {
                report.drop_row("daily", line, pid, "", format!("expected {} fields, found {}", DAILY_HEADER.len(), row.len()));
                continue;
            }
            let code = cell(2);
            let var = schema.temporal_by_code(code).ok_or_else(|| ClinicalError::UnknownCode {
                code: code.to_string(),
                line,
            })?;
            let Some(&idx) = by_id.get(pid) else {
                report.drop_row("daily", line, pid, "patient_id", "unknown patient");
                continue;
            };
            let rec = &mut records[idx];
            let day: usize = match cell(1).parse() {
                Ok(d) => d,
                Err(_) => {
                    report.drop_row("daily", line, pid, "day", format!("unparseable day {:?}", cell(1)));
                    continue;
                }
            };
            if day == 0 || day > rec.stay_days() {
                report.drop_row("daily", line, pid, "day", "day out of stay range");
                continue;
            }
            let value = cell(3);
            if value.is_empty() {
                report.drop_row("daily", line, pid, code, "empty value");
                continue;
            }
            if !var.states.iter().any(|s| s == value) {
                report.drop_row("daily", line, pid, code, format!("{value} is not a state of {}", var.name));
                continue;
            }
            if rec.days.len() < day {
                rec.days.resize(day, BTreeMap::new());
            }
            match rec.days[day - 1].get(&var.name) {
                Some(v) if v == value => report.drop_row("daily", line, pid, code, "duplicate observation"),
                Some(_) => report.drop_row("daily", line, pid, code, "conflicting duplicate observation"),
                None => {
                    rec.days[day - 1].insert(var.name.clone(), value.to_string());
                    report.rows_kept += 1;
                }
            }
        }
    }
    for rec in &mut records {
        rec.days.resize(rec.stay_days(), BTreeMap::new());
    }
    Ok((records, report))
}

type RowError = (String, String, String);

fn clean_fixed_row(row: &csv::StringRecord, schema: &ClinicalSchema) -> Result<PatientRecord, RowError> {
    let pid = row.get(0).map(str::trim).unwrap_or("").to_string();
    let fail = |field: &str, reason: String| (pid.clone(), field.to_string(), reason);
    if row.len() != FIXED_HEADER.len() {
        return Err(fail("", format!("expected {} fields, found {}", FIXED_HEADER.len(), row.len())));
    }
    if pid.is_empty() {
        return Err(fail("patient_id", "empty patient_id".into()));
    }
    let mut fixed = BTreeMap::new();
    for (col, cell) in FIXED_HEADER.iter().zip(row.iter()).skip(1) {
        let cell = cell.trim();
        if !cell.is_empty() {
            fixed.insert(col.to_string(), cell.to_string());
        }
    }
    let date = |col: &str| -> Result<NaiveDate, RowError> {
        let raw = fixed.get(col).ok_or_else(|| fail(col, "missing date".into()))?;
        NaiveDate::parse_from_str(raw, DATE_FORMAT).map_err(|_| fail(col, format!("unparseable date {raw:?}")))
    };
    let entry_date = date("entry_date")?;
    let exit_date = date("exit_date")?;
    if exit_date < entry_date {
        return Err(fail("exit_date", "exit date before entry date".into()));
    }
    if let Some(age) = fixed.get("age") {
        match age.parse::<f64>() {
            Ok(a) if a >= 0.0 && a.is_finite() => {}
            _ => return Err(fail("age", format!("invalid age {age:?}"))),
        }
    }
    if let Some(ni) = fixed.get("ni_ever") {
        if ni != "yes" && ni != "no" {
            return Err(fail("ni_ever", format!("ni_ever must be yes or no, got {ni:?}")));
        }
    }
    let rec = PatientRecord {
        patient_id: pid.clone(),
        fixed,
        entry_date,
        exit_date,
        days: Vec::new(),
    };
    for var in &schema.fixed {
        if let Some(raw) = rec.raw_value(&var.source) {
            if let Err(e) = var.derive(&raw) {
                return Err(fail(var.source.column().unwrap_or(&var.name), e.to_string()));
            }
        }
    }
    Ok(rec)
}

/// Writes records back in the file formats read by [`ingest`]. Fixed rows
/// follow `records` order; daily rows are ordered by patient, day, then
/// schema order of the daily variables.
pub fn write_records<F: std::io::Write, D: std::io::Write>(
    records: &[PatientRecord],
    schema: &ClinicalSchema,
    fixed: F,
    daily: D,
) -> Result<(), ClinicalError> {
    let csv_err = |e: csv::Error| ClinicalError::Format(e.to_string());
    let mut w = csv::Writer::from_writer(fixed);
    w.write_record(FIXED_HEADER).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.patient_id.clone()];
        for col in &FIXED_HEADER[1..] {
            row.push(match *col {
                "entry_date" => r.entry_date.format(DATE_FORMAT).to_string(),
                "exit_date" => r.exit_date.format(DATE_FORMAT).to_string(),
                c => r.fixed.get(c).cloned().unwrap_or_default(),
            });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ClinicalError::Format(e.to_string()))?;

    let mut w = csv::Writer::from_writer(daily);
    w.write_record(DAILY_HEADER).map_err(csv_err)?;
    let codes: BTreeSet<&str> = schema.temporal.iter().map(|t| t.name.as_str()).collect();
    for r in records {
        for (d, obs) in r.days.iter().enumerate() {
            for t in &schema.temporal {
                if let Some(v) = obs.get(&t.name) {
                    w.write_record([r.patient_id.as_str(), &(d + 1).to_string(), &t.code, v])
                        .map_err(csv_err)?;
                }
            }
            debug_assert!(obs.keys().all(|k| codes.contains(k.as_str())));
        }
    }
    w.flush().map_err(|e| ClinicalError::Format(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clinical::default_schema;

    const HEADER: &str = "patient_id,sex,age,entry_date,exit_date,orig,detorig,priseAnti,knaus,diag,ant,cissue,ni_ever\n";

    fn fixed(rows: &[&str]) -> String {
        let mut s = HEADER.to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn daily(rows: &[&str]) -> String {
        let mut s = "patient_id,day,variable,value\n".to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    const P1: &str = "p1,M,70,2021-03-01,2021-03-03,home,medical,yes,B,respiratory,no,survived,no";

    #[test]
    fn empty_daily_file_keeps_fixed_data() {
        let (recs, rep) = ingest_readers(fixed(&[P1]).as_bytes(), "".as_bytes(), &default_schema()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].days.len(), 3);
        assert!(recs[0].days.iter().all(BTreeMap::is_empty));
        assert_eq!(rep.rows_dropped, 0);
        let (_, rep) = ingest_readers(fixed(&[P1]).as_bytes(), daily(&[]).as_bytes(), &default_schema()).unwrap();
        assert_eq!(rep.rows_dropped, 0);
    }

    #[test]
    fn day_beyond_the_stay_is_dropped() {
        let d = daily(&["p1,4,act_1,yes", "p1,3,act_1,yes"]);
        let (recs, rep) = ingest_readers(fixed(&[P1]).as_bytes(), d.as_bytes(), &default_schema()).unwrap();
        assert_eq!(rep.rows_dropped, 1);
        assert_eq!(rep.corrections[0].reason, "day out of stay range");
        assert_eq!(recs[0].days[2]["act_1"], "yes");
        assert_eq!(rep.rows_read, rep.rows_kept + rep.rows_dropped);
    }

    #[test]
    fn bad_rows_are_dropped_with_reasons() {
        let f = fixed(&[
            P1,
            "p2,X,70,2021-03-01,2021-03-03,home,medical,yes,B,respiratory,no,survived,no",
            "p3,M,70,2021-03-05,2021-03-03,home,medical,yes,B,respiratory,no,survived,no",
            "p4,M,-1,2021-03-01,2021-03-03,home,medical,yes,B,respiratory,no,survived,no",
            "p1,M,70,2021-03-01,2021-03-03,home,medical,yes,B,respiratory,no,survived,no",
            "p5,M,70,2021-02-30,2021-03-03,home,medical,yes,B,respiratory,no,survived,no",
        ]);
        let d = daily(&["zz,1,act_1,yes", "p1,x,act_1,yes", "p1,1,act_1,maybe", "p1,1,sens,resistant", "p1,1,sens,sensitive"]);
        let (recs, rep) = ingest_readers(f.as_bytes(), d.as_bytes(), &default_schema()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(rep.rows_read, 11);
        assert_eq!(rep.rows_kept, 2);
        assert_eq!(rep.rows_dropped, 9);
        let reasons: Vec<&str> = rep.corrections.iter().map(|c| c.reason.as_str()).collect();
        assert!(reasons.iter().any(|r| r.contains("sex") || r.contains("X")));
        assert!(reasons.contains(&"exit date before entry date"));
        assert!(reasons.contains(&"duplicate patient_id"));
        assert!(reasons.contains(&"unknown patient"));
        assert!(reasons.contains(&"conflicting duplicate observation"));
        assert_eq!(recs[0].days[0]["sens_t"], "resistant");
    }

    #[test]
    fn unknown_daily_code_is_a_hard_error() {
        let d = daily(&["p1,1,act_99,yes"]);
        let err = ingest_readers(fixed(&[P1]).as_bytes(), d.as_bytes(), &default_schema()).unwrap_err();
        assert!(matches!(err, ClinicalError::UnknownCode { ref code, line: 2 } if code == "act_99"));
    }

    #[test]
    fn header_mismatch_is_a_format_error() {
        let err = ingest_readers("id,sex\np1,M\n".as_bytes(), "".as_bytes(), &default_schema()).unwrap_err();
        assert!(matches!(err, ClinicalError::Header { .. }));
    }

    #[test]
    fn written_records_read_back_identically() {
        let d = daily(&["p1,1,act_1,yes", "p1,3,result,yes", "p1,2,sens,not_tested"]);
        let (recs, _) = ingest_readers(fixed(&[P1]).as_bytes(), d.as_bytes(), &default_schema()).unwrap();
        let (mut f, mut dd) = (Vec::new(), Vec::new());
        write_records(&recs, &default_schema(), &mut f, &mut dd).unwrap();
        let (again, rep) = ingest_readers(f.as_slice(), dd.as_slice(), &default_schema()).unwrap();
        assert_eq!(again, recs);
        assert_eq!(rep.rows_dropped, 0);
    }
}
