//! Maximum-likelihood CPT estimation with additive smoothing.

use std::collections::BTreeMap;

use serde::Serialize;

use super::model::{describe_row, Cpt, Network, Variable};
use super::PgmError;

/// Default additive pseudo-count.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Child and parent names of one node, without parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub child: String,
    pub parents: Vec<String>,
}

/// A network skeleton: variables and their parent sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub variables: Vec<Variable>,
    pub families: Vec<Family>,
}

/// Tabular data over named columns. A `None` cell is missing and is left out
/// of every count that would need it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl Dataset {
    pub fn new(columns: Vec<String>) -> Self {
        Dataset {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<String>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// A CPT row that had no data and fell back to uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformFallback {
    pub child: String,
    pub row: String,
}

/// Counts and fallbacks gathered while fitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FitReport {
    pub alpha: f64,
    pub rows_seen: usize,
    /// Per child: number of data rows where the whole family was observed.
    pub family_rows: BTreeMap<String, usize>,
    pub uniform_rows: Vec<UniformFallback>,
}

/// Sufficient statistics for one CPT.
#[derive(Debug, Clone)]
pub struct FamilyCounts {
    child_card: usize,
    parent_cards: Vec<usize>,
    counts: Vec<f64>,
    observed: usize,
}

impl FamilyCounts {
    pub fn new(child_card: usize, parent_cards: Vec<usize>) -> Self {
        let rows: usize = parent_cards.iter().product();
        FamilyCounts {
            child_card,
            parent_cards,
            counts: vec![0.0; rows * child_card],
            observed: 0,
        }
    }

    /// Records one observation; ignored when any family member is missing.
    pub fn observe(&mut self, child: Option<usize>, parents: impl IntoIterator<Item = Option<usize>>) {
        let Some(c) = child else { return };
        let mut row = 0;
        for (p, card) in parents.into_iter().zip(&self.parent_cards) {
            match p {
                Some(s) => row = row * card + s,
                None => return,
            }
        }
        self.counts[row * self.child_card + c] += 1.0;
        self.observed += 1;
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    /// Smoothed estimates; returns the rows and the indices of rows that had
    /// no counts and no smoothing and were set uniform.
    pub fn estimate(&self, alpha: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut uniform = Vec::new();
        for (r, counts) in self.counts.chunks(self.child_card).enumerate() {
            let n: f64 = counts.iter().sum();
            let denom = n + alpha * self.child_card as f64;
            if denom > 0.0 {
                rows.push(counts.iter().map(|c| (c + alpha) / denom).collect());
            } else {
                uniform.push(r);
                rows.push(vec![1.0 / self.child_card as f64; self.child_card]);
            }
        }
        (rows, uniform)
    }
}

/// Fits every CPT of `structure` from `data`.
///
/// Each entry is `(n(child=s, parents=u) + alpha) / (n(parents=u) + alpha*k)`
/// with `k` the child's state count. Parent combinations never seen in the
/// data with `alpha = 0` become uniform rows and are listed in the report.
pub fn fit_parameters(structure: &Structure, data: &Dataset, alpha: f64) -> Result<(Network, FitReport), PgmError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(PgmError::InvalidAlpha(alpha));
    }
    let by_name: BTreeMap<&str, &Variable> = structure.variables.iter().map(|v| (v.name.as_str(), v)).collect();
    let mut columns = Vec::with_capacity(structure.variables.len());
    for v in &structure.variables {
        let c = data
            .column(&v.name)
            .ok_or_else(|| PgmError::MissingColumn(v.name.clone()))?;
        columns.push(c);
    }
    let col_of: BTreeMap<&str, usize> = structure
        .variables
        .iter()
        .zip(&columns)
        .map(|(v, &c)| (v.name.as_str(), c))
        .collect();

    // Map every row to state indices once, rejecting unknown labels.
    let mut encoded: Vec<BTreeMap<&str, Option<usize>>> = Vec::with_capacity(data.len());
    for row in &data.rows {
        let mut e = BTreeMap::new();
        for v in &structure.variables {
            let cell = &row[col_of[v.name.as_str()]];
            let s = match cell {
                None => None,
                Some(label) => Some(v.state_index(label).ok_or_else(|| PgmError::SchemaMismatch {
                    variable: v.name.clone(),
                    state: label.clone(),
                })?),
            };
            e.insert(v.name.as_str(), s);
        }
        encoded.push(e);
    }

    let mut report = FitReport {
        alpha,
        rows_seen: data.len(),
        ..Default::default()
    };
    let mut cpts = Vec::with_capacity(structure.families.len());
    for fam in &structure.families {
        let child = by_name
            .get(fam.child.as_str())
            .ok_or_else(|| PgmError::UnknownVariable(fam.child.clone()))?;
        let parents: Vec<&Variable> = fam
            .parents
            .iter()
            .map(|p| by_name.get(p.as_str()).copied().ok_or_else(|| PgmError::UnknownVariable(p.clone())))
            .collect::<Result<_, _>>()?;
        let mut counts = FamilyCounts::new(child.cardinality(), parents.iter().map(|p| p.cardinality()).collect());
        for e in &encoded {
            counts.observe(e[child.name.as_str()], parents.iter().map(|p| e[p.name.as_str()]));
        }
        let (rows, uniform) = counts.estimate(alpha);
        report.family_rows.insert(child.name.clone(), counts.observed());
        report.uniform_rows.extend(uniform.into_iter().map(|r| UniformFallback {
            child: child.name.clone(),
            row: describe_row(&parents, r),
        }));
        cpts.push(Cpt::new(child.name.clone(), fam.parents.clone(), rows));
    }
    let net = Network::new(structure.variables.clone(), cpts)?;
    Ok((net, report))
}
