//! JSON file format for networks.
//!
//! ```json
//! {"variables": [{"name": "C", "states": ["yes", "no"]}],
//!  "cpts": [{"child": "C", "parents": [], "rows": [{"given": {}, "probs": [0.2, 0.8]}]}]}
//! ```
//!
//! Rows are keyed by their parent states, so their order in the file does
//! not matter. Loading re-validates everything with a row-sum tolerance of
//! 1e-6 and renormalizes accepted rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::learn::{Family, Structure};
use super::model::{decode_row, Cpt, Network, Variable, LOAD_ROW_SUM_TOLERANCE};
use super::PgmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub variables: Vec<Variable>,
    pub cpts: Vec<CptFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptFile {
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
    /// Omitted in structure-only files.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<RowFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFile {
    #[serde(default)]
    pub given: BTreeMap<String, String>,
    pub probs: Vec<f64>,
}

/// Looks up a variable by name, used to interpret `given` maps.
pub(crate) trait VariableLookup {
    fn lookup(&self, name: &str) -> Option<&Variable>;
}

impl VariableLookup for BTreeMap<&str, &Variable> {
    fn lookup(&self, name: &str) -> Option<&Variable> {
        self.get(name).copied()
    }
}

impl CptFile {
    /// Encodes a CPT with rows in canonical parent order.
    pub(crate) fn encode(cpt: &Cpt, vars: &impl VariableLookup) -> CptFile {
        let parents: Vec<&Variable> = cpt
            .parents
            .iter()
            .map(|p| vars.lookup(p).expect("parent of a validated cpt"))
            .collect();
        let rows = cpt
            .rows
            .iter()
            .enumerate()
            .map(|(r, probs)| {
                let states = decode_row(parents.iter().map(|p| p.cardinality()), r);
                RowFile {
                    given: cpt
                        .parents
                        .iter()
                        .zip(&parents)
                        .zip(states)
                        .map(|((name, var), s)| (name.clone(), var.states[s].clone()))
                        .collect(),
                    probs: probs.clone(),
                }
            })
            .collect();
        CptFile {
            child: cpt.child.clone(),
            parents: cpt.parents.clone(),
            rows,
        }
    }

    /// Places keyed rows into canonical order. Rows naming unknown parent
    /// states, duplicated keys, or missing keys are format errors; numeric
    /// checks are left to network validation.
    pub(crate) fn decode(&self, vars: &impl VariableLookup) -> Result<Cpt, PgmError> {
        let mut parents = Vec::with_capacity(self.parents.len());
        for p in &self.parents {
            parents.push(vars.lookup(p).ok_or_else(|| PgmError::Format(format!("CPT of {} names unknown parent {p}", self.child)))?);
        }
        let n_rows: usize = parents.iter().map(|p| p.cardinality()).product();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; n_rows];
        for row in &self.rows {
            if row.given.len() != parents.len() {
                return Err(PgmError::Format(format!(
                    "CPT of {}: row {:?} must bind exactly the parents {:?}",
                    self.child, row.given, self.parents
                )));
            }
            let mut idx = 0;
            for (name, var) in self.parents.iter().zip(&parents) {
                let label = row.given.get(name).ok_or_else(|| {
                    PgmError::Format(format!("CPT of {}: row {:?} does not bind parent {name}", self.child, row.given))
                })?;
                let s = var.state_index(label).ok_or_else(|| PgmError::InvalidState {
                    variable: name.clone(),
                    state: label.clone(),
                })?;
                idx = idx * var.cardinality() + s;
            }
            if rows[idx].replace(row.probs.clone()).is_some() {
                return Err(PgmError::Format(format!("CPT of {}: duplicate row {:?}", self.child, row.given)));
            }
        }
        if let Some(missing) = rows.iter().position(Option::is_none) {
            let states = decode_row(parents.iter().map(|p| p.cardinality()), missing);
            let given: Vec<String> = parents
                .iter()
                .zip(states)
                .map(|(p, s)| format!("{}={}", p.name, p.states[s]))
                .collect();
            return Err(PgmError::Format(format!(
                "CPT of {}: missing row {{{}}}",
                self.child,
                given.join(", ")
            )));
        }
        Ok(Cpt::new(
            self.child.clone(),
            self.parents.clone(),
            rows.into_iter().map(Option::unwrap).collect(),
        ))
    }
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        let vars: BTreeMap<&str, &Variable> = net.variables().iter().map(|v| (v.name.as_str(), v)).collect();
        NetworkFile {
            variables: net.variables().to_vec(),
            cpts: net.cpts().iter().map(|c| CptFile::encode(c, &vars)).collect(),
        }
    }
}

impl TryFrom<NetworkFile> for Network {
    type Error = PgmError;

    fn try_from(file: NetworkFile) -> Result<Self, Self::Error> {
        let vars: BTreeMap<&str, &Variable> = file.variables.iter().map(|v| (v.name.as_str(), v)).collect();
        let cpts = file
            .cpts
            .iter()
            .map(|c| c.decode(&vars))
            .collect::<Result<Vec<_>, _>>()?;
        Network::with_tolerance(file.variables.clone(), cpts, LOAD_ROW_SUM_TOLERANCE)
    }
}

impl From<&NetworkFile> for Structure {
    fn from(file: &NetworkFile) -> Self {
        Structure {
            variables: file.variables.clone(),
            families: file
                .cpts
                .iter()
                .map(|c| Family {
                    child: c.child.clone(),
                    parents: c.parents.clone(),
                })
                .collect(),
        }
    }
}

impl Serialize for Network {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        NetworkFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = NetworkFile::deserialize(deserializer)?;
        Network::try_from(file).map_err(serde::de::Error::custom)
    }
}

impl Network {
    pub fn from_json(text: &str) -> Result<Self, PgmError> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| PgmError::Format(e.to_string()))?;
        Network::try_from(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&NetworkFile::from(self)).expect("network serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
      "variables": [{"name": "A", "states": ["1", "0"]}, {"name": "B", "states": ["1", "0"]}],
      "cpts": [
        {"child": "B", "parents": ["A"], "rows": [
          {"given": {"A": "0"}, "probs": [0.3, 0.7]},
          {"given": {"A": "1"}, "probs": [0.8, 0.2]}]},
        {"child": "A", "parents": [], "rows": [{"given": {}, "probs": [0.5, 0.5]}]}
      ]}"#;

    #[test]
    fn rows_are_placed_by_key() {
        let net = Network::from_json(CHAIN).unwrap();
        assert_eq!(net.cpt("B").unwrap().rows, vec![vec![0.8, 0.2], vec![0.3, 0.7]]);
        let again = Network::from_json(&net.to_json()).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn loose_decimal_rows_load_and_renormalize() {
        let text = CHAIN.replace("[0.3, 0.7]", "[0.3333334, 0.6666667]");
        let net = Network::from_json(&text).unwrap();
        let row = &net.cpt("B").unwrap().rows[1];
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rows_outside_load_tolerance_are_rejected() {
        let text = CHAIN.replace("[0.3, 0.7]", "[0.3, 0.6]");
        match Network::from_json(&text) {
            Err(PgmError::InvalidNetwork(v)) => assert!(v[0].to_string().contains("{A=0}")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_and_duplicate_rows_are_format_errors() {
        let missing = CHAIN.replace(r#"{"given": {"A": "0"}, "probs": [0.3, 0.7]},"#, "");
        assert!(matches!(Network::from_json(&missing), Err(PgmError::Format(m)) if m.contains("missing row {A=0}")));
        let dup = CHAIN.replace(r#"{"given": {"A": "0"}"#, r#"{"given": {"A": "1"}"#);
        assert!(matches!(Network::from_json(&dup), Err(PgmError::Format(m)) if m.contains("duplicate")));
    }
}
