//! Discrete Bayesian network representation.
//!
//! A [`Network`] is a DAG of categorical [`Variable`]s with one [`Cpt`] per
//! node. Networks are validated on construction and immutable afterwards, so
//! they can be shared freely between concurrent readers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::PgmError;

/// Row-sum tolerance for networks built in memory.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Row-sum tolerance applied when loading decimal-serialized networks.
pub const LOAD_ROW_SUM_TOLERANCE: f64 = 1e-6;

/// A named categorical random variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    /// Shorthand for a `{yes, no}` variable.
    pub fn boolean(name: impl Into<String>) -> Self {
        Variable::new(name, ["yes", "no"])
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional probability table of `child` given `parents`.
///
/// `rows` is indexed by the parent-state combination in row-major order: the
/// first parent is the most significant digit and each parent's states are
/// enumerated in declaration order. Each row is a distribution over the
/// child's states.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(child: impl Into<String>, parents: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            child: child.into(),
            parents,
            rows,
        }
    }

    /// A root node CPT with a single row.
    pub fn root(child: impl Into<String>, probs: Vec<f64>) -> Self {
        Cpt::new(child, Vec::new(), vec![probs])
    }
}

/// A structural or numerical defect found by [`validate_network`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyName,
    DuplicateVariable(String),
    TooFewStates(String),
    DuplicateState { variable: String, state: String },
    MissingCpt(String),
    DuplicateCpt(String),
    CptForUnknownVariable(String),
    UnknownParent { child: String, parent: String },
    RepeatedParent { child: String, parent: String },
    RowCount { child: String, expected: usize, found: usize },
    RowWidth { child: String, row: String, expected: usize, found: usize },
    EntryOutOfRange { child: String, row: String, value: f64 },
    RowSum { child: String, row: String, sum: f64 },
    Cycle(Vec<String>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyName => write!(f, "variable with empty name"),
            Violation::DuplicateVariable(v) => write!(f, "duplicate variable {v}"),
            Violation::TooFewStates(v) => write!(f, "variable {v} has fewer than 2 states"),
            Violation::DuplicateState { variable, state } => {
                write!(f, "variable {variable} repeats state {state}")
            }
            Violation::MissingCpt(v) => write!(f, "no CPT for variable {v}"),
            Violation::DuplicateCpt(v) => write!(f, "more than one CPT for variable {v}"),
            Violation::CptForUnknownVariable(v) => write!(f, "CPT for unknown variable {v}"),
            Violation::UnknownParent { child, parent } => {
                write!(f, "CPT of {child} names unknown parent {parent}")
            }
            Violation::RepeatedParent { child, parent } => {
                write!(f, "CPT of {child} lists parent {parent} twice")
            }
            Violation::RowCount { child, expected, found } => {
                write!(f, "CPT of {child} has {found} rows, expected {expected}")
            }
            Violation::RowWidth { child, row, expected, found } => {
                write!(f, "CPT of {child} row {row} has {found} entries, expected {expected}")
            }
            Violation::EntryOutOfRange { child, row, value } => {
                write!(f, "CPT of {child} row {row} has entry {value} outside [0,1]")
            }
            Violation::RowSum { child, row, sum } => {
                write!(f, "CPT of {child} row {row} sums to {sum}")
            }
            Violation::Cycle(nodes) => write!(f, "cycle through {}", nodes.join(",")),
        }
    }
}

/// Describes parent combination `row` of a family as `{A=a, B=b}`.
pub(crate) fn describe_row(parents: &[&Variable], row: usize) -> String {
    if parents.is_empty() {
        return "{}".to_string();
    }
    let states = decode_row(parents.iter().map(|p| p.cardinality()), row);
    let parts: Vec<String> = parents
        .iter()
        .zip(states)
        .map(|(p, s)| format!("{}={}", p.name, p.states[s]))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Splits a flat row index into per-parent state indices.
pub(crate) fn decode_row(cards: impl DoubleEndedIterator<Item = usize> + ExactSizeIterator, mut row: usize) -> Vec<usize> {
    let cards: Vec<usize> = cards.collect();
    let mut out = vec![0; cards.len()];
    for (i, &c) in cards.iter().enumerate().rev() {
        out[i] = row % c;
        row /= c;
    }
    out
}

/// Checks every [`Network`] invariant over raw parts and returns all
/// violations found. An empty vector means the parts form a valid network.
pub fn validate_network(variables: &[Variable], cpts: &[Cpt], tolerance: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut by_name: HashMap<&str, &Variable> = HashMap::new();
    for v in variables {
        if v.name.is_empty() {
            out.push(Violation::EmptyName);
        }
        if by_name.insert(v.name.as_str(), v).is_some() {
            out.push(Violation::DuplicateVariable(v.name.clone()));
        }
        if v.states.len() < 2 {
            out.push(Violation::TooFewStates(v.name.clone()));
        }
        let mut seen = HashSet::new();
        for s in &v.states {
            if !seen.insert(s) {
                out.push(Violation::DuplicateState {
                    variable: v.name.clone(),
                    state: s.clone(),
                });
            }
        }
    }

    let mut cpt_of: HashMap<&str, &Cpt> = HashMap::new();
    for cpt in cpts {
        if !by_name.contains_key(cpt.child.as_str()) {
            out.push(Violation::CptForUnknownVariable(cpt.child.clone()));
            continue;
        }
        if cpt_of.insert(cpt.child.as_str(), cpt).is_some() {
            out.push(Violation::DuplicateCpt(cpt.child.clone()));
        }
    }
    for v in variables {
        if !cpt_of.contains_key(v.name.as_str()) {
            out.push(Violation::MissingCpt(v.name.clone()));
        }
    }

    for cpt in cpts {
        let Some(child) = by_name.get(cpt.child.as_str()) else {
            continue;
        };
        let mut parents = Vec::with_capacity(cpt.parents.len());
        let mut seen = HashSet::new();
        let mut ok = true;
        for p in &cpt.parents {
            if !seen.insert(p.as_str()) {
                out.push(Violation::RepeatedParent {
                    child: cpt.child.clone(),
                    parent: p.clone(),
                });
                ok = false;
            }
            match by_name.get(p.as_str()) {
                Some(var) => parents.push(*var),
                None => {
                    out.push(Violation::UnknownParent {
                        child: cpt.child.clone(),
                        parent: p.clone(),
                    });
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        out.extend(check_rows(&cpt.child, child, &parents, &cpt.rows, tolerance));
    }

    if let Some(cycle) = find_cycle(variables, cpts) {
        out.push(Violation::Cycle(cycle));
    }
    out
}

/// Shape, range and normalization checks for the rows of one CPT.
pub(crate) fn check_rows(
    label: &str,
    child: &Variable,
    parents: &[&Variable],
    rows: &[Vec<f64>],
    tolerance: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let expected: usize = parents.iter().map(|p| p.cardinality()).product();
    if rows.len() != expected {
        out.push(Violation::RowCount {
            child: label.to_string(),
            expected,
            found: rows.len(),
        });
        return out;
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != child.cardinality() {
            out.push(Violation::RowWidth {
                child: label.to_string(),
                row: describe_row(parents, r),
                expected: child.cardinality(),
                found: row.len(),
            });
            continue;
        }
        if let Some(&bad) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            out.push(Violation::EntryOutOfRange {
                child: label.to_string(),
                row: describe_row(parents, r),
                value: bad,
            });
            continue;
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            out.push(Violation::RowSum {
                child: label.to_string(),
                row: describe_row(parents, r),
                sum,
            });
        }
    }
    out
}

/// Returns the nodes of one directed cycle, if the arc set has any.
fn find_cycle(variables: &[Variable], cpts: &[Cpt]) -> Option<Vec<String>> {
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    // children adjacency
    let mut children = vec![Vec::new(); variables.len()];
    for cpt in cpts {
        let Some(&c) = index.get(cpt.child.as_str()) else {
            continue;
        };
        for p in &cpt.parents {
            if let Some(&pi) = index.get(p.as_str()) {
                children[pi].push(c);
            }
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; variables.len()];
    let mut stack_path: Vec<usize> = Vec::new();
    for start in 0..variables.len() {
        if color[start] != 0 {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        stack_path.push(start);
        while let Some(&mut (node, ref mut next)) = work.last_mut() {
            if *next < children[node].len() {
                let child = children[node][*next];
                *next += 1;
                match color[child] {
                    0 => {
                        color[child] = 1;
                        stack_path.push(child);
                        work.push((child, 0));
                    }
                    1 => {
                        let pos = stack_path.iter().position(|&n| n == child).unwrap_or(0);
                        return Some(
                            stack_path[pos..]
                                .iter()
                                .map(|&n| variables[n].name.clone())
                                .collect(),
                        );
                    }
                    _ => {}
                }
            } else {
                color[node] = 2;
                stack_path.pop();
                work.pop();
            }
        }
    }
    None
}

/// A validated discrete Bayesian network.
#[derive(Debug, Clone)]
pub struct Network {
    variables: Vec<Variable>,
    // aligned with `variables`
    cpts: Vec<Cpt>,
    index: HashMap<String, usize>,
    parent_ids: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.cpts == other.cpts
    }
}

impl Network {
    /// Builds a network, rejecting it with every violation if any invariant
    /// fails. CPTs may be given in any order.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self, PgmError> {
        Self::with_tolerance(variables, cpts, ROW_SUM_TOLERANCE)
    }

    pub(crate) fn with_tolerance(variables: Vec<Variable>, cpts: Vec<Cpt>, tolerance: f64) -> Result<Self, PgmError> {
        let violations = validate_network(&variables, &cpts, tolerance);
        if !violations.is_empty() {
            return Err(PgmError::InvalidNetwork(violations));
        }
        let index: HashMap<String, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let mut slots: Vec<Option<Cpt>> = vec![None; variables.len()];
        for mut cpt in cpts {
            if tolerance > ROW_SUM_TOLERANCE {
                for row in &mut cpt.rows {
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= s);
                }
            }
            let i = index[&cpt.child];
            slots[i] = Some(cpt);
        }
        let cpts: Vec<Cpt> = slots.into_iter().map(|c| c.expect("validated")).collect();
        let parent_ids: Vec<Vec<usize>> = cpts
            .iter()
            .map(|c| c.parents.iter().map(|p| index[p]).collect())
            .collect();
        let topo = topological_order(&parent_ids);
        Ok(Network {
            variables,
            cpts,
            index,
            parent_ids,
            topo,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index_of(name).map(|i| &self.variables[i])
    }

    pub fn cpt(&self, name: &str) -> Option<&Cpt> {
        self.index_of(name).map(|i| &self.cpts[i])
    }

    pub fn parents_of(&self, id: usize) -> &[usize] {
        &self.parent_ids[id]
    }

    pub fn cardinality(&self, id: usize) -> usize {
        self.variables[id].cardinality()
    }

    /// Node ids in an order where every parent precedes its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn arc_count(&self) -> usize {
        self.parent_ids.iter().map(Vec::len).sum()
    }

    /// Index of the CPT row selected by the parent states in `states`.
    pub(crate) fn row_index(&self, id: usize, states: &[usize]) -> usize {
        self.parent_ids[id]
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + states[p])
    }

    /// p(X_id = states[id] | parents as in `states`).
    pub(crate) fn local_probability(&self, id: usize, states: &[usize]) -> f64 {
        self.cpts[id].rows[self.row_index(id, states)][states[id]]
    }

    /// Total number of joint states, saturating at `u128::MAX`.
    pub fn joint_state_count(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.cardinality() as u128))
    }

    /// Resolves an assignment to per-node state indices.
    pub fn resolve(&self, assignment: &Assignment) -> Result<Vec<Option<usize>>, PgmError> {
        let mut out = vec![None; self.variables.len()];
        for (name, state) in assignment.iter() {
            let id = self
                .index_of(name)
                .ok_or_else(|| PgmError::UnknownVariable(name.to_string()))?;
            let s = self.variables[id]
                .state_index(state)
                .ok_or_else(|| PgmError::InvalidState {
                    variable: name.to_string(),
                    state: state.to_string(),
                })?;
            out[id] = Some(s);
        }
        Ok(out)
    }

    /// Converts per-node state indices back into a named assignment.
    pub fn assignment_from_states(&self, states: &[usize]) -> Assignment {
        let mut a = Assignment::new();
        for (v, &s) in self.variables.iter().zip(states) {
            a.insert(v.name.clone(), v.states[s].clone());
        }
        a
    }

    /// The parameter-free skeleton of this network.
    pub fn structure(&self) -> super::Structure {
        super::Structure {
            variables: self.variables.clone(),
            families: self
                .cpts
                .iter()
                .map(|c| super::Family {
                    child: c.child.clone(),
                    parents: c.parents.clone(),
                })
                .collect(),
        }
    }
}

fn topological_order(parent_ids: &[Vec<usize>]) -> Vec<usize> {
    let n = parent_ids.len();
    let mut indegree: Vec<usize> = parent_ids.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parent_ids.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in children[i].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    order
}

/// Variable name to state label bindings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn insert(&mut self, variable: impl Into<String>, state: impl Into<String>) -> Option<String> {
        self.0.insert(variable.into(), state.into())
    }

    pub fn with(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.insert(variable, state);
        self
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.0.get(variable).map(String::as_str)
    }

    pub fn remove(&mut self, variable: &str) -> Option<String> {
        self.0.remove(variable)
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.0.contains_key(variable)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Copies every binding into `other`, overwriting on collision.
    pub fn extend_from(&mut self, other: &Assignment) {
        for (k, v) in other.iter() {
            self.insert(k, v);
        }
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// A probability vector over the states of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub variable: String,
    pub states: Vec<String>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn prob(&self, state: &str) -> Option<f64> {
        self.states.iter().position(|s| s == state).map(|i| self.probs[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> (Vec<Variable>, Vec<Cpt>) {
        (
            vec![Variable::new("A", ["0", "1"]), Variable::new("B", ["0", "1"])],
            vec![
                Cpt::root("A", vec![0.5, 0.5]),
                Cpt::new("B", vec!["A".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            ],
        )
    }

    #[test]
    fn well_formed_two_node_net_is_ok() {
        let (vars, cpts) = two_node();
        assert!(validate_network(&vars, &cpts, ROW_SUM_TOLERANCE).is_empty());
        let net = Network::new(vars, cpts).unwrap();
        assert_eq!(net.topological_order(), &[0, 1]);
        assert_eq!(net.arc_count(), 1);
    }

    #[test]
    fn two_cycle_is_reported() {
        let vars = vec![Variable::new("A", ["0", "1"]), Variable::new("B", ["0", "1"])];
        let cpts = vec![
            Cpt::new("A", vec!["B".into()], vec![vec![0.5, 0.5]; 2]),
            Cpt::new("B", vec!["A".into()], vec![vec![0.5, 0.5]; 2]),
        ];
        let v = validate_network(&vars, &cpts, ROW_SUM_TOLERANCE);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "cycle through A,B");
    }

    #[test]
    fn bad_row_sum_names_the_row() {
        let (vars, mut cpts) = two_node();
        cpts[1].rows[1] = vec![0.2, 0.7];
        let v = validate_network(&vars, &cpts, ROW_SUM_TOLERANCE);
        assert_eq!(v.len(), 1);
        match &v[0] {
            Violation::RowSum { child, row, sum } => {
                assert_eq!(child, "B");
                assert_eq!(row, "{A=1}");
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_defects_are_all_listed() {
        let vars = vec![
            Variable::new("A", ["x"]),
            Variable::new("A", ["0", "0"]),
            Variable::new("", ["0", "1"]),
        ];
        let cpts = vec![
            Cpt::root("A", vec![1.0]),
            Cpt::new("Z", vec![], vec![vec![1.0]]),
            Cpt::new("", vec!["Q".into()], vec![]),
        ];
        let v = validate_network(&vars, &cpts, ROW_SUM_TOLERANCE);
        let text: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert!(v.contains(&Violation::DuplicateVariable("A".into())));
        assert!(v.contains(&Violation::TooFewStates("A".into())));
        assert!(v.contains(&Violation::EmptyName));
        assert!(v.contains(&Violation::CptForUnknownVariable("Z".into())));
        assert!(text.iter().any(|t| t.contains("unknown parent Q")));
        assert!(text.iter().any(|t| t.contains("repeats state 0")));
    }

    #[test]
    fn row_count_and_range_checked() {
        let (vars, mut cpts) = two_node();
        cpts[0].rows[0] = vec![1.5, -0.5];
        cpts[1].rows.pop();
        let v = validate_network(&vars, &cpts, ROW_SUM_TOLERANCE);
        assert!(v.iter().any(|x| matches!(x, Violation::EntryOutOfRange { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::RowCount { expected: 2, found: 1, .. })));
    }

    #[test]
    fn resolve_rejects_unknown_names_and_states() {
        let (vars, cpts) = two_node();
        let net = Network::new(vars, cpts).unwrap();
        assert!(matches!(
            net.resolve(&Assignment::new().with("C", "0")),
            Err(PgmError::UnknownVariable(_))
        ));
        assert!(matches!(
            net.resolve(&Assignment::new().with("A", "2")),
            Err(PgmError::InvalidState { .. })
        ));
        assert_eq!(
            net.resolve(&Assignment::new().with("B", "1")).unwrap(),
            vec![None, Some(1)]
        );
    }

    #[test]
    fn row_decoding_is_first_parent_major() {
        assert_eq!(decode_row([2usize, 3].into_iter(), 4), vec![1, 1]);
        assert_eq!(decode_row([2usize, 3].into_iter(), 2), vec![0, 2]);
    }
}
