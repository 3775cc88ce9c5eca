//! Two-part dynamic network specification.
//!
//! A spec has an admission-time static slice, a daily slice template and two
//! kinds of arcs into the template: inter-slice arcs from the previous day and
//! bridge arcs from static nodes. Inside template CPTs a previous-day parent
//! is written `name@prev`; a static parent uses its plain static name.
//!
//! Template nodes with a previous-day parent carry a second, day-1 CPT whose
//! parents are the template parents with the `@prev` ones removed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DbnError;
use crate::pgm::{
    Cpt, CptFile, Network, NetworkFile, Structure, Variable, VariableLookup, Violation, LOAD_ROW_SUM_TOLERANCE,
    ROW_SUM_TOLERANCE,
};

/// Suffix marking a previous-day parent inside template CPTs.
pub const PREV_SUFFIX: &str = "@prev";

/// Name of a template node instantiated on `day`.
pub fn at_day(name: &str, day: usize) -> String {
    format!("{name}@{day}")
}

/// Where a template node's parent lives relative to the node's own day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentRef {
    /// Static-slice node id.
    Static(usize),
    /// Template node id on the same day.
    Current(usize),
    /// Template node id on the previous day.
    Previous(usize),
}

/// Structure of a dynamic network without any probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnStructure {
    pub static_slice: Structure,
    pub template_variables: Vec<Variable>,
    /// Parent names per template variable, aligned with `template_variables`.
    pub template_parents: Vec<Vec<String>>,
    pub inter_slice_arcs: Vec<(String, String)>,
    pub bridge_arcs: Vec<(String, String)>,
    pub result_node: String,
    pub baseline_node: Option<String>,
}

/// Resolved indices for a validated structure.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Compiled {
    pub static_index: BTreeMap<String, usize>,
    pub template_index: BTreeMap<String, usize>,
    pub transition_parents: Vec<Vec<ParentRef>>,
    /// `Some` only for nodes with a previous-day parent.
    pub initial_parents: Vec<Option<Vec<ParentRef>>>,
    pub template_order: Vec<usize>,
    /// Template nodes with an outgoing inter-slice arc.
    pub interface: Vec<usize>,
    /// Static nodes with an outgoing bridge arc.
    pub bridge_sources: Vec<usize>,
    pub result: usize,
    pub result_yes: usize,
    pub baseline: Option<(usize, usize)>,
}

impl DbnStructure {
    /// Checks the structural invariants and resolves every parent reference.
    pub(crate) fn compile(&self) -> Result<Compiled, DbnError> {
        let mut problems = Vec::new();
        let static_index: BTreeMap<String, usize> = self
            .static_slice
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let mut template_index = BTreeMap::new();
        for (i, v) in self.template_variables.iter().enumerate() {
            if v.name.contains('@') {
                problems.push(format!("template variable {} may not contain '@'", v.name));
            }
            if static_index.contains_key(&v.name) {
                problems.push(format!("template variable {} shadows a static variable", v.name));
            }
            if template_index.insert(v.name.clone(), i).is_some() {
                problems.push(format!("duplicate template variable {}", v.name));
            }
            if v.states.len() < 2 {
                problems.push(format!("template variable {} has fewer than 2 states", v.name));
            }
            let distinct: BTreeSet<&String> = v.states.iter().collect();
            if distinct.len() != v.states.len() {
                problems.push(format!("template variable {} repeats a state", v.name));
            }
        }
        for v in &self.static_slice.variables {
            if v.name.contains('@') {
                problems.push(format!("static variable {} may not contain '@'", v.name));
            }
        }
        if self.template_parents.len() != self.template_variables.len() {
            problems.push("every template variable needs exactly one CPT".to_string());
            return Err(DbnError::Spec(problems));
        }

        let mut transition_parents = Vec::with_capacity(self.template_variables.len());
        let mut derived_inter = BTreeSet::new();
        let mut derived_bridge = BTreeSet::new();
        for (j, parents) in self.template_parents.iter().enumerate() {
            let child = &self.template_variables[j].name;
            let mut refs = Vec::with_capacity(parents.len());
            let mut seen = BTreeSet::new();
            for p in parents {
                if !seen.insert(p) {
                    problems.push(format!("CPT of {child} lists parent {p} twice"));
                }
                if let Some(base) = p.strip_suffix(PREV_SUFFIX) {
                    match template_index.get(base) {
                        Some(&k) => {
                            refs.push(ParentRef::Previous(k));
                            derived_inter.insert((base.to_string(), child.clone()));
                        }
                        None => problems.push(format!("CPT of {child}: {p} is not a template variable")),
                    }
                } else if let Some(&k) = template_index.get(p) {
                    refs.push(ParentRef::Current(k));
                } else if let Some(&s) = static_index.get(p) {
                    refs.push(ParentRef::Static(s));
                    derived_bridge.insert((p.clone(), child.clone()));
                } else {
                    problems.push(format!("CPT of {child} names unknown parent {p}"));
                }
            }
            transition_parents.push(refs);
        }

        let declared_inter: BTreeSet<(String, String)> = self.inter_slice_arcs.iter().cloned().collect();
        for (from, to) in &declared_inter {
            if !template_index.contains_key(from) || !template_index.contains_key(to) {
                problems.push(format!(
                    "inter-slice arc {from} -> {to} must connect template variables"
                ));
            }
        }
        if declared_inter != derived_inter {
            problems.push(format!(
                "inter-slice arcs {:?} do not match the @prev parents in template CPTs {:?}",
                declared_inter, derived_inter
            ));
        }
        let declared_bridge: BTreeSet<(String, String)> = self.bridge_arcs.iter().cloned().collect();
        for (from, to) in &declared_bridge {
            if !static_index.contains_key(from) || !template_index.contains_key(to) {
                problems.push(format!("bridge arc {from} -> {to} must go from a static to a template variable"));
            }
        }
        if declared_bridge != derived_bridge {
            problems.push(format!(
                "bridge arcs {:?} do not match the static parents in template CPTs {:?}",
                declared_bridge, derived_bridge
            ));
        }

        let result = match template_index.get(&self.result_node) {
            Some(&r) => r,
            None => {
                problems.push(format!("result node {} is not a template variable", self.result_node));
                0
            }
        };
        let result_yes = if template_index.contains_key(&self.result_node) {
            let states: BTreeSet<&str> = self.template_variables[result].states.iter().map(String::as_str).collect();
            if states != BTreeSet::from(["yes", "no"]) {
                problems.push(format!("result node {} must have states {{yes, no}}", self.result_node));
            }
            self.template_variables[result].state_index("yes").unwrap_or(0)
        } else {
            0
        };
        let baseline = match &self.baseline_node {
            None => None,
            Some(name) => match static_index.get(name) {
                Some(&b) => match self.static_slice.variables[b].state_index("yes") {
                    Some(y) => Some((b, y)),
                    None => {
                        problems.push(format!("baseline node {name} has no state yes"));
                        None
                    }
                },
                None => {
                    problems.push(format!("baseline node {name} is not a static variable"));
                    None
                }
            },
        };

        let template_order = match intra_order(&transition_parents) {
            Some(o) => o,
            None => {
                problems.push("intra-slice arcs form a cycle".to_string());
                Vec::new()
            }
        };
        if !problems.is_empty() {
            return Err(DbnError::Spec(problems));
        }

        let initial_parents = transition_parents
            .iter()
            .map(|refs| {
                if refs.iter().any(|r| matches!(r, ParentRef::Previous(_))) {
                    Some(refs.iter().copied().filter(|r| !matches!(r, ParentRef::Previous(_))).collect())
                } else {
                    None
                }
            })
            .collect();
        let interface: BTreeSet<usize> = transition_parents
            .iter()
            .flatten()
            .filter_map(|r| match r {
                ParentRef::Previous(k) => Some(*k),
                _ => None,
            })
            .collect();
        let bridge_sources: BTreeSet<usize> = transition_parents
            .iter()
            .flatten()
            .filter_map(|r| match r {
                ParentRef::Static(s) => Some(*s),
                _ => None,
            })
            .collect();
        Ok(Compiled {
            static_index,
            template_index,
            transition_parents,
            initial_parents,
            template_order,
            interface: interface.into_iter().collect(),
            bridge_sources: bridge_sources.into_iter().collect(),
            result,
            result_yes,
            baseline,
        })
    }

    /// Day-1 parent names of template node `j` (previous-day parents dropped).
    pub fn initial_parent_names(&self, j: usize) -> Vec<String> {
        self.template_parents[j]
            .iter()
            .filter(|p| !p.ends_with(PREV_SUFFIX))
            .cloned()
            .collect()
    }

    pub fn has_initial_cpt(&self, j: usize) -> bool {
        self.template_parents[j].iter().any(|p| p.ends_with(PREV_SUFFIX))
    }
}

fn intra_order(parents: &[Vec<ParentRef>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (c, refs) in parents.iter().enumerate() {
        for r in refs {
            if let ParentRef::Current(p) = r {
                indegree[c] += 1;
                children[*p].push(c);
            }
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
    (order.len() == n).then_some(order)
}

/// A fully parameterized dynamic network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnSpec {
    structure: DbnStructure,
    static_slice: Network,
    template_cpts: Vec<Cpt>,
    initial_cpts: Vec<Option<Cpt>>,
    compiled: Compiled,
}

impl DbnSpec {
    /// Validates and assembles a spec. `template_cpts` and `initial_cpts` may
    /// be in any order; exactly the template nodes with previous-day parents
    /// need an initial CPT.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        static_slice: Network,
        template_variables: Vec<Variable>,
        template_cpts: Vec<Cpt>,
        initial_cpts: Vec<Cpt>,
        inter_slice_arcs: Vec<(String, String)>,
        bridge_arcs: Vec<(String, String)>,
        result_node: impl Into<String>,
        baseline_node: Option<String>,
    ) -> Result<Self, DbnError> {
        Self::build(
            static_slice,
            template_variables,
            template_cpts,
            initial_cpts,
            inter_slice_arcs,
            bridge_arcs,
            result_node.into(),
            baseline_node,
            ROW_SUM_TOLERANCE,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        static_slice: Network,
        template_variables: Vec<Variable>,
        template_cpts: Vec<Cpt>,
        initial_cpts: Vec<Cpt>,
        inter_slice_arcs: Vec<(String, String)>,
        bridge_arcs: Vec<(String, String)>,
        result_node: String,
        baseline_node: Option<String>,
        tolerance: f64,
    ) -> Result<Self, DbnError> {
        let mut problems = Vec::new();
        let index: BTreeMap<String, usize> = template_variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let mut slots: Vec<Option<Cpt>> = vec![None; template_variables.len()];
        for cpt in template_cpts {
            match index.get(cpt.child.as_str()) {
                Some(&j) => {
                    if slots[j].is_some() {
                        problems.push(format!("more than one CPT for template variable {}", cpt.child));
                    }
                    slots[j] = Some(cpt);
                }
                None => problems.push(format!("CPT for unknown template variable {}", cpt.child)),
            }
        }
        for (j, s) in slots.iter().enumerate() {
            if s.is_none() {
                problems.push(format!("no CPT for template variable {}", template_variables[j].name));
            }
        }
        if !problems.is_empty() {
            return Err(DbnError::Spec(problems));
        }
        let template_cpts: Vec<Cpt> = slots.into_iter().map(Option::unwrap).collect();
        let structure = DbnStructure {
            static_slice: static_slice.structure(),
            template_parents: template_cpts.iter().map(|c| c.parents.clone()).collect(),
            template_variables,
            inter_slice_arcs,
            bridge_arcs,
            result_node,
            baseline_node,
        };
        let compiled = structure.compile()?;

        let mut init_slots: Vec<Option<Cpt>> = vec![None; structure.template_variables.len()];
        for cpt in initial_cpts {
            match index.get(cpt.child.as_str()) {
                Some(&j) if structure.has_initial_cpt(j) => {
                    if cpt.parents != structure.initial_parent_names(j) {
                        problems.push(format!(
                            "initial CPT of {} must have parents {:?}",
                            cpt.child,
                            structure.initial_parent_names(j)
                        ));
                    }
                    if init_slots[j].replace(cpt).is_some() {
                        problems.push(format!("more than one initial CPT for {}", structure.template_variables[j].name));
                    }
                }
                Some(_) => problems.push(format!(
                    "{} has no previous-day parent and takes no initial CPT",
                    cpt.child
                )),
                None => problems.push(format!("initial CPT for unknown template variable {}", cpt.child)),
            }
        }
        for (j, (v, slot)) in structure.template_variables.iter().zip(&init_slots).enumerate() {
            if structure.has_initial_cpt(j) && slot.is_none() {
                problems.push(format!("missing initial CPT for {}", v.name));
            }
        }
        if !problems.is_empty() {
            return Err(DbnError::Spec(problems));
        }

        let mut violations: Vec<Violation> = Vec::new();
        let mut template_cpts = template_cpts;
        for (j, cpt) in template_cpts.iter_mut().enumerate() {
            let child = &structure.template_variables[j];
            let parents = parent_variables(&structure, &static_slice, &compiled.transition_parents[j]);
            violations.extend(crate::pgm::check_rows(&cpt.child, child, &parents, &cpt.rows, tolerance));
            renormalize(cpt, tolerance);
        }
        for (j, slot) in init_slots.iter_mut().enumerate() {
            if let (Some(cpt), Some(refs)) = (slot.as_mut(), &compiled.initial_parents[j]) {
                let child = &structure.template_variables[j];
                let parents = parent_variables(&structure, &static_slice, refs);
                let label = format!("{} (day 1)", cpt.child);
                violations.extend(crate::pgm::check_rows(&label, child, &parents, &cpt.rows, tolerance));
                renormalize(cpt, tolerance);
            }
        }
        if !violations.is_empty() {
            return Err(DbnError::Network(crate::pgm::PgmError::InvalidNetwork(violations)));
        }
        Ok(DbnSpec {
            structure,
            static_slice,
            template_cpts,
            initial_cpts: init_slots,
            compiled,
        })
    }

    pub fn structure(&self) -> &DbnStructure {
        &self.structure
    }

    pub fn static_slice(&self) -> &Network {
        &self.static_slice
    }

    pub fn template_variables(&self) -> &[Variable] {
        &self.structure.template_variables
    }

    pub fn template_variable(&self, name: &str) -> Option<&Variable> {
        self.compiled
            .template_index
            .get(name)
            .map(|&j| &self.structure.template_variables[j])
    }

    /// Template CPTs aligned with [`Self::template_variables`].
    pub fn template_cpts(&self) -> &[Cpt] {
        &self.template_cpts
    }

    /// Day-1 CPTs aligned with [`Self::template_variables`].
    pub fn initial_cpts(&self) -> &[Option<Cpt>] {
        &self.initial_cpts
    }

    pub fn inter_slice_arcs(&self) -> &[(String, String)] {
        &self.structure.inter_slice_arcs
    }

    pub fn bridge_arcs(&self) -> &[(String, String)] {
        &self.structure.bridge_arcs
    }

    pub fn result_node(&self) -> &str {
        &self.structure.result_node
    }

    pub fn baseline_node(&self) -> Option<&str> {
        self.structure.baseline_node.as_deref()
    }

    pub(crate) fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    /// Arcs between template nodes of the same day.
    pub fn intra_arc_count(&self) -> usize {
        self.compiled
            .transition_parents
            .iter()
            .flatten()
            .filter(|r| matches!(r, ParentRef::Current(_)))
            .count()
    }

    /// CPT used for template node `j` on `day` (1-based).
    pub(crate) fn cpt_for_day(&self, j: usize, day: usize) -> (&Cpt, &[ParentRef]) {
        match (&self.initial_cpts[j], &self.compiled.initial_parents[j]) {
            (Some(init), Some(refs)) if day == 1 => (init, refs),
            _ => (&self.template_cpts[j], &self.compiled.transition_parents[j]),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, DbnError> {
        let file: DbnSpecFile = serde_json::from_str(text).map_err(|e| DbnError::Format(e.to_string()))?;
        DbnSpec::try_from(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&DbnSpecFile::from(self)).expect("spec serializes");
        s.push('\n');
        s
    }
}

fn renormalize(cpt: &mut Cpt, tolerance: f64) {
    if tolerance > ROW_SUM_TOLERANCE {
        for row in &mut cpt.rows {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
}

fn parent_variables<'a>(structure: &'a DbnStructure, static_slice: &'a Network, refs: &[ParentRef]) -> Vec<&'a Variable> {
    refs.iter()
        .map(|r| match *r {
            ParentRef::Static(s) => &static_slice.variables()[s],
            ParentRef::Current(k) | ParentRef::Previous(k) => &structure.template_variables[k],
        })
        .collect()
}

/// On-disk form of a [`DbnSpec`]. With CPT rows omitted it doubles as the
/// structure file read by the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnSpecFile {
    pub static_slice: NetworkFile,
    pub slice_template: TemplateFile,
    #[serde(default)]
    pub inter_slice_arcs: Vec<[String; 2]>,
    #[serde(default)]
    pub bridge_arcs: Vec<[String; 2]>,
    pub result_node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_node: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateFile {
    pub variables: Vec<Variable>,
    pub cpts: Vec<CptFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_cpts: Vec<CptFile>,
}

/// Resolves plain, `@prev` and static names inside template CPTs.
struct TemplateLookup<'a> {
    template: BTreeMap<&'a str, &'a Variable>,
    statics: BTreeMap<&'a str, &'a Variable>,
}

impl<'a> TemplateLookup<'a> {
    fn new(template: &'a [Variable], statics: &'a [Variable]) -> Self {
        TemplateLookup {
            template: template.iter().map(|v| (v.name.as_str(), v)).collect(),
            statics: statics.iter().map(|v| (v.name.as_str(), v)).collect(),
        }
    }
}

impl VariableLookup for TemplateLookup<'_> {
    fn lookup(&self, name: &str) -> Option<&Variable> {
        let base = name.strip_suffix(PREV_SUFFIX).unwrap_or(name);
        self.template
            .get(base)
            .or_else(|| if base == name { self.statics.get(name) } else { None })
            .copied()
    }
}

fn arcs(pairs: &[[String; 2]]) -> Vec<(String, String)> {
    pairs.iter().map(|[a, b]| (a.clone(), b.clone())).collect()
}

impl TryFrom<DbnSpecFile> for DbnSpec {
    type Error = DbnError;

    fn try_from(file: DbnSpecFile) -> Result<Self, Self::Error> {
        let static_slice = Network::try_from(file.static_slice.clone())?;
        let lookup = TemplateLookup::new(&file.slice_template.variables, static_slice.variables());
        let cpts = file
            .slice_template
            .cpts
            .iter()
            .map(|c| c.decode(&lookup))
            .collect::<Result<Vec<_>, _>>()?;
        let initial = file
            .slice_template
            .initial_cpts
            .iter()
            .map(|c| c.decode(&lookup))
            .collect::<Result<Vec<_>, _>>()?;
        DbnSpec::build(
            static_slice,
            file.slice_template.variables.clone(),
            cpts,
            initial,
            arcs(&file.inter_slice_arcs),
            arcs(&file.bridge_arcs),
            file.result_node,
            file.baseline_node,
            LOAD_ROW_SUM_TOLERANCE,
        )
    }
}

impl From<&DbnSpec> for DbnSpecFile {
    fn from(spec: &DbnSpec) -> Self {
        let lookup = TemplateLookup::new(spec.template_variables(), spec.static_slice.variables());
        DbnSpecFile {
            static_slice: NetworkFile::from(&spec.static_slice),
            slice_template: TemplateFile {
                variables: spec.template_variables().to_vec(),
                cpts: spec.template_cpts.iter().map(|c| CptFile::encode(c, &lookup)).collect(),
                initial_cpts: spec
                    .initial_cpts
                    .iter()
                    .flatten()
                    .map(|c| CptFile::encode(c, &lookup))
                    .collect(),
            },
            inter_slice_arcs: spec.inter_slice_arcs().iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
            bridge_arcs: spec.bridge_arcs().iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
            result_node: spec.structure.result_node.clone(),
            baseline_node: spec.structure.baseline_node.clone(),
        }
    }
}

impl TryFrom<&DbnSpecFile> for DbnStructure {
    type Error = DbnError;

    fn try_from(file: &DbnSpecFile) -> Result<Self, Self::Error> {
        let mut by_child: BTreeMap<&str, &CptFile> = BTreeMap::new();
        for c in &file.slice_template.cpts {
            if by_child.insert(c.child.as_str(), c).is_some() {
                return Err(DbnError::Spec(vec![format!("more than one CPT for template variable {}", c.child)]));
            }
        }
        let mut template_parents = Vec::new();
        for v in &file.slice_template.variables {
            match by_child.remove(v.name.as_str()) {
                Some(c) => template_parents.push(c.parents.clone()),
                None => return Err(DbnError::Spec(vec![format!("no CPT for template variable {}", v.name)])),
            }
        }
        if let Some(extra) = by_child.keys().next() {
            return Err(DbnError::Spec(vec![format!("CPT for unknown template variable {extra}")]));
        }
        let static_slice = Structure::from(&file.static_slice);
        let static_check = crate::pgm::validate_network(
            &static_slice.variables,
            &static_slice
                .families
                .iter()
                .map(|f| {
                    // placeholder uniform rows: only the graph is being checked
                    let rows: usize = f
                        .parents
                        .iter()
                        .map(|p| {
                            static_slice
                                .variables
                                .iter()
                                .find(|v| &v.name == p)
                                .map_or(1, Variable::cardinality)
                        })
                        .product();
                    let k = static_slice
                        .variables
                        .iter()
                        .find(|v| v.name == f.child)
                        .map_or(1, Variable::cardinality);
                    Cpt::new(f.child.clone(), f.parents.clone(), vec![vec![1.0 / k as f64; k]; rows])
                })
                .collect::<Vec<_>>(),
            ROW_SUM_TOLERANCE,
        );
        if !static_check.is_empty() {
            return Err(DbnError::Network(crate::pgm::PgmError::InvalidNetwork(static_check)));
        }
        let structure = DbnStructure {
            static_slice,
            template_variables: file.slice_template.variables.clone(),
            template_parents,
            inter_slice_arcs: arcs(&file.inter_slice_arcs),
            bridge_arcs: arcs(&file.bridge_arcs),
            result_node: file.result_node.clone(),
            baseline_node: file.baseline_node.clone(),
        };
        structure.compile()?;
        Ok(structure)
    }
}

impl DbnStructure {
    pub fn from_json(text: &str) -> Result<Self, DbnError> {
        let file: DbnSpecFile = serde_json::from_str(text).map_err(|e| DbnError::Format(e.to_string()))?;
        DbnStructure::try_from(&file)
    }

    /// Structure-only file (CPT rows omitted).
    pub fn to_json(&self) -> String {
        let cpt = |child: &str, parents: &[String]| CptFile {
            child: child.to_string(),
            parents: parents.to_vec(),
            rows: Vec::new(),
        };
        let file = DbnSpecFile {
            static_slice: NetworkFile {
                variables: self.static_slice.variables.clone(),
                cpts: self.static_slice.families.iter().map(|f| cpt(&f.child, &f.parents)).collect(),
            },
            slice_template: TemplateFile {
                variables: self.template_variables.clone(),
                cpts: self
                    .template_variables
                    .iter()
                    .zip(&self.template_parents)
                    .map(|(v, p)| cpt(&v.name, p))
                    .collect(),
                initial_cpts: Vec::new(),
            },
            inter_slice_arcs: self.inter_slice_arcs.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
            bridge_arcs: self.bridge_arcs.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
            result_node: self.result_node.clone(),
            baseline_node: self.baseline_node.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("structure serializes");
        s.push('\n');
        s
    }
}
