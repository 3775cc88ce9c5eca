//! Exact per-day filtering of the result node.
//!
//! [`FilterState`] runs a forward recursion over a belief about the nodes
//! that connect consecutive days: the static nodes with bridge arcs and the
//! template nodes with inter-slice arcs. Each step multiplies the belief by
//! one day's CPTs (with that day's evidence clamped), eliminates everything
//! except the next belief's scope and the result node, and renormalizes.
//! The unrolled route ([`filter_unrolled`]) answers the same query on the flat
//! network and serves as the consistency check.

use serde::{Deserialize, Serialize};

use super::spec::{at_day, DbnSpec, ParentRef};
use super::unroll::unroll;
use super::DbnError;
use crate::pgm::{
    eliminate, posterior, posterior_enumeration, posterior_factor, Assignment, Cpt, Distribution, Factor, PgmError,
};

/// Static evidence plus one (possibly partial) assignment per day, day 1
/// first. The result node is never bound.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTimeline {
    #[serde(rename = "static", default)]
    pub static_evidence: Assignment,
    #[serde(default)]
    pub days: Vec<Assignment>,
}

impl EvidenceTimeline {
    pub fn new(static_evidence: Assignment) -> Self {
        EvidenceTimeline {
            static_evidence,
            days: Vec::new(),
        }
    }

    pub fn with_day(mut self, day: Assignment) -> Self {
        self.days.push(day);
        self
    }

    /// The first `days` days of this timeline.
    pub fn prefix(&self, days: usize) -> EvidenceTimeline {
        EvidenceTimeline {
            static_evidence: self.static_evidence.clone(),
            days: self.days[..days.min(self.days.len())].to_vec(),
        }
    }

    /// Flat evidence for the unrolled network, days `1..=through`.
    pub fn unrolled_evidence(&self, through: usize) -> Assignment {
        let mut ev = self.static_evidence.clone();
        for (i, day) in self.days.iter().take(through).enumerate() {
            for (name, state) in day.iter() {
                ev.insert(at_day(name, i + 1), state);
            }
        }
        ev
    }
}

/// One point of a risk trajectory. Day 0 is the admission baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub day: usize,
    pub probability: f64,
}

/// Per-day probability that the result node is `yes`, ascending by day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub points: Vec<TracePoint>,
}

impl PredictionTrace {
    pub fn baseline(&self) -> Option<f64> {
        self.points.first().filter(|p| p.day == 0).map(|p| p.probability)
    }

    /// Probabilities of days 1.. (the baseline excluded).
    pub fn daily(&self) -> impl Iterator<Item = &TracePoint> {
        self.points.iter().filter(|p| p.day > 0)
    }

    pub fn max_daily(&self) -> Option<f64> {
        self.daily().map(|p| p.probability).reduce(f64::max)
    }
}

fn resolve_static(spec: &DbnSpec, ev: &Assignment) -> Result<Vec<Option<usize>>, DbnError> {
    if let Some(b) = spec.baseline_node() {
        if ev.contains(b) {
            return Err(DbnError::ResultObserved(b.to_string()));
        }
    }
    Ok(spec.static_slice().resolve(ev)?)
}

fn resolve_day(spec: &DbnSpec, day: &Assignment) -> Result<Vec<Option<usize>>, DbnError> {
    let vars = spec.template_variables();
    let mut out = vec![None; vars.len()];
    for (name, state) in day.iter() {
        if name == spec.result_node() {
            return Err(DbnError::ResultObserved(name.to_string()));
        }
        let &j = spec
            .compiled()
            .template_index
            .get(name)
            .ok_or_else(|| PgmError::UnknownVariable(name.to_string()))?;
        out[j] = Some(vars[j].state_index(state).ok_or_else(|| PgmError::InvalidState {
            variable: name.to_string(),
            state: state.to_string(),
        })?);
    }
    Ok(out)
}

/// Forward-recursion state after some number of days. Owns no reference to
/// the spec, so it can be stored and cloned; every method takes the spec it
/// was started with.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    day: usize,
    static_ev: Vec<Option<usize>>,
    prev_obs: Vec<Option<usize>>,
    // normalized; scope = free bridge sources and unobserved interface nodes
    belief: Factor,
    log_likelihood: f64,
}

struct Step {
    result: Vec<f64>,
    belief: Factor,
    log_norm: f64,
    obs: Vec<Option<usize>>,
}

impl FilterState {
    /// Absorbs the static evidence. Nothing is known about any day yet.
    pub fn start(spec: &DbnSpec, static_evidence: &Assignment) -> Result<Self, DbnError> {
        Self::from_resolved(spec, resolve_static(spec, static_evidence)?)
    }

    fn from_resolved(spec: &DbnSpec, static_ev: Vec<Option<usize>>) -> Result<Self, DbnError> {
        let keep: Vec<usize> = spec
            .compiled()
            .bridge_sources
            .iter()
            .copied()
            .filter(|&s| static_ev[s].is_none())
            .collect();
        let factor = posterior_factor(spec.static_slice(), &keep, &static_ev)?;
        let log_likelihood = factor.log_total();
        Ok(FilterState {
            day: 0,
            static_ev,
            prev_obs: vec![None; spec.template_variables().len()],
            belief: normalize(factor),
            log_likelihood,
        })
    }

    /// Number of days absorbed so far.
    pub fn day(&self) -> usize {
        self.day
    }

    /// Natural log of the probability of all evidence absorbed so far.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Admission-time risk (independent of how many days were absorbed): the baseline node's posterior given the static
    /// evidence, or the day-1 prediction before any daily evidence when the
    /// spec has no baseline node.
    pub fn baseline(&self, spec: &DbnSpec) -> Result<f64, DbnError> {
        match spec.compiled().baseline {
            Some((b, yes)) => {
                let f = posterior_factor(spec.static_slice(), &[b], &self.static_ev)?;
                let probs = f.normalized().ok_or(PgmError::ImpossibleEvidence)?;
                Ok(probs[yes])
            }
            None => {
                let start = FilterState::from_resolved(spec, self.static_ev.clone())?;
                let step = start.step(spec, &Assignment::new())?;
                Ok(step.result[spec.compiled().result_yes])
            }
        }
    }

    /// P(result = yes) for the next day given `observations`, without
    /// changing the state.
    pub fn peek(&self, spec: &DbnSpec, observations: &Assignment) -> Result<f64, DbnError> {
        Ok(self.peek_distribution(spec, observations)?[spec.compiled().result_yes])
    }

    /// Full next-day result distribution in the result node's state order.
    pub fn peek_distribution(&self, spec: &DbnSpec, observations: &Assignment) -> Result<Vec<f64>, DbnError> {
        Ok(self.step(spec, observations)?.result)
    }

    /// Absorbs the next day and returns its P(result = yes).
    pub fn advance(&mut self, spec: &DbnSpec, observations: &Assignment) -> Result<f64, DbnError> {
        let step = self.step(spec, observations)?;
        self.day += 1;
        self.belief = step.belief;
        self.prev_obs = step.obs;
        self.log_likelihood += step.log_norm;
        Ok(step.result[spec.compiled().result_yes])
    }

    fn step(&self, spec: &DbnSpec, observations: &Assignment) -> Result<Step, DbnError> {
        let compiled = spec.compiled();
        let obs = resolve_day(spec, observations)?;
        let statics = spec.static_slice();
        let template = spec.template_variables();
        let (s, n) = (statics.len(), template.len());
        let cur = |k: usize| s + n + k;
        let day = self.day + 1;

        let mut ev: Vec<Option<usize>> = vec![None; s + 2 * n];
        ev[..s].copy_from_slice(&self.static_ev);
        ev[s..s + n].copy_from_slice(&self.prev_obs);
        ev[s + n..].copy_from_slice(&obs);
        let card = |id: usize| {
            if id < s {
                statics.cardinality(id)
            } else {
                template[(id - s) % n].cardinality()
            }
        };

        let mut factors = Vec::with_capacity(n + 1);
        factors.push(self.belief.clone());
        for j in 0..n {
            let (cpt, refs) = spec.cpt_for_day(j, day);
            let ids: Vec<usize> = refs
                .iter()
                .map(|r| match *r {
                    ParentRef::Static(x) => x,
                    ParentRef::Previous(k) => s + k,
                    ParentRef::Current(k) => cur(k),
                })
                .collect();
            factors.push(cpt_factor(cpt, &ids, cur(j), &card).reduce(&ev));
        }

        let mut keep: Vec<usize> = compiled
            .bridge_sources
            .iter()
            .copied()
            .filter(|&x| ev[x].is_none())
            .chain(compiled.interface.iter().map(|&k| cur(k)).filter(|&id| ev[id].is_none()))
            .collect();
        let result_id = cur(compiled.result);
        if !keep.contains(&result_id) {
            keep.push(result_id);
        }
        let hidden: Vec<usize> = (s..s + 2 * n).filter(|id| ev[*id].is_none() && !keep.contains(id)).collect();
        let joint = eliminate(factors, &hidden);
        if joint.total() <= 0.0 {
            return Err(PgmError::ImpossibleEvidence.into());
        }
        let log_norm = joint.log_total();

        let mut marginal = joint.clone();
        for &v in joint.vars() {
            if v != result_id {
                marginal = marginal.sum_out(v);
            }
        }
        let result = marginal.normalized().ok_or(PgmError::ImpossibleEvidence)?;

        let mut next = joint;
        if !compiled.interface.contains(&compiled.result) {
            next = next.sum_out(result_id);
        }
        let next = normalize(next.relabel(|id| if id >= s + n { id - n } else { id }));
        Ok(Step {
            result,
            belief: next,
            log_norm,
            obs,
        })
    }
}

/// Factor of a template CPT whose parents sit at local ids `parent_ids`.
fn cpt_factor(cpt: &Cpt, parent_ids: &[usize], child_id: usize, card: &impl Fn(usize) -> usize) -> Factor {
    let mut scope: Vec<(usize, usize)> = parent_ids
        .iter()
        .chain(std::iter::once(&child_id))
        .map(|&id| (id, card(id)))
        .collect();
    scope.sort_unstable();
    let pos = |id: usize| scope.iter().position(|&(v, _)| v == id).unwrap();
    let parent_pos: Vec<(usize, usize)> = parent_ids.iter().map(|&id| (pos(id), card(id))).collect();
    let child_pos = pos(child_id);
    Factor::from_fn(scope.clone(), |states| {
        let row = parent_pos.iter().fold(0, |acc, &(p, c)| acc * c + states[p]);
        cpt.rows[row][states[child_pos]]
    })
}

fn normalize(f: Factor) -> Factor {
    let total = f.total();
    let values: Vec<f64> = f.values().iter().map(|x| x / total).collect();
    let scope: Vec<(usize, usize)> = f.vars().iter().copied().zip(f.cards().iter().copied()).collect();
    let mut it = values.into_iter();
    Factor::from_fn(scope, |_| it.next().unwrap())
}

fn check_day(timeline: &EvidenceTimeline, day: usize) -> Result<(), DbnError> {
    if day == 0 || day > timeline.days.len() {
        return Err(DbnError::DayOutOfRange {
            day,
            available: timeline.days.len(),
        });
    }
    Ok(())
}

fn result_distribution(spec: &DbnSpec, day: usize, probs: Vec<f64>) -> Distribution {
    let var = &spec.template_variables()[spec.compiled().result];
    Distribution {
        variable: at_day(&var.name, day),
        states: var.states.clone(),
        probs,
    }
}

/// P(result on `day` | static evidence and daily evidence for days 1..=day),
/// by forward recursion.
pub fn filter(spec: &DbnSpec, timeline: &EvidenceTimeline, day: usize) -> Result<Distribution, DbnError> {
    check_day(timeline, day)?;
    let mut state = FilterState::start(spec, &timeline.static_evidence)?;
    for obs in &timeline.days[..day - 1] {
        state.advance(spec, obs)?;
    }
    let probs = state.peek_distribution(spec, &timeline.days[day - 1])?;
    Ok(result_distribution(spec, day, probs))
}

/// Same query as [`filter`], answered by variable elimination on the network
/// unrolled to `day` days.
pub fn filter_unrolled(spec: &DbnSpec, timeline: &EvidenceTimeline, day: usize) -> Result<Distribution, DbnError> {
    check_day(timeline, day)?;
    resolve_static(spec, &timeline.static_evidence)?;
    for d in &timeline.days[..day] {
        resolve_day(spec, d)?;
    }
    let net = unroll(spec, day)?;
    let query = at_day(spec.result_node(), day);
    Ok(posterior(&net, &query, &timeline.unrolled_evidence(day))?)
}

/// Same query again, by brute-force enumeration of the network unrolled over
/// the whole timeline (later days are summed out, not truncated).
pub fn filter_enumeration(spec: &DbnSpec, timeline: &EvidenceTimeline, day: usize) -> Result<Distribution, DbnError> {
    check_day(timeline, day)?;
    resolve_static(spec, &timeline.static_evidence)?;
    let net = unroll(spec, timeline.days.len())?;
    let query = at_day(spec.result_node(), day);
    Ok(posterior_enumeration(&net, &query, &timeline.unrolled_evidence(day))?)
}

/// Baseline plus the filtered risk of every evidenced day. Each point only
/// sees evidence up to its own day.
pub fn predict_trajectory(spec: &DbnSpec, timeline: &EvidenceTimeline) -> Result<PredictionTrace, DbnError> {
    let mut state = FilterState::start(spec, &timeline.static_evidence)?;
    let mut points = Vec::with_capacity(timeline.days.len() + 1);
    points.push(TracePoint {
        day: 0,
        probability: state.baseline(spec)?,
    });
    for obs in &timeline.days {
        let p = state.advance(spec, obs)?;
        points.push(TracePoint {
            day: state.day(),
            probability: p,
        });
    }
    Ok(PredictionTrace { points })
}

/// Per-day comparison of the forward recursion against the unrolled network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayComparison {
    pub day: usize,
    pub forward: Vec<f64>,
    pub unrolled: Vec<f64>,
    /// Present when the unrolled state space is small enough to enumerate.
    pub enumeration: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub days: Vec<DayComparison>,
    /// Largest |forward - unrolled| over all days and states.
    pub max_abs_deviation: f64,
    /// Largest |forward - enumeration|, when enumeration ran.
    pub max_enumeration_deviation: Option<f64>,
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs [`filter`] and [`filter_unrolled`] for every day of the timeline and
/// reports the largest disagreement. Enumeration is added when the fully
/// unrolled network is within the enumeration cutoff.
pub fn forward_equals_unrolled(spec: &DbnSpec, timeline: &EvidenceTimeline) -> Result<ConsistencyReport, DbnError> {
    let total = timeline.days.len();
    let enumerable = total > 0 && unroll(spec, total)?.joint_state_count() <= crate::pgm::ENUMERATION_CUTOFF;
    let mut state = FilterState::start(spec, &timeline.static_evidence)?;
    let mut days = Vec::with_capacity(total);
    let mut max_abs = 0.0f64;
    let mut max_enum: Option<f64> = None;
    for day in 1..=total {
        let forward = state.peek_distribution(spec, &timeline.days[day - 1])?;
        state.advance(spec, &timeline.days[day - 1])?;
        let unrolled = filter_unrolled(spec, timeline, day)?.probs;
        max_abs = max_abs.max(max_dev(&forward, &unrolled));
        let enumeration = if enumerable {
            let e = filter_enumeration(spec, timeline, day)?.probs;
            max_enum = Some(max_enum.unwrap_or(0.0).max(max_dev(&forward, &e)));
            Some(e)
        } else {
            None
        };
        days.push(DayComparison {
            day,
            forward,
            unrolled,
            enumeration,
        });
    }
    Ok(ConsistencyReport {
        days,
        max_abs_deviation: max_abs,
        max_enumeration_deviation: max_enum,
    })
}
