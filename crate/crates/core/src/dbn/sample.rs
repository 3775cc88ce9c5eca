//! Ancestral sampling of whole patient sequences.

use rand::Rng;

use super::learn::SequenceRecord;
use super::spec::{DbnSpec, ParentRef};
use crate::pgm::{draw, sample_states};

/// Sampled state indices: static slice plus one vector per day.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSequence {
    pub static_states: Vec<usize>,
    pub days: Vec<Vec<usize>>,
}

impl SampledSequence {
    /// Labels every node; nothing is missing.
    pub fn to_record(&self, spec: &DbnSpec) -> SequenceRecord {
        SequenceRecord {
            static_values: spec.static_slice().assignment_from_states(&self.static_states),
            days: self
                .days
                .iter()
                .map(|d| {
                    let mut a = crate::pgm::Assignment::new();
                    for (v, &s) in spec.template_variables().iter().zip(d) {
                        a.insert(v.name.clone(), v.states[s].clone());
                    }
                    a
                })
                .collect(),
        }
    }
}

/// Draws the static slice, then `days` daily slices in order, each node after
/// its parents.
pub fn sample_sequence<R: Rng + ?Sized>(spec: &DbnSpec, days: usize, rng: &mut R) -> SampledSequence {
    let static_states = sample_states(spec.static_slice(), rng);
    sample_days(spec, static_states, days, rng)
}

/// Draws `days` daily slices given already-drawn static states.
pub fn sample_days<R: Rng + ?Sized>(spec: &DbnSpec, static_states: Vec<usize>, days: usize, rng: &mut R) -> SampledSequence {
    let order = &spec.compiled().template_order;
    let n = spec.template_variables().len();
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(days);
    for day in 1..=days {
        let mut today = vec![0usize; n];
        for &j in order {
            let (cpt, refs) = spec.cpt_for_day(j, day);
            let row = refs.iter().fold(0usize, |acc, r| {
                let (state, card) = match *r {
                    ParentRef::Static(s) => (static_states[s], spec.static_slice().cardinality(s)),
                    ParentRef::Current(k) => (today[k], spec.template_variables()[k].cardinality()),
                    ParentRef::Previous(k) => (out[day - 2][k], spec.template_variables()[k].cardinality()),
                };
                acc * card + state
            });
            today[j] = draw(&cpt.rows[row], rng);
        }
        out.push(today);
    }
    SampledSequence {
        static_states,
        days: out,
    }
}
