//! Exact inference: joint probabilities, posteriors by variable elimination,
//! and the brute-force enumeration reference path.

use super::factor::{eliminate, Factor};
use super::model::{Assignment, Distribution, Network};
use super::PgmError;

/// Largest joint state space the enumeration path will walk.
pub const ENUMERATION_CUTOFF: u128 = 1 << 22;

/// Product of every node's local probability under a complete assignment.
pub fn joint_probability(net: &Network, full: &Assignment) -> Result<f64, PgmError> {
    let states = complete_states(net, full)?;
    Ok(joint_of_states(net, &states))
}

/// Natural log of [`joint_probability`], for nets where the linear product
/// would underflow.
pub fn log_joint_probability(net: &Network, full: &Assignment) -> Result<f64, PgmError> {
    let states = complete_states(net, full)?;
    Ok((0..net.len())
        .map(|id| net.local_probability(id, &states).ln())
        .sum())
}

fn complete_states(net: &Network, full: &Assignment) -> Result<Vec<usize>, PgmError> {
    let resolved = net.resolve(full)?;
    let missing: Vec<String> = resolved
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(i, _)| net.variables()[i].name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(PgmError::IncompleteAssignment(missing));
    }
    Ok(resolved.into_iter().map(Option::unwrap).collect())
}

pub(crate) fn joint_of_states(net: &Network, states: &[usize]) -> f64 {
    (0..net.len()).map(|id| net.local_probability(id, states)).product()
}

fn check_query(net: &Network, query: &str, evidence: &Assignment) -> Result<(usize, Vec<Option<usize>>), PgmError> {
    let q = net
        .index_of(query)
        .ok_or_else(|| PgmError::UnknownVariable(query.to_string()))?;
    if evidence.contains(query) {
        return Err(PgmError::QueryObserved(query.to_string()));
    }
    let ev = net.resolve(evidence)?;
    Ok((q, ev))
}

/// Exact P(query | evidence) by variable elimination.
pub fn posterior(net: &Network, query: &str, evidence: &Assignment) -> Result<Distribution, PgmError> {
    let (q, ev) = check_query(net, query, evidence)?;
    let var = &net.variables()[q];
    if evidence.is_empty() && net.parents_of(q).is_empty() {
        return Ok(Distribution {
            variable: var.name.clone(),
            states: var.states.clone(),
            probs: net.cpts()[q].rows[0].clone(),
        });
    }
    let factor = posterior_factor(net, &[q], &ev)?;
    let probs = factor.normalized().ok_or(PgmError::ImpossibleEvidence)?;
    Ok(Distribution {
        variable: var.name.clone(),
        states: var.states.clone(),
        probs,
    })
}

/// Unnormalized factor over `keep` (sorted ids, none observed) proportional
/// to P(keep, evidence). Nodes that are not ancestors of `keep` or of the
/// evidence are barren and skipped.
pub(crate) fn posterior_factor(net: &Network, keep: &[usize], evidence: &[Option<usize>]) -> Result<Factor, PgmError> {
    let mut relevant = vec![false; net.len()];
    let mut stack: Vec<usize> = keep
        .iter()
        .copied()
        .chain((0..net.len()).filter(|&i| evidence[i].is_some()))
        .collect();
    while let Some(v) = stack.pop() {
        if relevant[v] {
            continue;
        }
        relevant[v] = true;
        stack.extend(net.parents_of(v).iter().copied().filter(|&p| !relevant[p]));
    }
    let factors: Vec<Factor> = (0..net.len())
        .filter(|&i| relevant[i])
        .map(|i| Factor::from_cpt(net, i).reduce(evidence))
        .collect();
    let hidden: Vec<usize> = (0..net.len())
        .filter(|&i| relevant[i] && evidence[i].is_none() && !keep.contains(&i))
        .collect();
    let out = eliminate(factors, &hidden);
    if out.total() <= 0.0 {
        return Err(PgmError::ImpossibleEvidence);
    }
    Ok(out)
}

/// Exact P(query | evidence) by summing the joint over every completion of
/// the evidence. Reference path for testing; refuses nets whose joint state
/// space exceeds [`ENUMERATION_CUTOFF`].
pub fn posterior_enumeration(net: &Network, query: &str, evidence: &Assignment) -> Result<Distribution, PgmError> {
    let (q, ev) = check_query(net, query, evidence)?;
    let states_total = net.joint_state_count();
    if states_total > ENUMERATION_CUTOFF {
        return Err(PgmError::TooLargeForEnumeration(states_total));
    }
    let var = &net.variables()[q];
    let mut acc = vec![0.0; var.cardinality()];
    for_each_completion(net, &ev, |states, p| acc[states[q]] += p);
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(PgmError::ImpossibleEvidence);
    }
    Ok(Distribution {
        variable: var.name.clone(),
        states: var.states.clone(),
        probs: acc.iter().map(|x| x / total).collect(),
    })
}

/// Calls `f(states, joint)` for every complete assignment consistent with
/// `fixed` (entries that are `Some` stay clamped).
pub fn for_each_completion(net: &Network, fixed: &[Option<usize>], mut f: impl FnMut(&[usize], f64)) {
    let free: Vec<usize> = (0..net.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut states: Vec<usize> = fixed.iter().map(|s| s.unwrap_or(0)).collect();
    loop {
        f(&states, joint_of_states(net, &states));
        let mut carried = true;
        for &v in free.iter().rev() {
            states[v] += 1;
            if states[v] < net.cardinality(v) {
                carried = false;
                break;
            }
            states[v] = 0;
        }
        if carried {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgm::{Cpt, Variable};

    fn chain() -> Network {
        Network::new(
            vec![Variable::new("A", ["1", "0"]), Variable::new("B", ["1", "0"])],
            vec![
                Cpt::root("A", vec![0.5, 0.5]),
                Cpt::new("B", vec!["A".into()], vec![vec![0.8, 0.2], vec![0.3, 0.7]]),
            ],
        )
        .unwrap()
    }

    fn disease_test() -> Network {
        Network::new(
            vec![Variable::boolean("C"), Variable::new("V", ["pos", "neg"])],
            vec![
                Cpt::root("C", vec![0.2, 0.8]),
                Cpt::new("V", vec!["C".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_root_joint_is_its_prior() {
        let net = Network::new(vec![Variable::boolean("X")], vec![Cpt::root("X", vec![0.3, 0.7])]).unwrap();
        let p = joint_probability(&net, &Assignment::new().with("X", "yes")).unwrap();
        assert_eq!(p, 0.3);
    }

    #[test]
    fn chain_joint_multiplies_factors() {
        let p = joint_probability(&chain(), &Assignment::new().with("A", "1").with("B", "1")).unwrap();
        assert!((p - 0.4).abs() < 1e-15);
    }

    #[test]
    fn incomplete_assignment_is_rejected() {
        let err = joint_probability(&chain(), &Assignment::new().with("A", "1")).unwrap_err();
        assert_eq!(err, PgmError::IncompleteAssignment(vec!["B".into()]));
    }

    #[test]
    fn bayes_rule_fixture() {
        // 0.2 * 0.9 / (0.2 * 0.9 + 0.8 * 0.2) = 0.18 / 0.34
        let ev = Assignment::new().with("V", "pos");
        let ve = posterior(&disease_test(), "C", &ev).unwrap();
        let en = posterior_enumeration(&disease_test(), "C", &ev).unwrap();
        assert!((ve.prob("yes").unwrap() - 0.18 / 0.34).abs() < 1e-12);
        assert!((en.prob("yes").unwrap() - 0.18 / 0.34).abs() < 1e-12);
    }

    #[test]
    fn root_with_no_evidence_returns_prior_row_exactly() {
        let d = posterior(&disease_test(), "C", &Assignment::new()).unwrap();
        assert_eq!(d.probs, vec![0.2, 0.8]);
    }

    #[test]
    fn impossible_evidence_is_typed() {
        let net = Network::new(
            vec![Variable::boolean("C"), Variable::boolean("V")],
            vec![
                Cpt::root("C", vec![1.0, 0.0]),
                Cpt::new("V", vec!["C".into()], vec![vec![1.0, 0.0], vec![0.5, 0.5]]),
            ],
        )
        .unwrap();
        let ev = Assignment::new().with("V", "no");
        assert_eq!(posterior(&net, "C", &ev).unwrap_err(), PgmError::ImpossibleEvidence);
        assert_eq!(posterior_enumeration(&net, "C", &ev).unwrap_err(), PgmError::ImpossibleEvidence);
    }

    #[test]
    fn observed_query_is_rejected() {
        let ev = Assignment::new().with("C", "yes");
        assert_eq!(
            posterior(&disease_test(), "C", &ev).unwrap_err(),
            PgmError::QueryObserved("C".into())
        );
    }

    #[test]
    fn uninformative_children_leave_prior() {
        let net = Network::new(
            vec![Variable::boolean("C"), Variable::boolean("V1"), Variable::boolean("V2")],
            vec![
                Cpt::root("C", vec![0.35, 0.65]),
                Cpt::new("V1", vec!["C".into()], vec![vec![0.5, 0.5]; 2]),
                Cpt::new("V2", vec!["C".into()], vec![vec![0.5, 0.5]; 2]),
            ],
        )
        .unwrap();
        let ev = Assignment::new().with("V1", "yes").with("V2", "no");
        let d = posterior(&net, "C", &ev).unwrap();
        assert!((d.probs[0] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn enumeration_refuses_huge_nets() {
        let vars: Vec<Variable> = (0..23).map(|i| Variable::boolean(format!("X{i}"))).collect();
        let cpts = vars.iter().map(|v| Cpt::root(v.name.clone(), vec![0.5, 0.5])).collect();
        let net = Network::new(vars, cpts).unwrap();
        assert!(matches!(
            posterior_enumeration(&net, "X0", &Assignment::new()),
            Err(PgmError::TooLargeForEnumeration(_))
        ));
        // elimination has no such limit
        assert!(posterior(&net, "X0", &Assignment::new()).is_ok());
    }

    #[test]
    fn long_chains_do_not_underflow() {
        // 400 observed children each contributing ~0.1 would underflow a
        // naive linear product (1e-400).
        let mut vars = vec![Variable::boolean("C")];
        let mut cpts = vec![Cpt::root("C", vec![0.5, 0.5])];
        let mut ev = Assignment::new();
        for i in 0..400 {
            let name = format!("O{i}");
            vars.push(Variable::boolean(&name));
            cpts.push(Cpt::new(&name, vec!["C".into()], vec![vec![0.1, 0.9], vec![0.09, 0.91]]));
            ev.insert(name, "yes");
        }
        let net = Network::new(vars, cpts).unwrap();
        let d = posterior(&net, "C", &ev).unwrap();
        // odds = (0.1 / 0.09)^400
        let log_odds = 400.0 * (0.1f64 / 0.09).ln();
        let expected = 1.0 / (1.0 + (-log_odds).exp());
        assert!((d.probs[0] - expected).abs() < 1e-12);
    }
}
