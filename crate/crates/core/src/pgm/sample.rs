//! Ancestral sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::inference::posterior_factor;
use super::model::{Assignment, Network};
use super::PgmError;

/// Draws one complete assignment in topological order. Deterministic for a
/// fixed seed.
pub fn sample(net: &Network, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = sample_states(net, &mut rng);
    net.assignment_from_states(&states)
}

/// Draws per-node state indices using the caller's generator.
pub fn sample_states<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> Vec<usize> {
    let mut states = vec![0usize; net.len()];
    for &id in net.topological_order() {
        let row = &net.cpts()[id].rows[net.row_index(id, &states)];
        states[id] = draw(row, rng);
    }
    states
}

/// Draws per-node state indices from P(all | evidence): nodes in topological
/// order, each from its exact posterior given the evidence and the nodes
/// drawn so far. Evidenced nodes keep their value.
pub fn sample_states_given<R: Rng + ?Sized>(
    net: &Network,
    evidence: &[Option<usize>],
    rng: &mut R,
) -> Result<Vec<usize>, PgmError> {
    if evidence.iter().all(Option::is_none) {
        return Ok(sample_states(net, rng));
    }
    let mut fixed = evidence.to_vec();
    for &id in net.topological_order() {
        if fixed[id].is_none() {
            let probs = posterior_factor(net, &[id], &fixed)?
                .normalized()
                .ok_or(PgmError::ImpossibleEvidence)?;
            fixed[id] = Some(draw(&probs, rng));
        }
    }
    Ok(fixed.into_iter().map(|s| s.expect("every node drawn")).collect())
}

/// Inverse-CDF draw from a probability row.
pub fn draw<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the cumulative sum
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgm::{Cpt, Variable};

    #[test]
    fn one_hot_cpts_give_the_unique_assignment() {
        let net = Network::new(
            vec![Variable::boolean("A"), Variable::boolean("B"), Variable::new("C", ["x", "y", "z"])],
            vec![
                Cpt::root("A", vec![0.0, 1.0]),
                Cpt::new("B", vec!["A".into()], vec![vec![1.0, 0.0], vec![1.0, 0.0]]),
                Cpt::new(
                    "C",
                    vec!["A".into(), "B".into()],
                    vec![
                        vec![1.0, 0.0, 0.0],
                        vec![0.0, 1.0, 0.0],
                        vec![0.0, 0.0, 1.0],
                        vec![1.0, 0.0, 0.0],
                    ],
                ),
            ],
        )
        .unwrap();
        for seed in 0..20 {
            let a = sample(&net, seed);
            assert_eq!(a.get("A"), Some("no"));
            assert_eq!(a.get("B"), Some("yes"));
            assert_eq!(a.get("C"), Some("z"));
        }
    }

    #[test]
    fn certain_root_is_always_drawn() {
        let net = Network::new(vec![Variable::boolean("X")], vec![Cpt::root("X", vec![1.0, 0.0])]).unwrap();
        assert!((0..100).all(|s| sample(&net, s).get("X") == Some("yes")));
    }

    #[test]
    fn frequency_converges_to_parameter() {
        let net = Network::new(vec![Variable::boolean("X")], vec![Cpt::root("X", vec![0.3, 0.7])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let yes = (0..n).filter(|_| sample_states(&net, &mut rng)[0] == 0).count();
        let freq = yes as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.01, "{freq}");
    }

    #[test]
    fn same_seed_same_draw() {
        let net = Network::new(vec![Variable::new("X", ["a", "b", "c"])], vec![Cpt::root("X", vec![0.2, 0.3, 0.5])]).unwrap();
        for seed in 0..10 {
            assert_eq!(sample(&net, seed), sample(&net, seed));
        }
    }

    #[test]
    fn conditioned_sampling_matches_the_posterior() {
        // A -> B, P(A=yes) = 0.3, P(B=yes|A) = (0.9, 0.2); P(A=yes | B=yes) = 0.27 / 0.41
        let net = Network::new(
            vec![Variable::boolean("A"), Variable::boolean("B")],
            vec![
                Cpt::root("A", vec![0.3, 0.7]),
                Cpt::new("B", vec!["A".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 50_000;
        let mut a_yes = 0;
        for _ in 0..n {
            let s = sample_states_given(&net, &[None, Some(0)], &mut rng).unwrap();
            assert_eq!(s[1], 0);
            a_yes += (s[0] == 0) as usize;
        }
        assert!((a_yes as f64 / n as f64 - 0.27 / 0.41).abs() < 0.01);
    }
}
