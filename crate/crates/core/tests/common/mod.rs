//! Shared fixtures: random model generators and a brute-force oracle that
//! reads CPT rows directly, sharing no inference code with the engine.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nirisk::dbn::{DbnSpec, EvidenceTimeline};
use nirisk::pgm::{Assignment, Cpt, Network, Variable};

pub const CHAIN_MODEL: &str = include_str!("../fixtures/chain_model.json");

pub fn chain() -> DbnSpec {
    DbnSpec::from_json(CHAIN_MODEL).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive random distribution, so no evidence is impossible.
pub fn random_row(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn states(k: usize) -> Vec<String> {
    if k == 2 {
        vec!["yes".into(), "no".into()]
    } else {
        (0..k).map(|i| format!("s{i}")).collect()
    }
}

fn cpt(rng: &mut impl Rng, child: &str, k: usize, parents: Vec<String>, cards: &BTreeMap<String, usize>) -> Cpt {
    let rows: usize = parents.iter().map(|p| cards[p.trim_end_matches("@prev")]).product();
    Cpt::new(child, parents, (0..rows).map(|_| random_row(rng, k)).collect())
}

/// Random network with `n` variables and up to `max_parents` parents each.
pub fn random_network(rng: &mut impl Rng, n: usize, max_card: usize, max_parents: usize) -> Network {
    let mut vars = Vec::new();
    let mut cards = BTreeMap::new();
    for i in 0..n {
        let k = rng.random_range(2..=max_card);
        let name = format!("v{i}");
        cards.insert(name.clone(), k);
        vars.push(Variable::new(name, states(k)));
    }
    let mut cpts = Vec::new();
    for i in 0..n {
        let mut parents = Vec::new();
        for j in 0..i {
            if parents.len() < max_parents && rng.random_bool(0.4) {
                parents.push(format!("v{j}"));
            }
        }
        cpts.push(cpt(rng, &format!("v{i}"), cards[&format!("v{i}")], parents, &cards));
    }
    Network::new(vars, cpts).unwrap()
}

/// Random DBN: up to 3 static variables, 1..=4 template variables with up
/// to 3 states; template variable `r` (yes/no) is the result node. Arcs are
/// drawn at random among earlier template nodes (same day), any template
/// node on the previous day, and static nodes.
pub fn random_spec(rng: &mut impl Rng) -> DbnSpec {
    let n_static = rng.random_range(0..=3);
    let n_temp = rng.random_range(1..=4);
    let mut cards = BTreeMap::new();
    let mut static_vars = Vec::new();
    for i in 0..n_static {
        let k = rng.random_range(2..=3);
        let name = format!("s{i}");
        cards.insert(name.clone(), k);
        static_vars.push(Variable::new(name, states(k)));
    }
    let mut temp_vars = Vec::new();
    for j in 0..n_temp {
        let (name, k) = if j == 0 { ("r".to_string(), 2) } else { (format!("t{j}"), rng.random_range(2..=3)) };
        cards.insert(name.clone(), k);
        temp_vars.push(Variable::new(name, states(k)));
    }
    let mut static_cpts = Vec::new();
    for i in 0..n_static {
        let mut parents = Vec::new();
        for j in 0..i {
            if rng.random_bool(0.5) {
                parents.push(format!("s{j}"));
            }
        }
        static_cpts.push(cpt(rng, &format!("s{i}"), cards[&format!("s{i}")], parents, &cards));
    }
    let static_net = Network::new(static_vars, static_cpts).unwrap();
    let mut template = Vec::new();
    let mut initial = Vec::new();
    let mut inter = Vec::new();
    let mut bridge = Vec::new();
    for (j, v) in temp_vars.iter().enumerate() {
        let mut parents = Vec::new();
        for earlier in &temp_vars[..j] {
            if rng.random_bool(0.4) {
                parents.push(earlier.name.clone());
            }
        }
        for prev in &temp_vars {
            // the result node always carries its own history
            if (j == 0 && prev.name == "r") || rng.random_bool(0.2) {
                parents.push(format!("{}@prev", prev.name));
                inter.push((prev.name.clone(), v.name.clone()));
            }
        }
        for s in 0..n_static {
            if rng.random_bool(0.3) {
                parents.push(format!("s{s}"));
                bridge.push((format!("s{s}"), v.name.clone()));
            }
        }
        let has_prev = parents.iter().any(|p| p.ends_with("@prev"));
        if has_prev {
            let first: Vec<String> = parents.iter().filter(|p| !p.ends_with("@prev")).cloned().collect();
            initial.push(cpt(rng, &v.name, v.cardinality(), first, &cards));
        }
        template.push(cpt(rng, &v.name, v.cardinality(), parents, &cards));
    }
    let baseline = static_net
        .variables()
        .iter()
        .find(|v| v.states == ["yes", "no"])
        .filter(|_| rng.random_bool(0.5))
        .map(|v| v.name.clone());
    DbnSpec::new(static_net, temp_vars, template, initial, inter, bridge, "r", baseline).unwrap()
}

/// Number of joint states of the network unrolled over `days`.
pub fn unrolled_states(spec: &DbnSpec, days: usize) -> u128 {
    let s: u128 = spec.static_slice().variables().iter().map(|v| v.cardinality() as u128).product();
    let t: u128 = spec.template_variables().iter().map(|v| v.cardinality() as u128).product();
    s * t.pow(days as u32)
}

/// Random partial evidence over `days`: each static variable (except the
/// baseline node) and each non-result template variable is observed with
/// probability `p_obs`.
pub fn random_timeline(rng: &mut impl Rng, spec: &DbnSpec, days: usize, p_obs: f64) -> EvidenceTimeline {
    let mut st = Assignment::new();
    for v in spec.static_slice().variables() {
        if Some(v.name.as_str()) != spec.baseline_node() && rng.random_bool(p_obs) {
            st.insert(v.name.clone(), v.states[rng.random_range(0..v.cardinality())].clone());
        }
    }
    let mut tl = EvidenceTimeline::new(st);
    for _ in 0..days {
        let mut day = Assignment::new();
        for v in spec.template_variables() {
            if v.name != spec.result_node() && rng.random_bool(p_obs) {
                day.insert(v.name.clone(), v.states[rng.random_range(0..v.cardinality())].clone());
            }
        }
        tl = tl.with_day(day);
    }
    tl
}

struct Node<'a> {
    card: usize,
    cpt: &'a Cpt,
    /// indices into the flat assignment
    parents: Vec<usize>,
    observed: Option<usize>,
}

/// P(result@day = each state | static evidence and days 1..=day), by
/// summing the product of CPT entries over every completion of the
/// unrolled network.
pub fn brute_force_filter(spec: &DbnSpec, timeline: &EvidenceTimeline, day: usize) -> Vec<f64> {
    let statics = spec.static_slice().variables();
    let temps = spec.template_variables();
    let mut index: BTreeMap<(usize, String), usize> = BTreeMap::new();
    for (i, v) in statics.iter().enumerate() {
        index.insert((0, v.name.clone()), i);
    }
    for d in 1..=day {
        for (j, v) in temps.iter().enumerate() {
            index.insert((d, v.name.clone()), statics.len() + (d - 1) * temps.len() + j);
        }
    }
    let resolve = |d: usize, p: &str| -> usize {
        if let Some(base) = p.strip_suffix("@prev") {
            index[&(d - 1, base.to_string())]
        } else if temps.iter().any(|v| v.name == p) {
            index[&(d, p.to_string())]
        } else {
            index[&(0, p.to_string())]
        }
    };
    let mut nodes = Vec::new();
    for v in statics {
        let cpt = spec.static_slice().cpt(&v.name).unwrap();
        nodes.push(Node {
            card: v.cardinality(),
            cpt,
            parents: cpt.parents.iter().map(|p| index[&(0, p.clone())]).collect(),
            observed: timeline.static_evidence.get(&v.name).map(|s| v.state_index(s).unwrap()),
        });
    }
    for d in 1..=day {
        for (j, v) in temps.iter().enumerate() {
            let cpt = match (&spec.initial_cpts()[j], d) {
                (Some(init), 1) => init,
                _ => &spec.template_cpts()[j],
            };
            nodes.push(Node {
                card: v.cardinality(),
                cpt,
                parents: cpt.parents.iter().map(|p| resolve(d, p)).collect(),
                observed: timeline.days[d - 1].get(&v.name).map(|s| v.state_index(s).unwrap()),
            });
        }
    }
    let query = index[&(day, spec.result_node().to_string())];
    let mut acc = vec![0.0; nodes[query].card];
    let mut x: Vec<usize> = nodes.iter().map(|n| n.observed.unwrap_or(0)).collect();
    loop {
        let mut joint = 1.0;
        for (i, n) in nodes.iter().enumerate() {
            let mut row = 0;
            for &p in &n.parents {
                row = row * nodes[p].card + x[p];
            }
            joint *= n.cpt.rows[row][x[i]];
        }
        acc[x[query]] += joint;
        // odometer over the unobserved nodes
        let mut i = nodes.len();
        loop {
            if i == 0 {
                let z: f64 = acc.iter().sum();
                return acc.iter().map(|a| a / z).collect();
            }
            i -= 1;
            if nodes[i].observed.is_some() {
                continue;
            }
            x[i] += 1;
            if x[i] < nodes[i].card {
                break;
            }
            x[i] = 0;
        }
    }
}
