//! Dense factors over discrete variables and variable elimination.
//!
//! Factor scopes are kept sorted by variable id; values are row-major with the
//! last scope variable varying fastest. Every factor produced by elimination
//! is rescaled so its largest entry is 1, with the discarded magnitude kept in
//! `log_scale`. Long products therefore never underflow to zero, and a zero
//! factor always means the evidence is genuinely impossible.

use std::collections::HashMap;

use super::model::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
    log_scale: f64,
}

impl Factor {
    /// The multiplicative identity (empty scope, value 1).
    pub fn unit() -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![1.0],
            log_scale: 0.0,
        }
    }

    /// Builds a factor by evaluating `f` on every joint state of the scope.
    /// `scope` must be sorted and duplicate free.
    pub fn from_fn(scope: Vec<(usize, usize)>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        debug_assert!(scope.windows(2).all(|w| w[0].0 < w[1].0));
        let (vars, cards): (Vec<usize>, Vec<usize>) = scope.into_iter().unzip();
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut states = vec![0usize; vars.len()];
        for _ in 0..size {
            values.push(f(&states));
            advance(&mut states, &cards);
        }
        Factor {
            vars,
            cards,
            values,
            log_scale: 0.0,
        }
    }

    /// The CPT of node `id` as a factor over the node and its parents.
    pub fn from_cpt(net: &Network, id: usize) -> Self {
        let mut scope: Vec<(usize, usize)> = net
            .parents_of(id)
            .iter()
            .chain(std::iter::once(&id))
            .map(|&v| (v, net.cardinality(v)))
            .collect();
        scope.sort_unstable();
        let mut full = vec![0usize; net.len()];
        let vars: Vec<usize> = scope.iter().map(|s| s.0).collect();
        Factor::from_fn(scope, |states| {
            for (&v, &s) in vars.iter().zip(states) {
                full[v] = s;
            }
            net.local_probability(id, &full)
        })
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    /// Clamps observed variables to their observed state and drops them from
    /// the scope. `evidence` is indexed by variable id.
    pub fn reduce(&self, evidence: &[Option<usize>]) -> Factor {
        let observed: Vec<bool> = self
            .vars
            .iter()
            .map(|&v| evidence.get(v).copied().flatten().is_some())
            .collect();
        if !observed.iter().any(|&o| o) {
            return self.clone();
        }
        let strides = strides(&self.cards);
        let mut base = 0;
        let mut scope = Vec::new();
        let mut kept_strides = Vec::new();
        for (k, &v) in self.vars.iter().enumerate() {
            if observed[k] {
                base += evidence[v].unwrap() * strides[k];
            } else {
                scope.push((v, self.cards[k]));
                kept_strides.push(strides[k]);
            }
        }
        let mut out = Factor::from_fn(scope, |states| {
            let idx = base + states.iter().zip(&kept_strides).map(|(s, st)| s * st).sum::<usize>();
            self.values[idx]
        });
        out.log_scale = self.log_scale;
        out
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = Vec::with_capacity(self.vars.len() + other.vars.len());
        let mut cards = Vec::with_capacity(vars.capacity());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() || j < other.vars.len() {
            match (self.vars.get(i), other.vars.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    vars.push(a);
                    cards.push(self.cards[i]);
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    vars.push(a);
                    cards.push(self.cards[i]);
                    i += 1;
                }
                (Some(&a), None) => {
                    vars.push(a);
                    cards.push(self.cards[i]);
                    i += 1;
                }
                (_, Some(&b)) => {
                    vars.push(b);
                    cards.push(other.cards[j]);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        let sa = projected_strides(&vars, &self.vars, &self.cards);
        let sb = projected_strides(&vars, &other.vars, &other.cards);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut states = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for d in (0..vars.len()).rev() {
                states[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if states[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                states[d] = 0;
            }
        }
        Factor {
            vars,
            cards,
            values,
            log_scale: self.log_scale + other.log_scale,
        }
    }

    /// Sums `var` out of the factor. No-op if `var` is not in scope.
    pub fn sum_out(&self, var: usize) -> Factor {
        let Ok(pos) = self.vars.binary_search(&var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let out_strides = strides(&cards);
        let mut proj = Vec::with_capacity(self.vars.len());
        let mut k = 0;
        for d in 0..self.vars.len() {
            if d == pos {
                proj.push(0);
            } else {
                proj.push(out_strides[k]);
                k += 1;
            }
        }
        let mut values = vec![0.0; cards.iter().product()];
        let mut states = vec![0usize; self.vars.len()];
        let mut io = 0usize;
        for &x in &self.values {
            values[io] += x;
            for d in (0..self.vars.len()).rev() {
                states[d] += 1;
                io += proj[d];
                if states[d] < self.cards[d] {
                    break;
                }
                io -= proj[d] * self.cards[d];
                states[d] = 0;
            }
        }
        Factor {
            vars,
            cards,
            values,
            log_scale: self.log_scale,
        }
    }

    /// Divides by the largest entry, folding it into `log_scale`.
    pub fn rescale(&mut self) {
        let max = self.values.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 && max.is_finite() {
            self.values.iter_mut().for_each(|x| *x /= max);
            self.log_scale += max.ln();
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Natural log of the unscaled total mass (`-inf` when zero).
    pub fn log_total(&self) -> f64 {
        self.total().ln() + self.log_scale
    }

    /// Returns the values normalized to sum to one, or `None` if the factor is
    /// identically zero.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let total = self.total();
        if total > 0.0 {
            Some(self.values.iter().map(|x| x / total).collect())
        } else {
            None
        }
    }

    /// Renames scope variables through `map`. The mapping must keep the
    /// scope sorted-unique after renaming; values are permuted accordingly.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Factor {
        let mut pairs: Vec<(usize, usize, usize)> = self
            .vars
            .iter()
            .zip(&self.cards)
            .enumerate()
            .map(|(k, (&v, &c))| (map(v), c, k))
            .collect();
        pairs.sort_unstable();
        let old_strides = strides(&self.cards);
        let order: Vec<usize> = pairs.iter().map(|p| p.2).collect();
        let (vars, cards): (Vec<usize>, Vec<usize>) = pairs.iter().map(|p| (p.0, p.1)).unzip();
        let mut values = Vec::with_capacity(self.values.len());
        let mut states = vec![0usize; vars.len()];
        for _ in 0..self.values.len() {
            let idx: usize = states.iter().zip(&order).map(|(s, &k)| s * old_strides[k]).sum();
            values.push(self.values[idx]);
            advance(&mut states, &cards);
        }
        Factor {
            vars,
            cards,
            values,
            log_scale: self.log_scale,
        }
    }
}

fn advance(states: &mut [usize], cards: &[usize]) {
    for d in (0..states.len()).rev() {
        states[d] += 1;
        if states[d] < cards[d] {
            return;
        }
        states[d] = 0;
    }
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for d in (0..cards.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * cards[d + 1];
    }
    s
}

/// Strides of `sub` laid over the scope `full` (0 where absent).
fn projected_strides(full: &[usize], sub: &[usize], sub_cards: &[usize]) -> Vec<usize> {
    let own = strides(sub_cards);
    full.iter()
        .map(|v| sub.binary_search(v).map(|k| own[k]).unwrap_or(0))
        .collect()
}

/// Multiplies `factors` and sums out every variable in `eliminate`, choosing
/// the next variable greedily by the size of the intermediate factor it would
/// create. Returns the product over the remaining scope.
pub fn eliminate(mut factors: Vec<Factor>, eliminate: &[usize]) -> Factor {
    let mut cards: HashMap<usize, usize> = HashMap::new();
    for f in &factors {
        for (&v, &c) in f.vars.iter().zip(&f.cards) {
            cards.insert(v, c);
        }
    }
    let mut pending: Vec<usize> = eliminate.iter().copied().filter(|v| cards.contains_key(v)).collect();
    pending.sort_unstable();
    pending.dedup();

    while !pending.is_empty() {
        let (best_pos, _) = pending
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                let scope = factors
                    .iter()
                    .filter(|f| f.contains(v))
                    .fold(Vec::new(), |acc, f| merge_scope(&acc, &f.vars));
                let cost: f64 = scope.iter().map(|u| cards[u] as f64).product();
                (pos, cost)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .unwrap();
        let var = pending.remove(best_pos);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        let mut prod = product_all(&touching).sum_out(var);
        prod.rescale();
        factors.push(prod);
    }
    product_all(&factors)
}

fn product_all(factors: &[Factor]) -> Factor {
    factors.iter().fold(Factor::unit(), |acc, f| {
        let mut p = acc.product(f);
        p.rescale();
        p
    })
}

fn merge_scope(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(scope: Vec<(usize, usize)>, values: Vec<f64>) -> Factor {
        let mut it = values.into_iter();
        Factor::from_fn(scope, |_| it.next().unwrap())
    }

    #[test]
    fn product_then_sum_matches_hand_values() {
        // a(0) = [0.2, 0.8]; b(0,1) = [[0.9, 0.1], [0.3, 0.7]]
        let a = f(vec![(0, 2)], vec![0.2, 0.8]);
        let b = f(vec![(0, 2), (1, 2)], vec![0.9, 0.1, 0.3, 0.7]);
        let p = a.product(&b);
        assert_eq!(p.vars(), &[0, 1]);
        let expect = [0.18, 0.02, 0.24, 0.56];
        for (x, e) in p.values().iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
        let m = p.sum_out(0);
        assert_eq!(m.vars(), &[1]);
        assert!((m.values()[0] - 0.42).abs() < 1e-15);
        assert!((m.values()[1] - 0.58).abs() < 1e-15);
    }

    #[test]
    fn product_with_disjoint_scopes_interleaves() {
        let a = f(vec![(2, 2)], vec![1.0, 2.0]);
        let b = f(vec![(1, 3)], vec![1.0, 10.0, 100.0]);
        let p = a.product(&b);
        assert_eq!(p.vars(), &[1, 2]);
        assert_eq!(p.values(), &[1.0, 2.0, 10.0, 20.0, 100.0, 200.0]);
    }

    #[test]
    fn reduce_clamps_evidence() {
        let b = f(vec![(0, 2), (1, 3)], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = b.reduce(&[None, Some(2)]);
        assert_eq!(r.vars(), &[0]);
        assert_eq!(r.values(), &[3.0, 6.0]);
        let r = b.reduce(&[Some(1), None]);
        assert_eq!(r.values(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn rescale_preserves_log_total() {
        let mut a = f(vec![(0, 2)], vec![1e-200, 3e-200]);
        let before = a.log_total();
        a.rescale();
        assert!((a.log_total() - before).abs() < 1e-9);
        assert_eq!(a.values()[1], 1.0);
    }

    #[test]
    fn relabel_reorders_values() {
        let b = f(vec![(0, 2), (1, 3)], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        // swap ids: 0 -> 5, 1 -> 4 so scope becomes [4 (card 3), 5 (card 2)]
        let r = b.relabel(|v| if v == 0 { 5 } else { 4 });
        assert_eq!(r.vars(), &[4, 5]);
        assert_eq!(r.values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }
}
