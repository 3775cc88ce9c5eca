//! Unrolling a dynamic spec into one flat network.

use super::spec::{at_day, DbnSpec, ParentRef};
use super::DbnError;
use crate::pgm::{Cpt, Network};

/// Instantiates the static slice once and `days` copies of the template.
///
/// Template node `x` on day `t` is named `x@t`. Previous-day parents point at
/// day `t-1`, bridge parents at the static node, and day-1 nodes that would
/// need a day-0 parent use their initial CPT.
pub fn unroll(spec: &DbnSpec, days: usize) -> Result<Network, DbnError> {
    if days == 0 {
        return Err(DbnError::DayOutOfRange { day: 0, available: 0 });
    }
    let statics = spec.static_slice();
    let template = spec.template_variables();
    let mut variables = statics.variables().to_vec();
    let mut cpts = statics.cpts().to_vec();
    variables.reserve(days * template.len());
    cpts.reserve(days * template.len());
    for day in 1..=days {
        for (j, var) in template.iter().enumerate() {
            let (cpt, refs) = spec.cpt_for_day(j, day);
            let parents = refs
                .iter()
                .map(|r| match *r {
                    ParentRef::Static(s) => statics.variables()[s].name.clone(),
                    ParentRef::Current(k) => at_day(&template[k].name, day),
                    ParentRef::Previous(k) => at_day(&template[k].name, day - 1),
                })
                .collect();
            let name = at_day(&var.name, day);
            let mut v = var.clone();
            v.name = name.clone();
            variables.push(v);
            cpts.push(Cpt::new(name, parents, cpt.rows.clone()));
        }
    }
    Network::new(variables, cpts).map_err(DbnError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::testing::chain_spec;

    #[test]
    fn single_day_has_no_inter_slice_arcs() {
        let spec = chain_spec();
        let net = unroll(&spec, 1).unwrap();
        assert_eq!(net.len(), 2);
        assert!(net.cpt("result@1").unwrap().parents.is_empty());
        assert_eq!(net.cpt("O@1").unwrap().parents, vec!["result@1".to_string()]);
    }

    #[test]
    fn later_days_link_to_the_previous_day() {
        let net = unroll(&chain_spec(), 3).unwrap();
        assert_eq!(net.len(), 6);
        assert_eq!(net.cpt("result@3").unwrap().parents, vec!["result@2".to_string()]);
        assert_eq!(net.arc_count(), 3 + 2);
    }

    #[test]
    fn zero_days_is_rejected() {
        assert!(matches!(unroll(&chain_spec(), 0), Err(DbnError::DayOutOfRange { .. })));
    }
}
