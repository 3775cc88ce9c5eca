mod common;

use proptest::prelude::*;
use serde_json::Value;

use nirisk::clinical::{default_ground_truth, default_schema, ingest_readers, write_records};
use nirisk::dbn::{
    filter, fit_dbn, predict_trajectory, sample_sequence, DbnSpec, EvidenceTimeline, FilterState, SequenceRecord,
};
use nirisk::eval::{classify, confusion, metrics, Label};
use nirisk::pgm::Assignment;
use nirisk::synth::{generate_cohort, CohortConfig};

fn matrix_at(scores: &[(f64, bool)], threshold: f64) -> nirisk::eval::ConfusionMatrix {
    let predicted: Vec<Label> = scores.iter().map(|&(p, _)| classify(p, threshold).unwrap()).collect();
    let actual: Vec<Label> = scores.iter().map(|&(_, a)| Label::from_bool(a)).collect();
    confusion(&predicted, &actual).unwrap()
}

/// The chain model with both rows of the observation CPT replaced.
fn chain_with_observation_rows(rows: [[f64; 2]; 2]) -> DbnSpec {
    let mut v: Value = serde_json::from_str(common::CHAIN_MODEL).unwrap();
    for (i, r) in rows.iter().enumerate() {
        v["slice_template"]["cpts"][1]["rows"][i]["probs"] = serde_json::json!(r);
    }
    DbnSpec::from_json(&v.to_string()).unwrap()
}

fn obs(o: &str) -> Assignment {
    Assignment::new().with("O", o)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_the_threshold_trades_false_alarms_for_misses(
        scores in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..60),
        a in 0.0..=1.0f64,
        b in 0.0..=1.0f64,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (m_lo, m_hi) = (matrix_at(&scores, lo), matrix_at(&scores, hi));
        prop_assert!(m_hi.fp <= m_lo.fp);
        prop_assert!(m_hi.fn_ >= m_lo.fn_);
        prop_assert_eq!(m_lo.total(), scores.len() as u64);
        prop_assert_eq!(m_lo.tp + m_lo.fn_, m_hi.tp + m_hi.fn_);
    }

    #[test]
    fn metrics_stay_in_range(tn in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tp in 0u64..500) {
        prop_assume!(tn + fp + fn_ + tp > 0);
        let m = nirisk::eval::ConfusionMatrix::new(tn, fp, fn_, tp);
        let r = metrics(&m).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.accuracy));
        prop_assert!((r.accuracy * m.total() as f64 - (tn + tp) as f64).abs() < 1e-9);
        prop_assert_eq!(r.ppv.is_some(), tp + fp > 0);
        prop_assert_eq!(r.npv.is_some(), tn + fn_ > 0);
        for v in [r.ppv, r.npv].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn filtered_beliefs_are_distributions_matching_enumeration(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let spec = common::random_spec(&mut rng);
        let days = 3;
        let tl = common::random_timeline(&mut rng, &spec, days, 0.5);
        for day in 1..=days {
            let d = filter(&spec, &tl, day).unwrap();
            let sum: f64 = d.probs.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(d.probs.iter().all(|p| (0.0..=1.0).contains(p)));
            let oracle = common::brute_force_filter(&spec, &tl, day);
            for (x, y) in d.probs.iter().zip(&oracle) {
                prop_assert!((x - y).abs() < 1e-9, "day {}: {} vs {}", day, x, y);
            }
        }
    }

    #[test]
    fn later_evidence_never_changes_earlier_predictions(seed in any::<u64>(), extra in 1usize..4) {
        let mut rng = common::rng(seed);
        let spec = common::random_spec(&mut rng);
        let tl = common::random_timeline(&mut rng, &spec, 2 + extra, 0.6);
        let full = predict_trajectory(&spec, &tl).unwrap();
        let short = predict_trajectory(&spec, &tl.prefix(2)).unwrap();
        prop_assert_eq!(&full.points[..short.points.len()], &short.points[..]);
    }

    #[test]
    fn peeking_matches_advancing_and_changes_nothing(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let spec = common::random_spec(&mut rng);
        let tl = common::random_timeline(&mut rng, &spec, 3, 0.6);
        let mut state = FilterState::start(&spec, &tl.static_evidence).unwrap();
        for day in &tl.days {
            let before = state.clone();
            let peeked = state.peek(&spec, day).unwrap();
            prop_assert_eq!(state.day(), before.day());
            prop_assert_eq!(state.peek(&spec, day).unwrap(), peeked);
            prop_assert_eq!(state.advance(&spec, day).unwrap(), peeked);
        }
    }

    #[test]
    fn uninformative_observations_leave_the_chain_prior(u in 0.01..0.99f64, pattern in prop::collection::vec(any::<bool>(), 1..8)) {
        let spec = chain_with_observation_rows([[u, 1.0 - u], [u, 1.0 - u]]);
        let mut tl = EvidenceTimeline::new(Assignment::new());
        for &pos in &pattern {
            tl = tl.with_day(obs(if pos { "pos" } else { "neg" }));
        }
        let trace = predict_trajectory(&spec, &tl).unwrap();
        // the prior chain: 0.2 on day 1, then p -> 0.7 p + 0.1 (1 - p)
        let mut p = 0.2;
        for point in trace.daily() {
            prop_assert!((point.probability - p).abs() < 1e-12);
            p = 0.7 * p + 0.1 * (1.0 - p);
        }
    }

    #[test]
    fn written_cohorts_read_back_unchanged(seed in any::<u64>(), n in 1usize..25) {
        let schema = default_schema();
        let records = generate_cohort(&default_ground_truth(), &schema, &CohortConfig::new(n, seed)).unwrap();
        let (mut fixed, mut daily) = (Vec::new(), Vec::new());
        write_records(&records, &schema, &mut fixed, &mut daily).unwrap();
        let (back, report) = ingest_readers(&fixed[..], &daily[..], &schema).unwrap();
        prop_assert_eq!(back, records);
        prop_assert_eq!(report.rows_dropped, 0);
    }
}

#[test]
fn unsmoothed_fit_reproduces_the_sample_frequencies() {
    let spec = common::chain();
    let mut rng = common::rng(11);
    let samples: Vec<_> = (0..400).map(|_| sample_sequence(&spec, 6, &mut rng)).collect();
    let records: Vec<SequenceRecord> = samples.iter().map(|s| s.to_record(&spec)).collect();
    let (learned, report) = fit_dbn(spec.structure(), &records, 0.0).unwrap();
    assert!(report.uniform_rows.is_empty());

    // counts straight from the sampled state indices: result is template
    // variable 0, O is variable 1, state 0 is yes / pos
    let (mut first_yes, mut stay, mut from_yes, mut turn, mut from_no) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut pos_yes, mut yes, mut pos_no, mut no) = (0.0, 0.0, 0.0, 0.0);
    for s in &samples {
        first_yes += (s.days[0][0] == 0) as u8 as f64;
        for w in s.days.windows(2) {
            if w[0][0] == 0 {
                from_yes += 1.0;
                stay += (w[1][0] == 0) as u8 as f64;
            } else {
                from_no += 1.0;
                turn += (w[1][0] == 0) as u8 as f64;
            }
        }
        for d in &s.days {
            if d[0] == 0 {
                yes += 1.0;
                pos_yes += (d[1] == 0) as u8 as f64;
            } else {
                no += 1.0;
                pos_no += (d[1] == 0) as u8 as f64;
            }
        }
    }
    let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    let initial = learned.initial_cpts()[0].as_ref().unwrap();
    close(initial.rows[0][0], first_yes / samples.len() as f64);
    let transition = &learned.template_cpts()[0];
    close(transition.rows[0][0], stay / from_yes);
    close(transition.rows[1][0], turn / from_no);
    let observation = &learned.template_cpts()[1];
    close(observation.rows[0][0], pos_yes / yes);
    close(observation.rows[1][0], pos_no / no);
}

#[test]
fn missing_days_only_propagate() {
    let spec = common::chain();
    let tl = EvidenceTimeline::new(Assignment::new())
        .with_day(obs("pos"))
        .with_day(Assignment::new())
        .with_day(Assignment::new());
    let trace = predict_trajectory(&spec, &tl).unwrap();
    let daily: Vec<f64> = trace.daily().map(|p| p.probability).collect();
    for w in daily.windows(2) {
        assert!((w[1] - (0.7 * w[0] + 0.1 * (1.0 - w[0]))).abs() < 1e-12);
    }
}
