//! Label soundness: every generated sample must actually do what its label
//! promises when run through the real pipeline. This is the load-bearing
//! integration test — the corpus is only a benchmark if its per-layer
//! detectability labels are true by execution, not by assertion.

use palisade::corpus::{
    generate_adaptive_corpus, generate_corpus, CorpusConfig, ExpectedInterception, Sample,
};
use palisade::harness::{run_outcomes, Layer, Outcome, PipelineConfig};
use palisade::planner::ReferenceBackend;
use std::collections::BTreeMap;

fn expected_block(expected: ExpectedInterception) -> Option<Layer> {
    match expected {
        ExpectedInterception::L1 => Some(Layer::L1),
        ExpectedInterception::L2 => Some(Layer::L2),
        ExpectedInterception::L3 => Some(Layer::L3),
        ExpectedInterception::None | ExpectedInterception::SucceedsAttack => None,
    }
}

fn assert_labels_hold(samples: &[Sample], outcomes: &[Outcome]) {
    let by_id: BTreeMap<&str, &Outcome> =
        outcomes.iter().map(|o| (o.sample_id.as_str(), o)).collect();
    assert_eq!(samples.len(), outcomes.len());
    let mut mismatches = Vec::new();
    for sample in samples {
        let outcome = by_id[sample.id.as_str()];
        let want_block = expected_block(sample.expected_interception);
        let want_success = sample.expected_interception == ExpectedInterception::SucceedsAttack;
        if outcome.blocked_at != want_block || outcome.attack_succeeded != want_success {
            mismatches.push(format!(
                "{}: labeled {:?}, got blocked_at={:?} succeeded={}",
                sample.id,
                sample.expected_interception,
                outcome.blocked_at,
                outcome.attack_succeeded
            ));
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} label mismatches:\n{}",
        mismatches.len(),
        mismatches.join("\n")
    );
}

#[test]
fn every_base_corpus_label_is_reproduced_by_execution() {
    let samples = generate_corpus(&CorpusConfig::default()).unwrap();
    let cfg = PipelineConfig::full();
    let backend = ReferenceBackend::with_defaults();
    let outcomes = run_outcomes(&samples, &cfg, &backend).unwrap();
    assert_labels_hold(&samples, &outcomes);
}

#[test]
fn every_adaptive_corpus_label_is_reproduced_by_execution() {
    let samples = generate_adaptive_corpus(&CorpusConfig::default()).unwrap();
    let cfg = PipelineConfig::full();
    let backend = ReferenceBackend::with_defaults();
    let outcomes = run_outcomes(&samples, &cfg, &backend).unwrap();
    assert_labels_hold(&samples, &outcomes);
}

#[test]
fn labels_stay_sound_under_a_different_master_seed() {
    let cfg = CorpusConfig {
        seed: 20260818,
        ..CorpusConfig::default()
    };
    let samples = generate_corpus(&cfg).unwrap();
    let pipeline = PipelineConfig::full();
    let backend = ReferenceBackend::with_defaults();
    let outcomes = run_outcomes(&samples, &pipeline, &backend).unwrap();
    assert_labels_hold(&samples, &outcomes);
}
