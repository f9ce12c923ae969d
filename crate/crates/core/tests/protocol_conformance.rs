//! Remote-planner protocol conformance: a pipeline talking to the planning
//! service over HTTP must make exactly the decisions the in-process
//! reference backend makes, and transport failures must degrade fail-closed
//! (rejected at the planning stage), never fail-open.

use palisade::corpus::{
    generate_adaptive_corpus, generate_corpus, AdaptiveCounts, CategoryCounts, CorpusConfig,
    DetectabilityTargets,
};
use palisade::harness::{run_eval, run_outcomes, Layer, PipelineConfig};
use palisade::planner::{LoopbackPlannerServer, ReferenceBackend, RemoteBackend};

fn small_config() -> CorpusConfig {
    CorpusConfig {
        counts: CategoryCounts {
            normal: 10,
            visual: 8,
            semantic: 8,
            hijack: 6,
        },
        detectability_targets: DetectabilityTargets {
            l1: 3,
            l2: 9,
            l3: 7,
        },
        adaptive_counts: AdaptiveCounts {
            fragmentation: 8,
            benign_wrapping: 8,
            allowed_origin_exfil: 8,
        },
        ..CorpusConfig::default()
    }
}

#[test]
fn remote_service_decisions_match_the_reference_backend() {
    let cfg = small_config();
    let mut samples = generate_corpus(&cfg).unwrap();
    samples.extend(generate_adaptive_corpus(&cfg).unwrap());

    let pipeline = PipelineConfig::full();
    let reference = ReferenceBackend::with_defaults();
    let expected = run_outcomes(&samples, &pipeline, &reference).unwrap();

    let server = LoopbackPlannerServer::start(ReferenceBackend::with_defaults()).unwrap();
    let remote = RemoteBackend::new(server.endpoint(), 5_000);
    let actual = run_outcomes(&samples, &pipeline, &remote).unwrap();

    assert_eq!(expected, actual);
    assert!(actual.iter().all(|o| !o.transport_error));
}

#[test]
fn transport_failure_rejects_fail_closed() {
    let cfg = small_config();
    let samples = generate_corpus(&cfg).unwrap();
    // A port nothing listens on: every call fails at transport.
    let dead = RemoteBackend::new("http://127.0.0.1:9", 200);
    let pipeline = PipelineConfig::full();
    let report = run_eval(&samples, &pipeline, &dead).unwrap();

    for o in &report.outcomes {
        match o.blocked_at {
            // Edge blocks happen before any remote call.
            Some(Layer::L1) => assert!(!o.cloud_called && !o.transport_error),
            // Everything else must be rejected at the planning stage.
            Some(Layer::L2) => assert!(o.cloud_called && o.transport_error),
            other => panic!(
                "{}: transport failure must never let a sample through, got {:?}",
                o.sample_id, other
            ),
        }
        assert!(!o.attack_succeeded);
    }
    let expected_rejections = report.outcomes.iter().filter(|o| o.cloud_called).count();
    assert_eq!(report.funnel.transport_rejections, expected_rejections);
    assert!(expected_rejections > 0);
    // Transport rejections are reported inside the L2 totals, and separately.
    assert_eq!(report.funnel.l2_rejections.count, expected_rejections);
}

#[test]
fn loopback_server_survives_concurrent_load() {
    let cfg = small_config();
    let samples = generate_corpus(&cfg).unwrap();
    let server = LoopbackPlannerServer::start(ReferenceBackend::with_defaults()).unwrap();
    let remote = RemoteBackend::new(server.endpoint(), 5_000);
    let pipeline = PipelineConfig::full();
    // Two back-to-back full runs over the same server instance.
    let first = run_outcomes(&samples, &pipeline, &remote).unwrap();
    let second = run_outcomes(&samples, &pipeline, &remote).unwrap();
    assert_eq!(first, second);
}
