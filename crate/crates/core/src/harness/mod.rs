//! Evaluation harness: runs the three-stage pipeline over labeled corpora,
//! applies ablation configurations, attaches the latency model, and
//! aggregates funnel metrics into reports.
//!
//! Samples are evaluated in parallel; everything that lands in a canonical
//! report is a deterministic function of (corpus, config): simulated
//! latency draws are keyed by sample id, outcomes are folded in sample-id
//! order, and measured wall-clock numbers are kept out of serialized
//! output (a timing sidecar carries them instead).

pub mod latency;
pub mod report;
pub mod stats;

use crate::corpus::Sample;
use crate::guard::{guard_evaluate, GuardOutcome, PolicySet};
use crate::planner::{plan_stage, Plan, PlannerBackend, PlannerOutcome};
use crate::sentinel::{sentinel_scan, LocalClassifier, SentinelConfig, SentinelOutcome};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub use latency::LatencyModel;
pub use report::{
    emit_report, timing_summary, AblationRow, AblationTable, AdaptiveRow, AdaptiveTable,
    EvalReport, ReportFormat, SankeyEdge, TimingSummary, REPORT_SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    L1,
    L2,
    L3,
}

impl std::str::FromStr for Layer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L1" => Ok(Layer::L1),
            "L2" => Ok(Layer::L2),
            "L3" => Ok(Layer::L3),
            other => Err(Error::Config(format!(
                "unknown layer {other:?} (expected L1, L2, or L3)"
            ))),
        }
    }
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Layer::L1 => write!(f, "L1"),
            Layer::L2 => write!(f, "L2"),
            Layer::L3 => write!(f, "L3"),
        }
    }
}

/// Parse a `--layers` style list: comma-separated, empty string = baseline.
pub fn parse_layer_list(s: &str) -> Result<BTreeSet<Layer>> {
    let mut layers = BTreeSet::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        layers.insert(part.parse()?);
    }
    Ok(layers)
}

/// Which stages run, and with what policies and latency model. The planner
/// backend is passed separately to the run functions (it may be a remote
/// client and is not serializable configuration).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub layers: BTreeSet<Layer>,
    pub sentinel: SentinelConfig,
    pub policy: PolicySet,
    pub latency: LatencyModel,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl PipelineConfig {
    /// All three layers with default policies.
    pub fn full() -> Self {
        PipelineConfig {
            layers: [Layer::L1, Layer::L2, Layer::L3].into_iter().collect(),
            sentinel: SentinelConfig::default(),
            policy: PolicySet::default(),
            latency: LatencyModel::default(),
        }
    }

    /// No layers at all: every attack goes through.
    pub fn baseline() -> Self {
        PipelineConfig {
            layers: BTreeSet::new(),
            ..Self::full()
        }
    }

    /// The same policies with a different layer set.
    pub fn with_layer_set(&self, layers: impl IntoIterator<Item = Layer>) -> Result<Self> {
        let cfg = PipelineConfig {
            layers: layers.into_iter().collect(),
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn enabled(&self, layer: Layer) -> bool {
        self.layers.contains(&layer)
    }

    /// The guard vets plans, so it cannot run without the planning stage.
    pub fn validate(&self) -> Result<()> {
        if self.enabled(Layer::L3) && !self.enabled(Layer::L2) {
            return Err(Error::Config(
                "layer set enables L3 without L2: the guard needs a plan to vet".to_string(),
            ));
        }
        self.sentinel.validate()?;
        self.policy.validate()?;
        self.latency.validate()?;
        Ok(())
    }
}

/// Byte accounting for one sample's payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadBytes {
    pub raw_bytes: usize,
    /// Bytes after sanitization; absent when the edge blocked the page
    /// before extraction (nothing left the edge).
    pub sanitized_bytes: Option<usize>,
}

/// Per-layer latency record for one sample. Measured wall-clock values are
/// kept out of canonical serialized output so identical runs serialize
/// identically; the timing sidecar reports them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutcomeLatency {
    #[serde(skip)]
    pub l1_measured_ns: u128,
    pub l2_simulated_ms: Option<f64>,
    pub l3_plan_wait_simulated_ms: Option<f64>,
    /// Sum of all simulated waiting this sample experienced.
    pub total_simulated_ms: f64,
    #[serde(skip)]
    pub guard_measured_ns: u128,
}

/// Equality covers only the canonical (serialized) fields; measured
/// wall-clock values vary run to run and are excluded, exactly as they are
/// excluded from serialization.
impl PartialEq for OutcomeLatency {
    fn eq(&self, other: &Self) -> bool {
        self.l2_simulated_ms == other.l2_simulated_ms
            && self.l3_plan_wait_simulated_ms == other.l3_plan_wait_simulated_ms
            && self.total_simulated_ms == other.total_simulated_ms
    }
}

/// What the pipeline did with one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub sample_id: String,
    pub is_attack: bool,
    pub blocked_at: Option<Layer>,
    /// The attack's induced plan was allowed to proceed. Implies
    /// `blocked_at == None` on an attack sample.
    pub attack_succeeded: bool,
    pub cloud_called: bool,
    /// The planning stage failed transport and was rejected fail-closed.
    pub transport_error: bool,
    pub latency: OutcomeLatency,
    pub payload: PayloadBytes,
}

/// Run one sample through the configured stages, in order, stopping at the
/// first interception. Fail-closed throughout: an edge block never calls
/// the cloud, a planner rejection never reaches the guard, and a guard
/// block never dispatches.
pub fn run_pipeline(
    sample: &Sample,
    cfg: &PipelineConfig,
    backend: &dyn PlannerBackend,
    classifier: &dyn LocalClassifier,
) -> Result<Outcome> {
    let tree = crate::dom::parse_document(&sample.html);
    let mut latency = OutcomeLatency::default();
    let mut payload_bytes = PayloadBytes {
        raw_bytes: sample.html.len(),
        sanitized_bytes: None,
    };
    let mut sanitized: Option<String> = None;

    if cfg.enabled(Layer::L1) {
        let verdict = sentinel_scan(&tree, &cfg.sentinel, classifier);
        latency.l1_measured_ns = verdict.stats.wall_clock_ns;
        if verdict.outcome == SentinelOutcome::Blocked {
            return Ok(Outcome {
                sample_id: sample.id.clone(),
                is_attack: sample.is_attack(),
                blocked_at: Some(Layer::L1),
                attack_succeeded: false,
                cloud_called: false,
                transport_error: false,
                latency,
                payload: payload_bytes,
            });
        }
        payload_bytes.sanitized_bytes = Some(verdict.stats.sanitized_bytes);
        sanitized = verdict.sanitized_payload;
    }

    let mut blocked_at: Option<Layer> = None;
    let mut cloud_called = false;
    let mut transport_error = false;
    let mut emitted: Option<Plan> = None;

    if cfg.enabled(Layer::L2) {
        cloud_called = true;
        let payload = match sanitized {
            Some(p) => p,
            None => {
                // Without the edge stage the cloud still receives the
                // sanitized extraction, just unscreened.
                let p = crate::sentinel::sanitize(&tree);
                payload_bytes.sanitized_bytes = Some(p.len());
                p
            }
        };
        let hint = sample.plan_hint();
        let l2_ms = cfg.latency.l2_draw_ms(&sample.id);
        let verdict = plan_stage(&sample.goal, &payload, hint.as_ref(), backend, l2_ms)?;
        latency.l2_simulated_ms = Some(l2_ms);
        latency.total_simulated_ms += l2_ms;
        transport_error = verdict.transport_error;
        match verdict.outcome {
            PlannerOutcome::Rejected { .. } => blocked_at = Some(Layer::L2),
            PlannerOutcome::Planned { plan, .. } => emitted = Some(plan),
        }
    }

    if blocked_at.is_none() && cfg.enabled(Layer::L3) {
        if let Some(plan) = &emitted {
            let wait_ms = cfg.latency.l3_plan_wait_ms(&sample.id);
            latency.l3_plan_wait_simulated_ms = Some(wait_ms);
            latency.total_simulated_ms += wait_ms;
            let decision = guard_evaluate(
                plan,
                &cfg.policy,
                plan.declared_scope,
                &sample.goal.task_domain,
            );
            latency.guard_measured_ns = decision.decision_time_ns;
            if decision.outcome == GuardOutcome::Block {
                blocked_at = Some(Layer::L3);
            }
        }
    }

    // An attack succeeds when nothing blocked it and the plan that would
    // execute is the induced one. With no planning stage there is no plan
    // to compare: the attack goes entirely unchecked.
    let attack_succeeded = sample.is_attack()
        && blocked_at.is_none()
        && match (&emitted, &sample.induced_plan) {
            (Some(plan), Some(induced)) => plan.steps == induced.steps,
            (Some(_), None) => false,
            (None, _) => true,
        };

    Ok(Outcome {
        sample_id: sample.id.clone(),
        is_attack: sample.is_attack(),
        blocked_at,
        attack_succeeded,
        cloud_called,
        transport_error,
        latency,
        payload: payload_bytes,
    })
}

/// Evaluate a corpus: parallel per-sample runs, then a deterministic fold
/// over outcomes sorted by sample id.
pub fn run_outcomes(
    samples: &[Sample],
    cfg: &PipelineConfig,
    backend: &dyn PlannerBackend,
) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    let classifier = cfg.sentinel.build_classifier()?;
    let mut outcomes = samples
        .par_iter()
        .map(|sample| run_pipeline(sample, cfg, backend, &classifier))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(outcomes)
}

/// Evaluate a corpus and aggregate the funnel report.
pub fn run_eval(
    samples: &[Sample],
    cfg: &PipelineConfig,
    backend: &dyn PlannerBackend,
) -> Result<EvalReport> {
    let outcomes = run_outcomes(samples, cfg, backend)?;
    Ok(report::build_report(cfg, outcomes))
}

/// The four standard configurations, weakest first.
pub fn ablation_layer_sets() -> [(&'static str, Vec<Layer>); 4] {
    [
        ("baseline", vec![]),
        ("edge_only", vec![Layer::L1]),
        ("edge_cloud", vec![Layer::L1, Layer::L2]),
        ("full", vec![Layer::L1, Layer::L2, Layer::L3]),
    ]
}

/// Run all four standard configurations. The returned report is the
/// full-configuration evaluation with the ablation table attached; each
/// row embeds its own outcome records so every tabulated value can be
/// recomputed from the data it ships with.
pub fn run_ablation(
    samples: &[Sample],
    base_cfg: &PipelineConfig,
    backend: &dyn PlannerBackend,
) -> Result<EvalReport> {
    let mut rows = Vec::new();
    let mut full_report: Option<EvalReport> = None;
    for (label, layers) in ablation_layer_sets() {
        let cfg = base_cfg.with_layer_set(layers.clone())?;
        let row_report = run_eval(samples, &cfg, backend)?;
        rows.push(report::ablation_row(label, &layers, &row_report));
        if label == "full" {
            full_report = Some(row_report);
        }
    }
    let mut out = full_report.expect("full row present");
    out.ablation = Some(AblationTable { rows });
    Ok(out)
}

/// Run the adaptive scenarios (full configuration) and tabulate per-scenario
/// layer shares and success rates.
pub fn run_adaptive(
    adaptive_samples: &[Sample],
    cfg: &PipelineConfig,
    backend: &dyn PlannerBackend,
) -> Result<EvalReport> {
    let outcomes = run_outcomes(adaptive_samples, cfg, backend)?;
    let table = report::adaptive_table(adaptive_samples, &outcomes)?;
    let mut out = report::build_report(cfg, outcomes);
    out.adaptive = Some(table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{self, CorpusConfig};
    use crate::planner::ReferenceBackend;

    fn small_corpus() -> Vec<Sample> {
        let cfg = CorpusConfig {
            counts: crate::corpus::CategoryCounts {
                normal: 6,
                visual: 6,
                semantic: 6,
                hijack: 4,
            },
            detectability_targets: crate::corpus::DetectabilityTargets {
                l1: 3,
                l2: 7,
                l3: 5,
            },
            ..CorpusConfig::default()
        };
        corpus::generate_corpus(&cfg).unwrap()
    }

    #[test]
    fn l3_requires_l2() {
        let err = PipelineConfig::full()
            .with_layer_set([Layer::L1, Layer::L3])
            .unwrap_err();
        assert!(err.to_string().contains("L3 without L2"), "{err}");
    }

    #[test]
    fn layer_list_parsing() {
        assert_eq!(parse_layer_list("").unwrap(), BTreeSet::new());
        assert_eq!(
            parse_layer_list("L1, l2,L3").unwrap(),
            [Layer::L1, Layer::L2, Layer::L3].into_iter().collect()
        );
        assert!(parse_layer_list("L9").is_err());
    }

    #[test]
    fn small_corpus_outcomes_match_labels() {
        let samples = small_corpus();
        let cfg = PipelineConfig::full();
        let backend = ReferenceBackend::with_defaults();
        let outcomes = run_outcomes(&samples, &cfg, &backend).unwrap();
        let by_id: std::collections::BTreeMap<_, _> =
            outcomes.iter().map(|o| (o.sample_id.clone(), o)).collect();
        for sample in &samples {
            let outcome = by_id[&sample.id];
            let expected_block = match sample.expected_interception {
                corpus::ExpectedInterception::L1 => Some(Layer::L1),
                corpus::ExpectedInterception::L2 => Some(Layer::L2),
                corpus::ExpectedInterception::L3 => Some(Layer::L3),
                _ => None,
            };
            assert_eq!(outcome.blocked_at, expected_block, "{}", sample.id);
            let expected_success =
                sample.expected_interception == corpus::ExpectedInterception::SucceedsAttack;
            assert_eq!(outcome.attack_succeeded, expected_success, "{}", sample.id);
        }
    }

    #[test]
    fn baseline_lets_every_attack_through() {
        let samples = small_corpus();
        let cfg = PipelineConfig::baseline();
        let backend = ReferenceBackend::with_defaults();
        let outcomes = run_outcomes(&samples, &cfg, &backend).unwrap();
        for o in &outcomes {
            assert_eq!(o.blocked_at, None);
            assert_eq!(o.attack_succeeded, o.is_attack);
            assert!(!o.cloud_called);
        }
    }

    #[test]
    fn edge_block_never_calls_the_cloud() {
        let samples = small_corpus();
        let cfg = PipelineConfig::full();
        let backend = ReferenceBackend::with_defaults();
        for o in run_outcomes(&samples, &cfg, &backend).unwrap() {
            if o.blocked_at == Some(Layer::L1) {
                assert!(!o.cloud_called);
                assert_eq!(o.payload.sanitized_bytes, None);
            }
        }
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let samples = small_corpus();
        let cfg = PipelineConfig::full();
        let backend = ReferenceBackend::with_defaults();
        let classifier = cfg.sentinel.build_classifier().unwrap();
        let parallel = run_outcomes(&samples, &cfg, &backend).unwrap();
        let mut serial: Vec<Outcome> = samples
            .iter()
            .map(|s| run_pipeline(s, &cfg, &backend, &classifier).unwrap())
            .collect();
        serial.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        assert_eq!(parallel, serial);
    }

    #[test]
    fn without_edge_stage_the_cloud_still_gets_sanitized_payload() {
        let samples = small_corpus();
        let cfg = PipelineConfig::full()
            .with_layer_set([Layer::L2, Layer::L3])
            .unwrap();
        let backend = ReferenceBackend::with_defaults();
        for o in run_outcomes(&samples, &cfg, &backend).unwrap() {
            assert!(o.cloud_called);
            let sanitized = o.payload.sanitized_bytes.expect("always extracted");
            assert!(sanitized < o.payload.raw_bytes);
        }
    }

    #[test]
    fn ablation_asr_is_monotone_down_the_rows() {
        let samples = small_corpus();
        let backend = ReferenceBackend::with_defaults();
        let report = run_ablation(&samples, &PipelineConfig::full(), &backend).unwrap();
        let table = report.ablation.as_ref().unwrap();
        let asrs: Vec<f64> = table
            .rows
            .iter()
            .map(|r| r.asr_pct.expect("attacks present"))
            .collect();
        assert_eq!(asrs.len(), 4);
        for pair in asrs.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "ASR must not increase as layers are added: {asrs:?}"
            );
        }
    }
}
