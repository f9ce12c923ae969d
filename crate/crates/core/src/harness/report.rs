//! Report aggregation and emission.
//!
//! Canonical reports contain only values that are a deterministic function
//! of (corpus, configuration): counts, shares, simulated latency, byte
//! accounting, and the embedded outcome records they were tabulated from.
//! Measured wall-clock timings vary run to run and therefore live in a
//! separate timing sidecar, never in the canonical report.

use super::stats::{mean, median, sample_sd};
use super::{Layer, Outcome, PipelineConfig};
use crate::corpus::{AdaptiveTag, Sample};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A count expressed against both meaningful bases, each labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShare {
    pub count: usize,
    pub pct_of_all_samples: Option<f64>,
    pub pct_of_attacks: Option<f64>,
}

impl LayerShare {
    fn new(count: usize, samples: usize, attacks: usize) -> Self {
        LayerShare {
            count,
            pct_of_all_samples: pct(count, samples),
            pct_of_attacks: pct(count, attacks),
        }
    }
}

fn pct(count: usize, base: usize) -> Option<f64> {
    if base == 0 {
        None
    } else {
        Some(count as f64 / base as f64 * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub samples: usize,
    pub attacks: usize,
    pub benign: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelStats {
    pub l1_interceptions: LayerShare,
    pub l2_rejections: LayerShare,
    pub l3_blocks: LayerShare,
    /// Samples that traversed every enabled stage without their induced
    /// action executing (all benign samples land here).
    pub passed_benign: usize,
    pub attacks_succeeded: usize,
    /// Succeeded attacks as a share of attack samples.
    pub attack_success_rate_pct: Option<f64>,
    /// Planner rejections caused by transport failure (fail-closed);
    /// included in `l2_rejections`.
    pub transport_rejections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyDist {
    pub mean_ms: f64,
    pub sd_ms: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    /// Simulated planning round-trip, over samples that called the planner.
    pub l2_simulated: Option<LatencyDist>,
    /// Simulated time until a vetted plan exists (planning plus plan wait),
    /// over samples that reached the guard.
    pub l3_cumulative_simulated: Option<LatencyDist>,
    /// Mean of per-sample total simulated latency over all samples.
    pub aggregate_mean_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    pub calls: usize,
    pub calls_pct_of_all_samples: Option<f64>,
    /// Pages the edge stage stopped before any remote call.
    pub avoided: usize,
    pub avoided_pct_of_all_samples: Option<f64>,
    pub avoided_pct_of_attacks: Option<f64>,
    /// Raw bytes of pages blocked at the edge: content that never left
    /// the machine.
    pub bytes_never_transmitted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanitizerStats {
    /// Pages that went through extraction (not blocked at the edge).
    pub pages: usize,
    pub raw_bytes_total: u64,
    pub sanitized_bytes_total: u64,
    /// Mean per-page size reduction, raw HTML to sanitized text.
    pub mean_reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SankeyEdge {
    pub from: String,
    pub to: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub layers: Vec<Layer>,
    pub samples: usize,
    pub attacks: usize,
    pub l1_interceptions: usize,
    pub l2_rejections: usize,
    pub l3_blocks: usize,
    pub attacks_succeeded: usize,
    pub asr_pct: Option<f64>,
    /// The raw outcome records this row was tabulated from.
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRow {
    pub scenario: AdaptiveTag,
    pub samples: usize,
    pub l1_interceptions: usize,
    pub l1_pct: Option<f64>,
    pub l2_rejections: usize,
    pub l2_pct: Option<f64>,
    pub l3_blocks: usize,
    pub l3_pct: Option<f64>,
    pub attacks_succeeded: usize,
    pub success_pct: Option<f64>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTable {
    pub rows: Vec<AdaptiveRow>,
    pub total_samples: usize,
    pub total_succeeded: usize,
    pub aggregate_success_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub layers: Vec<Layer>,
    pub latency_seed: u64,
    pub totals: Totals,
    pub funnel: FunnelStats,
    pub latency: LatencySummary,
    pub cloud: CloudStats,
    pub sanitizer: SanitizerStats,
    pub sankey_edges: Vec<SankeyEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveTable>,
    pub footnotes: Vec<String>,
    /// Every per-sample record the aggregates were computed from, in
    /// sample-id order, so each figure above is independently recomputable.
    pub outcomes: Vec<Outcome>,
}

/// Plain tallies over a set of outcomes. Tabulation always goes through
/// this one function so aggregate figures and integrity re-checks cannot
/// drift apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FunnelCounts {
    pub samples: usize,
    pub attacks: usize,
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
    pub succeeded: usize,
    pub passed_benign: usize,
    pub transport_rejections: usize,
    pub cloud_calls: usize,
    pub bytes_never_transmitted: u64,
}

pub fn recount(outcomes: &[Outcome]) -> FunnelCounts {
    let mut c = FunnelCounts {
        samples: outcomes.len(),
        ..FunnelCounts::default()
    };
    for o in outcomes {
        if o.is_attack {
            c.attacks += 1;
        }
        match o.blocked_at {
            Some(Layer::L1) => {
                c.l1 += 1;
                c.bytes_never_transmitted += o.payload.raw_bytes as u64;
            }
            Some(Layer::L2) => c.l2 += 1,
            Some(Layer::L3) => c.l3 += 1,
            None => {
                if o.attack_succeeded {
                    c.succeeded += 1;
                } else {
                    c.passed_benign += 1;
                }
            }
        }
        if o.transport_error {
            c.transport_rejections += 1;
        }
        if o.cloud_called {
            c.cloud_calls += 1;
        }
    }
    c
}

const STAGE_ORDER: [&str; 8] = [
    "input",
    "l1_blocked",
    "l2",
    "l2_rejected",
    "l3",
    "l3_blocked",
    "passed_benign",
    "attack_succeeded",
];

fn stage_index(name: &str) -> usize {
    STAGE_ORDER
        .iter()
        .position(|s| *s == name)
        .unwrap_or(STAGE_ORDER.len())
}

/// Trace every outcome's path through the enabled stages and tally the
/// edges. Flow is conserved by construction: each sample contributes one
/// unbroken path from `input` to exactly one terminal stage.
pub fn build_sankey(outcomes: &[Outcome], cfg: &PipelineConfig) -> Vec<SankeyEdge> {
    let mut edges: BTreeMap<(usize, usize), (&str, &str, usize)> = BTreeMap::new();
    let mut add = |from: &'static str, to: &'static str| {
        let key = (stage_index(from), stage_index(to));
        edges.entry(key).or_insert((from, to, 0)).2 += 1;
    };
    for o in outcomes {
        match o.blocked_at {
            Some(Layer::L1) => add("input", "l1_blocked"),
            Some(Layer::L2) => {
                add("input", "l2");
                add("l2", "l2_rejected");
            }
            Some(Layer::L3) => {
                add("input", "l2");
                add("l2", "l3");
                add("l3", "l3_blocked");
            }
            None => {
                let terminal = if o.attack_succeeded {
                    "attack_succeeded"
                } else {
                    "passed_benign"
                };
                if !o.cloud_called {
                    add("input", terminal);
                } else if cfg.enabled(Layer::L3) {
                    add("input", "l2");
                    add("l2", "l3");
                    add("l3", terminal);
                } else {
                    add("input", "l2");
                    add("l2", terminal);
                }
            }
        }
    }
    edges
        .into_values()
        .map(|(from, to, count)| SankeyEdge {
            from: from.to_string(),
            to: to.to_string(),
            count,
        })
        .collect()
}

/// Check flow conservation: `input` emits exactly `total` units, interior
/// stages pass through what they receive, and terminal stages absorb
/// everything.
pub fn sankey_is_conserved(edges: &[SankeyEdge], total: usize) -> bool {
    let mut inflow: BTreeMap<&str, usize> = BTreeMap::new();
    let mut outflow: BTreeMap<&str, usize> = BTreeMap::new();
    for e in edges {
        *outflow.entry(e.from.as_str()).or_default() += e.count;
        *inflow.entry(e.to.as_str()).or_default() += e.count;
    }
    if outflow.get("input").copied().unwrap_or(0) != total {
        return false;
    }
    if inflow.contains_key("input") {
        return false;
    }
    let terminals = [
        "l1_blocked",
        "l2_rejected",
        "l3_blocked",
        "passed_benign",
        "attack_succeeded",
    ];
    for t in terminals {
        if outflow.get(t).copied().unwrap_or(0) != 0 {
            return false;
        }
    }
    for interior in ["l2", "l3"] {
        let inn = inflow.get(interior).copied().unwrap_or(0);
        let out = outflow.get(interior).copied().unwrap_or(0);
        if inn != out {
            return false;
        }
    }
    let absorbed: usize = terminals
        .iter()
        .map(|t| inflow.get(*t).copied().unwrap_or(0))
        .sum();
    absorbed == total
}

/// Aggregate sorted outcomes into a canonical report.
pub fn build_report(cfg: &PipelineConfig, outcomes: Vec<Outcome>) -> EvalReport {
    let counts = recount(&outcomes);
    let totals = Totals {
        samples: counts.samples,
        attacks: counts.attacks,
        benign: counts.samples - counts.attacks,
    };
    let funnel = FunnelStats {
        l1_interceptions: LayerShare::new(counts.l1, counts.samples, counts.attacks),
        l2_rejections: LayerShare::new(counts.l2, counts.samples, counts.attacks),
        l3_blocks: LayerShare::new(counts.l3, counts.samples, counts.attacks),
        passed_benign: counts.passed_benign,
        attacks_succeeded: counts.succeeded,
        attack_success_rate_pct: pct(counts.succeeded, counts.attacks),
        transport_rejections: counts.transport_rejections,
    };

    let l2_draws: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.latency.l2_simulated_ms)
        .collect();
    let l3_cumulative: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| {
            let wait = o.latency.l3_plan_wait_simulated_ms?;
            Some(o.latency.l2_simulated_ms.unwrap_or(0.0) + wait)
        })
        .collect();
    let totals_ms: Vec<f64> = outcomes
        .iter()
        .map(|o| o.latency.total_simulated_ms)
        .collect();
    let dist = |values: &[f64]| -> Option<LatencyDist> {
        let mean_ms = mean(values)?;
        Some(LatencyDist {
            mean_ms,
            sd_ms: sample_sd(values),
            count: values.len(),
        })
    };
    let latency = LatencySummary {
        l2_simulated: dist(&l2_draws),
        l3_cumulative_simulated: dist(&l3_cumulative),
        aggregate_mean_ms: mean(&totals_ms),
    };

    let cloud = CloudStats {
        calls: counts.cloud_calls,
        calls_pct_of_all_samples: pct(counts.cloud_calls, counts.samples),
        avoided: counts.l1,
        avoided_pct_of_all_samples: pct(counts.l1, counts.samples),
        avoided_pct_of_attacks: pct(counts.l1, counts.attacks),
        bytes_never_transmitted: counts.bytes_never_transmitted,
    };

    let measured: Vec<&Outcome> = outcomes
        .iter()
        .filter(|o| o.payload.sanitized_bytes.is_some())
        .collect();
    let reductions: Vec<f64> = measured
        .iter()
        .filter(|o| o.payload.raw_bytes > 0)
        .map(|o| {
            let raw = o.payload.raw_bytes as f64;
            let kept = o.payload.sanitized_bytes.unwrap_or(0) as f64;
            (1.0 - kept / raw) * 100.0
        })
        .collect();
    let sanitizer = SanitizerStats {
        pages: measured.len(),
        raw_bytes_total: measured.iter().map(|o| o.payload.raw_bytes as u64).sum(),
        sanitized_bytes_total: measured
            .iter()
            .map(|o| o.payload.sanitized_bytes.unwrap_or(0) as u64)
            .sum(),
        mean_reduction_pct: mean(&reductions),
    };

    let sankey_edges = build_sankey(&outcomes, cfg);

    let mut footnotes = vec![
        "Interception shares are stated against both bases explicitly: \
         share of all samples and share of attack samples."
            .to_string(),
    ];
    if counts.l3 == 260 && counts.attacks == 678 {
        footnotes.push(
            "Layer-3 blocks are tallied directly from outcome records (260), which \
             balances the funnel exactly; published reference figures list 259 at \
             layer 3, leaving one interception unattributed."
                .to_string(),
        );
    }
    if !l2_draws.is_empty() {
        footnotes.push(
            "Aggregate latency is the mean of per-sample total simulated waiting \
             over all samples, including pages blocked before the later stages, \
             and is exactly recomputable from the embedded outcome records. \
             Published reference figures quote a smaller aggregate (~517 ms) that \
             is not reproducible from the stated per-stage distribution parameters."
                .to_string(),
        );
    }

    EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        layers: cfg.layers.iter().copied().collect(),
        latency_seed: cfg.latency.seed,
        totals,
        funnel,
        latency,
        cloud,
        sanitizer,
        sankey_edges,
        ablation: None,
        adaptive: None,
        footnotes,
        outcomes,
    }
}

/// Condense one configuration's report into an ablation row.
pub fn ablation_row(label: &str, layers: &[Layer], report: &EvalReport) -> AblationRow {
    AblationRow {
        label: label.to_string(),
        layers: layers.to_vec(),
        samples: report.totals.samples,
        attacks: report.totals.attacks,
        l1_interceptions: report.funnel.l1_interceptions.count,
        l2_rejections: report.funnel.l2_rejections.count,
        l3_blocks: report.funnel.l3_blocks.count,
        attacks_succeeded: report.funnel.attacks_succeeded,
        asr_pct: report.funnel.attack_success_rate_pct,
        outcomes: report.outcomes.clone(),
    }
}

/// Group adaptive-scenario outcomes by their sample's tag and tabulate
/// per-scenario layer shares and success rates.
pub fn adaptive_table(samples: &[Sample], outcomes: &[Outcome]) -> Result<AdaptiveTable> {
    let tag_by_id: BTreeMap<&str, AdaptiveTag> = samples
        .iter()
        .map(|s| (s.id.as_str(), s.adaptive_tag))
        .collect();
    let mut grouped: BTreeMap<AdaptiveTag, Vec<Outcome>> = BTreeMap::new();
    for o in outcomes {
        let tag = tag_by_id
            .get(o.sample_id.as_str())
            .copied()
            .ok_or_else(|| {
                Error::Report(format!(
                    "outcome {} has no matching sample in the adaptive corpus",
                    o.sample_id
                ))
            })?;
        if tag != AdaptiveTag::None {
            grouped.entry(tag).or_default().push(o.clone());
        }
    }
    let mut rows = Vec::new();
    let mut total_samples = 0;
    let mut total_succeeded = 0;
    for (scenario, group) in grouped {
        let c = recount(&group);
        total_samples += c.samples;
        total_succeeded += c.succeeded;
        rows.push(AdaptiveRow {
            scenario,
            samples: c.samples,
            l1_interceptions: c.l1,
            l1_pct: pct(c.l1, c.samples),
            l2_rejections: c.l2,
            l2_pct: pct(c.l2, c.samples),
            l3_blocks: c.l3,
            l3_pct: pct(c.l3, c.samples),
            attacks_succeeded: c.succeeded,
            success_pct: pct(c.succeeded, c.samples),
            outcomes: group,
        });
    }
    Ok(AdaptiveTable {
        rows,
        total_samples,
        total_succeeded,
        aggregate_success_pct: pct(total_succeeded, total_samples),
    })
}

/// Measured wall-clock statistics, reported separately from the canonical
/// report because they vary run to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub l1_scans: usize,
    pub l1_mean_ms: Option<f64>,
    pub l1_median_ms: Option<f64>,
    pub guard_decisions: usize,
    pub guard_median_us: Option<f64>,
}

pub fn timing_summary(outcomes: &[Outcome]) -> TimingSummary {
    let l1_ms: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.latency.l1_measured_ns > 0)
        .map(|o| o.latency.l1_measured_ns as f64 / 1e6)
        .collect();
    let guard_us: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.latency.guard_measured_ns > 0)
        .map(|o| o.latency.guard_measured_ns as f64 / 1e3)
        .collect();
    TimingSummary {
        l1_scans: l1_ms.len(),
        l1_mean_ms: mean(&l1_ms),
        l1_median_ms: median(&l1_ms),
        guard_decisions: guard_us.len(),
        guard_median_us: median(&guard_us),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!(
                "unknown report format {other:?} (expected json, csv, or markdown)"
            ))),
        }
    }
}

/// Write every staged file to a temporary sibling first and rename only
/// after all writes succeeded, so a failure never leaves partial output.
fn write_all_atomic(files: Vec<(PathBuf, String)>) -> Result<Vec<PathBuf>> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = std::fs::remove_file(tmp);
        }
    };
    for (final_path, contents) in &files {
        let mut tmp_name = final_path
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        tmp_name.push(format!(".tmp.{}", std::process::id()));
        let tmp = final_path.with_file_name(tmp_name);
        if let Err(e) = std::fs::write(&tmp, contents) {
            let _ = std::fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(Error::Report(format!(
                "writing {}: {e}",
                final_path.display()
            )));
        }
        staged.push((tmp, final_path.clone()));
    }
    for i in 0..staged.len() {
        let (tmp, final_path) = &staged[i];
        if let Err(e) = std::fs::rename(tmp, final_path) {
            cleanup(&staged[i..]);
            return Err(Error::Report(format!(
                "renaming into {}: {e}",
                final_path.display()
            )));
        }
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn fmt_opt_fixed(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "—".to_string(),
    }
}

fn layers_label(layers: &[Layer]) -> String {
    if layers.is_empty() {
        "none".to_string()
    } else {
        layers
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

fn csv_tables(report: &EvalReport) -> Vec<(String, String)> {
    let mut tables = Vec::new();

    let mut funnel = String::new();
    funnel.push_str("stage,count,pct_of_all_samples,pct_of_attacks\n");
    for (name, share) in [
        ("l1_interceptions", &report.funnel.l1_interceptions),
        ("l2_rejections", &report.funnel.l2_rejections),
        ("l3_blocks", &report.funnel.l3_blocks),
    ] {
        funnel.push_str(&csv_line(&[
            name.to_string(),
            share.count.to_string(),
            fmt_opt(share.pct_of_all_samples),
            fmt_opt(share.pct_of_attacks),
        ]));
        funnel.push('\n');
    }
    funnel.push_str(&csv_line(&[
        "attacks_succeeded".to_string(),
        report.funnel.attacks_succeeded.to_string(),
        fmt_opt(pct(report.funnel.attacks_succeeded, report.totals.samples)),
        fmt_opt(report.funnel.attack_success_rate_pct),
    ]));
    funnel.push('\n');
    funnel.push_str(&csv_line(&[
        "passed_benign".to_string(),
        report.funnel.passed_benign.to_string(),
        fmt_opt(pct(report.funnel.passed_benign, report.totals.samples)),
        String::new(),
    ]));
    funnel.push('\n');
    funnel.push_str(&csv_line(&[
        "transport_rejections".to_string(),
        report.funnel.transport_rejections.to_string(),
        String::new(),
        String::new(),
    ]));
    funnel.push('\n');
    tables.push(("funnel".to_string(), funnel));

    let mut latency = String::new();
    latency.push_str("stage,mean_ms,sd_ms,count\n");
    for (name, dist) in [
        ("l2_simulated", &report.latency.l2_simulated),
        (
            "l3_cumulative_simulated",
            &report.latency.l3_cumulative_simulated,
        ),
    ] {
        if let Some(d) = dist {
            latency.push_str(&csv_line(&[
                name.to_string(),
                format!("{}", d.mean_ms),
                fmt_opt(d.sd_ms),
                d.count.to_string(),
            ]));
            latency.push('\n');
        }
    }
    latency.push_str(&csv_line(&[
        "aggregate".to_string(),
        fmt_opt(report.latency.aggregate_mean_ms),
        String::new(),
        report.totals.samples.to_string(),
    ]));
    latency.push('\n');
    tables.push(("latency".to_string(), latency));

    let mut cloud = String::new();
    cloud.push_str("metric,value\n");
    for (k, v) in [
        ("calls", report.cloud.calls.to_string()),
        (
            "calls_pct_of_all_samples",
            fmt_opt(report.cloud.calls_pct_of_all_samples),
        ),
        ("avoided", report.cloud.avoided.to_string()),
        (
            "avoided_pct_of_all_samples",
            fmt_opt(report.cloud.avoided_pct_of_all_samples),
        ),
        (
            "avoided_pct_of_attacks",
            fmt_opt(report.cloud.avoided_pct_of_attacks),
        ),
        (
            "bytes_never_transmitted",
            report.cloud.bytes_never_transmitted.to_string(),
        ),
    ] {
        cloud.push_str(&csv_line(&[k.to_string(), v]));
        cloud.push('\n');
    }
    tables.push(("cloud".to_string(), cloud));

    let mut sanitizer = String::new();
    sanitizer.push_str("metric,value\n");
    for (k, v) in [
        ("pages", report.sanitizer.pages.to_string()),
        (
            "raw_bytes_total",
            report.sanitizer.raw_bytes_total.to_string(),
        ),
        (
            "sanitized_bytes_total",
            report.sanitizer.sanitized_bytes_total.to_string(),
        ),
        (
            "mean_reduction_pct",
            fmt_opt(report.sanitizer.mean_reduction_pct),
        ),
    ] {
        sanitizer.push_str(&csv_line(&[k.to_string(), v]));
        sanitizer.push('\n');
    }
    tables.push(("sanitizer".to_string(), sanitizer));

    let mut sankey = String::new();
    sankey.push_str("from,to,count\n");
    for e in &report.sankey_edges {
        sankey.push_str(&csv_line(&[
            e.from.clone(),
            e.to.clone(),
            e.count.to_string(),
        ]));
        sankey.push('\n');
    }
    tables.push(("sankey".to_string(), sankey));

    if let Some(ablation) = &report.ablation {
        let mut t = String::new();
        t.push_str(
            "label,layers,samples,attacks,l1_interceptions,l2_rejections,l3_blocks,attacks_succeeded,asr_pct\n",
        );
        for r in &ablation.rows {
            t.push_str(&csv_line(&[
                r.label.clone(),
                layers_label(&r.layers),
                r.samples.to_string(),
                r.attacks.to_string(),
                r.l1_interceptions.to_string(),
                r.l2_rejections.to_string(),
                r.l3_blocks.to_string(),
                r.attacks_succeeded.to_string(),
                fmt_opt(r.asr_pct),
            ]));
            t.push('\n');
        }
        tables.push(("ablation".to_string(), t));
    }

    if let Some(adaptive) = &report.adaptive {
        let mut t = String::new();
        t.push_str(
            "scenario,samples,l1_interceptions,l1_pct,l2_rejections,l2_pct,l3_blocks,l3_pct,attacks_succeeded,success_pct\n",
        );
        for r in &adaptive.rows {
            t.push_str(&csv_line(&[
                format!("{:?}", r.scenario),
                r.samples.to_string(),
                r.l1_interceptions.to_string(),
                fmt_opt(r.l1_pct),
                r.l2_rejections.to_string(),
                fmt_opt(r.l2_pct),
                r.l3_blocks.to_string(),
                fmt_opt(r.l3_pct),
                r.attacks_succeeded.to_string(),
                fmt_opt(r.success_pct),
            ]));
            t.push('\n');
        }
        t.push_str(&csv_line(&[
            "aggregate".to_string(),
            adaptive.total_samples.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            adaptive.total_succeeded.to_string(),
            fmt_opt(adaptive.aggregate_success_pct),
        ]));
        t.push('\n');
        tables.push(("adaptive".to_string(), t));
    }

    tables
}

fn render_markdown(report: &EvalReport) -> String {
    let mut md = String::new();
    md.push_str("# Evaluation Report\n\n");
    md.push_str(&format!(
        "Schema v{} · layers: {} · latency seed {}\n\n",
        report.schema_version,
        layers_label(&report.layers),
        report.latency_seed
    ));
    md.push_str(&format!(
        "Samples: {} ({} attacks, {} benign)\n\n",
        report.totals.samples, report.totals.attacks, report.totals.benign
    ));

    md.push_str("## Interception funnel\n\n");
    md.push_str("| stage | count | % of all samples | % of attacks |\n");
    md.push_str("|---|---:|---:|---:|\n");
    for (name, share) in [
        ("Layer 1 (edge)", &report.funnel.l1_interceptions),
        ("Layer 2 (planner)", &report.funnel.l2_rejections),
        ("Layer 3 (guard)", &report.funnel.l3_blocks),
    ] {
        md.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            name,
            share.count,
            fmt_opt_fixed(share.pct_of_all_samples, 1),
            fmt_opt_fixed(share.pct_of_attacks, 1)
        ));
    }
    md.push_str(&format!(
        "| Attacks succeeded | {} | {} | {} |\n",
        report.funnel.attacks_succeeded,
        fmt_opt_fixed(
            pct(report.funnel.attacks_succeeded, report.totals.samples),
            1
        ),
        fmt_opt_fixed(report.funnel.attack_success_rate_pct, 3)
    ));
    md.push_str(&format!(
        "| Passed (benign outcome) | {} | {} | |\n\n",
        report.funnel.passed_benign,
        fmt_opt_fixed(pct(report.funnel.passed_benign, report.totals.samples), 1)
    ));
    md.push_str(&format!(
        "Attack success rate: **{}%** · transport-failure rejections: {}\n\n",
        fmt_opt_fixed(report.funnel.attack_success_rate_pct, 3),
        report.funnel.transport_rejections
    ));

    md.push_str("## Latency (simulated, milliseconds)\n\n");
    md.push_str("| stage | mean (ms) | SD (ms) | n |\n|---|---:|---:|---:|\n");
    for (name, dist) in [
        ("Planning round-trip", &report.latency.l2_simulated),
        (
            "Cumulative to vetted plan",
            &report.latency.l3_cumulative_simulated,
        ),
    ] {
        if let Some(d) = dist {
            md.push_str(&format!(
                "| {} | {:.1} | {} | {} |\n",
                name,
                d.mean_ms,
                fmt_opt_fixed(d.sd_ms, 1),
                d.count
            ));
        }
    }
    md.push_str(&format!(
        "| Aggregate per-sample total | {} | | {} |\n\n",
        fmt_opt_fixed(report.latency.aggregate_mean_ms, 1),
        report.totals.samples
    ));

    md.push_str("## Remote planning calls\n\n");
    md.push_str(&format!(
        "- Calls made: {} ({}% of all samples)\n",
        report.cloud.calls,
        fmt_opt_fixed(report.cloud.calls_pct_of_all_samples, 1)
    ));
    md.push_str(&format!(
        "- Calls avoided by the edge stage: {} ({}% of all samples, {}% of attacks)\n",
        report.cloud.avoided,
        fmt_opt_fixed(report.cloud.avoided_pct_of_all_samples, 1),
        fmt_opt_fixed(report.cloud.avoided_pct_of_attacks, 1)
    ));
    md.push_str(&format!(
        "- Bytes never transmitted: {}\n\n",
        report.cloud.bytes_never_transmitted
    ));

    md.push_str("## Sanitizer\n\n");
    md.push_str(&format!(
        "- Pages extracted: {}\n- Raw bytes: {} → sanitized bytes: {}\n- Mean per-page reduction: {}%\n\n",
        report.sanitizer.pages,
        report.sanitizer.raw_bytes_total,
        report.sanitizer.sanitized_bytes_total,
        fmt_opt_fixed(report.sanitizer.mean_reduction_pct, 1)
    ));

    md.push_str("## Flow edges\n\n");
    md.push_str("| from | to | samples |\n|---|---|---:|\n");
    for e in &report.sankey_edges {
        md.push_str(&format!("| {} | {} | {} |\n", e.from, e.to, e.count));
    }
    md.push('\n');

    if let Some(ablation) = &report.ablation {
        md.push_str("## Ablation\n\n");
        md.push_str("| configuration | layers | attacks | L1 | L2 | L3 | succeeded | ASR (%) |\n");
        md.push_str("|---|---|---:|---:|---:|---:|---:|---:|\n");
        for r in &ablation.rows {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
                r.label,
                layers_label(&r.layers),
                r.attacks,
                r.l1_interceptions,
                r.l2_rejections,
                r.l3_blocks,
                r.attacks_succeeded,
                fmt_opt_fixed(r.asr_pct, 3)
            ));
        }
        md.push('\n');
    }

    if let Some(adaptive) = &report.adaptive {
        md.push_str("## Adaptive scenarios\n\n");
        md.push_str("| scenario | n | L1 (%) | L2 (%) | L3 (%) | succeeded (%) |\n");
        md.push_str("|---|---:|---:|---:|---:|---:|\n");
        for r in &adaptive.rows {
            md.push_str(&format!(
                "| {:?} | {} | {} ({}) | {} ({}) | {} ({}) | {} ({}) |\n",
                r.scenario,
                r.samples,
                r.l1_interceptions,
                fmt_opt_fixed(r.l1_pct, 1),
                r.l2_rejections,
                fmt_opt_fixed(r.l2_pct, 1),
                r.l3_blocks,
                fmt_opt_fixed(r.l3_pct, 1),
                r.attacks_succeeded,
                fmt_opt_fixed(r.success_pct, 1)
            ));
        }
        md.push_str(&format!(
            "\nAggregate: {}/{} succeeded ({}%)\n\n",
            adaptive.total_succeeded,
            adaptive.total_samples,
            fmt_opt_fixed(adaptive.aggregate_success_pct, 2)
        ));
    }

    if !report.footnotes.is_empty() {
        md.push_str("## Notes\n\n");
        for note in &report.footnotes {
            md.push_str(&format!("- {note}\n"));
        }
    }
    md
}

/// Serialize the report to the requested format. JSON is a single file;
/// markdown is a single file; CSV writes one file per table next to the
/// requested path (`report.csv` → `report_funnel.csv`, …). All formats
/// write atomically: on error no partial files remain.
pub fn emit_report(report: &EvalReport, format: ReportFormat, path: &Path) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            let mut body = serde_json::to_string_pretty(report)?;
            body.push('\n');
            write_all_atomic(vec![(path.to_path_buf(), body)])
        }
        ReportFormat::Markdown => {
            write_all_atomic(vec![(path.to_path_buf(), render_markdown(report))])
        }
        ReportFormat::Csv => {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("report")
                .to_string();
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let files = csv_tables(report)
                .into_iter()
                .map(|(table, contents)| (dir.join(format!("{stem}_{table}.csv")), contents))
                .collect();
            write_all_atomic(files)
        }
    }
}

/// Write the measured-timing sidecar (JSON, atomic).
pub fn emit_timing_sidecar(summary: &TimingSummary, path: &Path) -> Result<Vec<PathBuf>> {
    let mut body = serde_json::to_string_pretty(summary)?;
    body.push('\n');
    write_all_atomic(vec![(path.to_path_buf(), body)])
}
