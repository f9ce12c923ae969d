//! Layer 2 — the deep planner stage. Classifies the user's intent into a
//! safety scope, scans the sanitized payload for semantic manipulation, and
//! drafts the action plan. Backends are pluggable: a deterministic local
//! reference engine and a remote-service client speaking a small JSON
//! protocol.

mod backend;
mod remote;

pub use backend::{BackendAnalysis, PlanHint, PlannerBackend, ReferenceBackend};
pub use remote::{LoopbackPlannerServer, RemoteBackend};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// The trusted control-plane input: what the user asked for and the origin
/// the task is anchored to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    pub instruction: String,
    /// Origin string, scheme + host, e.g. `https://jira.example`.
    pub task_domain: String,
}

impl UserGoal {
    pub fn validate(&self) -> Result<()> {
        if self.instruction.trim().is_empty() {
            return Err(Error::Config("goal instruction must be nonempty".into()));
        }
        let url = url::Url::parse(&self.task_domain)
            .map_err(|e| Error::Config(format!("task_domain {:?}: {e}", self.task_domain)))?;
        if url.host_str().is_none() || !matches!(url.scheme(), "http" | "https") {
            return Err(Error::Config(format!(
                "task_domain {:?} is not an http(s) origin",
                self.task_domain
            )));
        }
        Ok(())
    }
}

/// Safety scope of the user's intent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentScope {
    ReadOnly,
    ReadWrite,
}

/// Semantic manipulation categories the detector recognizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThreatCategory {
    RolePlay,
    UrgentOverride,
    InstructionOverride,
    DelimiterForgery,
    FabricatedUrgency,
}

/// One pattern hit, located in the original (pre-normalization) payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedSpan {
    pub category: ThreatCategory,
    /// Byte range in the payload as received.
    pub start: usize,
    pub end: usize,
}

/// What the detector found in one payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatAssessment {
    pub categories: BTreeSet<ThreatCategory>,
    pub flagged: bool,
    pub matched_spans: Vec<MatchedSpan>,
}

impl ThreatAssessment {
    pub fn clean() -> Self {
        ThreatAssessment {
            categories: BTreeSet::new(),
            flagged: false,
            matched_spans: Vec::new(),
        }
    }
}

/// HTTP verbs a plan step may use; anything else is rejected at the schema
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verb {
    #[serde(rename = "GET")]
    Get,
    #[serde(rename = "HEAD")]
    Head,
    #[serde(rename = "POST")]
    Post,
    #[serde(rename = "PUT")]
    Put,
    #[serde(rename = "DELETE")]
    Delete,
    #[serde(rename = "PATCH")]
    Patch,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Get,
        Verb::Head,
        Verb::Post,
        Verb::Put,
        Verb::Delete,
        Verb::Patch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Verb::Get => "GET",
            Verb::Head => "HEAD",
            Verb::Post => "POST",
            Verb::Put => "PUT",
            Verb::Delete => "DELETE",
            Verb::Patch => "PATCH",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Verb::ALL
            .iter()
            .find(|v| v.as_str() == s)
            .copied()
            .ok_or_else(|| Error::MalformedResponse(format!("unknown verb {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    None,
    Form,
    Json,
}

/// One executable step of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub verb: Verb,
    pub target_url: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default = "default_body_kind")]
    pub body_kind: BodyKind,
}

fn default_body_kind() -> BodyKind {
    BodyKind::None
}

/// The action plan the planner proposes. An empty step list means "respond
/// with text only".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub declared_scope: IntentScope,
}

/// Outcome of the planning stage for one payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PlannerOutcome {
    Rejected {
        assessment: ThreatAssessment,
    },
    Planned {
        plan: Plan,
        assessment: ThreatAssessment,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerVerdict {
    #[serde(flatten)]
    pub outcome: PlannerOutcome,
    pub simulated_latency_ms: f64,
    /// Set when a remote backend failed to answer; the rejection is then a
    /// fail-closed transport decision, not a semantic one.
    pub transport_error: bool,
}

impl PlannerVerdict {
    /// A rejection must be justified: either the detector flagged the
    /// payload or the transport failed closed.
    pub fn check_invariants(&self) {
        if let PlannerOutcome::Rejected { assessment } = &self.outcome {
            debug_assert!(
                assessment.flagged || self.transport_error,
                "rejection without a flag or transport error"
            );
        }
        if let PlannerOutcome::Planned { assessment, .. } = &self.outcome {
            debug_assert!(!assessment.flagged, "planned despite a flagged payload");
        }
    }
}

/// The verb lexicon that promotes an instruction to read-write scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WriteVerbLexicon {
    pub words: BTreeSet<String>,
}

impl Default for WriteVerbLexicon {
    fn default() -> Self {
        WriteVerbLexicon {
            words: [
                "send", "post", "delete", "update", "create", "submit", "reply", "purchase",
            ]
            .into_iter()
            .map(str::to_string)
            .collect(),
        }
    }
}

impl WriteVerbLexicon {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let words: Vec<String> = serde_json::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(WriteVerbLexicon {
            words: words.into_iter().map(|w| w.to_lowercase()).collect(),
        })
    }
}

/// Classify the user's instruction into a safety scope: read-write exactly
/// when a write-lexicon verb appears among its words, otherwise the safer
/// read-only default.
pub fn classify_intent(goal: &UserGoal, lexicon: &WriteVerbLexicon) -> IntentScope {
    let has_write_verb = goal
        .instruction
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .any(|w| lexicon.words.contains(&w.to_lowercase()));
    if has_write_verb {
        IntentScope::ReadWrite
    } else {
        IntentScope::ReadOnly
    }
}

/// Pattern lists per category, matched over normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThreatPatterns {
    pub by_category: BTreeMap<ThreatCategory, Vec<String>>,
}

impl Default for ThreatPatterns {
    fn default() -> Self {
        let mut by_category = BTreeMap::new();
        by_category.insert(
            ThreatCategory::InstructionOverride,
            vec![
                "ignore previous instructions".to_string(),
                "disregard the above".to_string(),
            ],
        );
        by_category.insert(
            ThreatCategory::RolePlay,
            vec!["developer mode".to_string(), "you are now".to_string()],
        );
        by_category.insert(
            ThreatCategory::DelimiterForgery,
            vec!["end system instructions".to_string()],
        );
        by_category.insert(
            ThreatCategory::UrgentOverride,
            vec!["urgent: do not verify".to_string()],
        );
        by_category.insert(
            ThreatCategory::FabricatedUrgency,
            vec!["immediately or".to_string()],
        );
        ThreatPatterns { by_category }
    }
}

impl ThreatPatterns {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let patterns: ThreatPatterns = serde_json::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(patterns)
    }

    /// Every pattern, flattened; this doubles as the default phrase list
    /// for the edge's local classifier.
    pub fn flatten(&self) -> Vec<String> {
        self.by_category.values().flatten().cloned().collect()
    }
}

/// The default phrase list shared with the edge classifier.
pub fn default_phrase_list() -> Vec<String> {
    ThreatPatterns::default().flatten()
}

/// Normalize for matching and keep, for each byte of the normalized text,
/// the byte range of the original character it came from.
fn normalize_with_offsets(payload: &str) -> (String, Vec<(usize, usize)>) {
    let mut normalized = String::with_capacity(payload.len());
    let mut offsets = Vec::with_capacity(payload.len());
    for (idx, ch) in payload.char_indices() {
        if ch.is_whitespace() {
            continue;
        }
        let range = (idx, idx + ch.len_utf8());
        for lower in ch.to_lowercase() {
            let start = normalized.len();
            normalized.push(lower);
            for _ in start..normalized.len() {
                offsets.push(range);
            }
        }
    }
    (normalized, offsets)
}

/// Scan a sanitized payload for manipulation patterns. Matching runs over
/// the lowercased payload with every whitespace character removed, which is
/// what defeats fragmentation: text split across many nodes re-joins into
/// the phrase before matching. Reported spans are byte ranges in the
/// original payload.
pub fn detect_threats(payload: &str, patterns: &ThreatPatterns) -> ThreatAssessment {
    let (haystack, offsets) = normalize_with_offsets(payload);
    let mut categories = BTreeSet::new();
    let mut matched_spans = Vec::new();

    for (category, pattern_list) in &patterns.by_category {
        for pattern in pattern_list {
            let needle: String = pattern
                .chars()
                .filter(|c| !c.is_whitespace())
                .flat_map(char::to_lowercase)
                .collect();
            if needle.is_empty() {
                continue;
            }
            let mut from = 0;
            while let Some(rel) = haystack[from..].find(needle.as_str()) {
                let at = from + rel;
                let last = at + needle.len() - 1;
                categories.insert(*category);
                matched_spans.push(MatchedSpan {
                    category: *category,
                    start: offsets[at].0,
                    end: offsets[last].1,
                });
                from = at + needle.len();
            }
        }
    }

    // Deterministic span order regardless of category iteration details.
    matched_spans.sort_by_key(|s| (s.start, s.end, s.category));
    ThreatAssessment {
        flagged: !categories.is_empty(),
        categories,
        matched_spans,
    }
}

/// Run the planning stage on a Layer-1-approved payload: the backend
/// analyzes and (if clean) drafts the plan; the given simulated latency is
/// attached. Callers must not invoke this for blocked documents.
pub fn plan_stage(
    goal: &UserGoal,
    payload: &str,
    hint: Option<&PlanHint>,
    backend: &dyn PlannerBackend,
    simulated_latency_ms: f64,
) -> Result<PlannerVerdict> {
    let analysis = backend.analyze(goal, payload, hint)?;
    let verdict = PlannerVerdict {
        outcome: analysis.outcome,
        simulated_latency_ms,
        transport_error: analysis.transport_error,
    };
    verdict.check_invariants();
    Ok(verdict)
}
