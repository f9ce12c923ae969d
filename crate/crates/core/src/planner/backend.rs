//! Planning backends. The reference backend is a deterministic stand-in
//! for the remote reasoning model: it flags payloads via the pattern
//! detector and emits either the benign template plan for the goal or — for
//! benchmark samples — the plan a manipulated agent would produce, when the
//! embedded directive survived to its input.

use super::{
    classify_intent, detect_threats, BodyKind, IntentScope, Plan, PlanStep, PlannerOutcome,
    ThreatPatterns, UserGoal, Verb, WriteVerbLexicon,
};
use crate::sentinel::normalize_for_matching;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Benchmark-sample context: the directive embedded in the page, the plan a
/// compromised agent would emit for it, and whether the manipulation also
/// escalates the declared scope.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlanHint {
    pub directive: String,
    pub induced_plan: Plan,
    pub escalation: bool,
}

/// What a backend concludes about one payload.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendAnalysis {
    pub outcome: PlannerOutcome,
    /// True when the conclusion is a fail-closed transport decision rather
    /// than a semantic one.
    pub transport_error: bool,
}

/// A planning backend. Implementations must support concurrent calls for
/// distinct samples.
pub trait PlannerBackend: Send + Sync {
    fn analyze(
        &self,
        goal: &UserGoal,
        payload: &str,
        hint: Option<&PlanHint>,
    ) -> Result<BackendAnalysis>;
}

/// Template for the honest plan of one known instruction.
#[derive(Debug, Clone)]
pub struct BenignTemplate {
    pub verb: Verb,
    pub target_url: String,
    pub params: BTreeMap<String, String>,
    pub body_kind: BodyKind,
}

/// Deterministic local backend: pattern detection plus template-driven plan
/// generation.
#[derive(Debug, Clone)]
pub struct ReferenceBackend {
    patterns: ThreatPatterns,
    lexicon: WriteVerbLexicon,
    benign_templates: BTreeMap<String, BenignTemplate>,
}

impl ReferenceBackend {
    pub fn new(
        patterns: ThreatPatterns,
        lexicon: WriteVerbLexicon,
        benign_templates: BTreeMap<String, BenignTemplate>,
    ) -> Self {
        ReferenceBackend {
            patterns,
            lexicon,
            benign_templates,
        }
    }

    /// Default patterns, default lexicon, and templates derived from the
    /// built-in task catalog.
    pub fn with_defaults() -> Self {
        let benign_templates = crate::tasks::benign_task_table()
            .iter()
            .map(|task| {
                (
                    task.instruction.to_string(),
                    BenignTemplate {
                        verb: task.verb,
                        target_url: task.target_url(),
                        params: task.params_map(),
                        body_kind: task.body_kind,
                    },
                )
            })
            .collect();
        ReferenceBackend::new(
            ThreatPatterns::default(),
            WriteVerbLexicon::default(),
            benign_templates,
        )
    }

    pub fn patterns(&self) -> &ThreatPatterns {
        &self.patterns
    }

    /// Draft the plan for a payload that passed threat detection. When the
    /// sample's embedded directive survived into the payload, the emitted
    /// plan is the one the manipulated agent would produce (escalating the
    /// declared scope if the manipulation carries that channel); otherwise
    /// it is the benign template plan for the goal.
    pub fn generate_plan(
        &self,
        goal: &UserGoal,
        payload: &str,
        hint: Option<&PlanHint>,
    ) -> Result<Plan> {
        if let Some(hint) = hint {
            let directive = normalize_for_matching(&hint.directive);
            if !directive.is_empty() && normalize_for_matching(payload).contains(&directive) {
                let mut plan = hint.induced_plan.clone();
                if hint.escalation {
                    plan.declared_scope = IntentScope::ReadWrite;
                }
                return Ok(plan);
            }
        }
        let template = self
            .benign_templates
            .get(&goal.instruction)
            .ok_or_else(|| Error::MissingBenignTemplate(goal.instruction.clone()))?;
        Ok(Plan {
            steps: vec![PlanStep {
                verb: template.verb,
                target_url: template.target_url.clone(),
                params: template.params.clone(),
                body_kind: template.body_kind,
            }],
            declared_scope: classify_intent(goal, &self.lexicon),
        })
    }
}

impl PlannerBackend for ReferenceBackend {
    fn analyze(
        &self,
        goal: &UserGoal,
        payload: &str,
        hint: Option<&PlanHint>,
    ) -> Result<BackendAnalysis> {
        let assessment = detect_threats(payload, &self.patterns);
        if assessment.flagged {
            return Ok(BackendAnalysis {
                outcome: PlannerOutcome::Rejected { assessment },
                transport_error: false,
            });
        }
        let plan = self.generate_plan(goal, payload, hint)?;
        Ok(BackendAnalysis {
            outcome: PlannerOutcome::Planned { plan, assessment },
            transport_error: false,
        })
    }
}
