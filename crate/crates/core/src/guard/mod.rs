//! Layer 3 — the origin guard. A deterministic, synchronous validator that
//! vets every step of a proposed plan against the origin allowlist, the
//! verb-policy matrix, and parameterized-exfiltration rules before anything
//! may execute. No probabilistic state: its decision is a pure function of
//! (plan, policy, scope), and everything unknown or unparseable blocks.

use crate::planner::{IntentScope, Plan, PlanStep, Verb};
use crate::{Error, Result};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

/// Origins one task domain may touch. `allow` entries match exactly on
/// (scheme, host, effective port); `wildcard` entries additionally match
/// any subdomain of the entry's host. Wildcarding is opt-in per entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainPolicy {
    #[serde(default)]
    pub allow: Vec<String>,
    #[serde(default)]
    pub wildcard: Vec<String>,
}

/// Parameterized-exfiltration rule: what a GET/HEAD request may carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExfilRule {
    pub max_benign_param_count: usize,
    pub benign_param_names: BTreeSet<String>,
    /// Regex patterns (matched against the lowercased value and the
    /// lowercased `name=value` pair) that mark a parameter as sensitive.
    pub sensitive_param_patterns: Vec<String>,
    pub block_params_under_readonly: bool,
    #[serde(skip)]
    compiled: OnceLock<Vec<Regex>>,
}

impl Default for ExfilRule {
    fn default() -> Self {
        ExfilRule {
            max_benign_param_count: 3,
            benign_param_names: ["q", "page", "lang"]
                .into_iter()
                .map(str::to_string)
                .collect(),
            sensitive_param_patterns: vec![
                // base64-like runs (input is lowercased before matching)
                "[a-z0-9+/=]{24,}".to_string(),
                "secret".to_string(),
                "token".to_string(),
                "key=".to_string(),
            ],
            block_params_under_readonly: true,
            compiled: OnceLock::new(),
        }
    }
}

impl PartialEq for ExfilRule {
    fn eq(&self, other: &Self) -> bool {
        self.max_benign_param_count == other.max_benign_param_count
            && self.benign_param_names == other.benign_param_names
            && self.sensitive_param_patterns == other.sensitive_param_patterns
            && self.block_params_under_readonly == other.block_params_under_readonly
    }
}

impl ExfilRule {
    fn regexes(&self) -> &[Regex] {
        self.compiled.get_or_init(|| {
            self.sensitive_param_patterns
                .iter()
                .filter_map(|p| match Regex::new(p) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        // Validation rejects bad patterns at load; this only
                        // fires for policies built without validation.
                        log::warn!("ignoring invalid sensitive pattern {p:?}: {e}");
                        None
                    }
                })
                .collect()
        })
    }
}

/// The immutable execution policy: per-task-domain origin allowlists, the
/// verb matrix, and the exfiltration rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySet {
    /// task_domain → origins that domain's plans may target.
    pub task_domains: BTreeMap<String, DomainPolicy>,
    /// scope → verbs permitted in that scope. Total over both scopes.
    pub verb_matrix: BTreeMap<IntentScope, BTreeSet<Verb>>,
    pub exfil: ExfilRule,
}

impl Default for PolicySet {
    fn default() -> Self {
        let mut task_domains = BTreeMap::new();
        for domain in crate::tasks::task_domains() {
            task_domains.insert(
                domain.to_string(),
                DomainPolicy {
                    allow: vec![
                        domain.to_string(),
                        "https://api.example".to_string(),
                        "https://google.com".to_string(),
                    ],
                    wildcard: vec![],
                },
            );
        }
        let mut verb_matrix = BTreeMap::new();
        verb_matrix.insert(
            IntentScope::ReadOnly,
            [Verb::Get, Verb::Head].into_iter().collect(),
        );
        verb_matrix.insert(IntentScope::ReadWrite, Verb::ALL.into_iter().collect());
        PolicySet {
            task_domains,
            verb_matrix,
            exfil: ExfilRule::default(),
        }
    }
}

impl PolicySet {
    /// Build a validated policy.
    pub fn new(
        task_domains: BTreeMap<String, DomainPolicy>,
        verb_matrix: BTreeMap<IntentScope, BTreeSet<Verb>>,
        exfil: ExfilRule,
    ) -> Result<Self> {
        let policy = PolicySet {
            task_domains,
            verb_matrix,
            exfil,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let policy: PolicySet = serde_json::from_str(&raw)
            .map_err(|e| Error::Policy(format!("{}: {e}", path.display())))?;
        policy.validate()?;
        Ok(policy)
    }

    /// Semantic validation with path-precise messages. Syntax errors are
    /// reported by the JSON layer with line/column positions.
    pub fn validate(&self) -> Result<()> {
        for (domain, policy) in &self.task_domains {
            parse_origin(domain)
                .map_err(|e| Error::Policy(format!("task_domains[{domain:?}]: {e}")))?;
            for (field, entries) in [("allow", &policy.allow), ("wildcard", &policy.wildcard)] {
                for (i, entry) in entries.iter().enumerate() {
                    let origin = parse_origin(entry).map_err(|e| {
                        Error::Policy(format!("task_domains[{domain:?}].{field}[{i}]: {e}"))
                    })?;
                    if origin.scheme != "https" {
                        return Err(Error::Policy(format!(
                            "task_domains[{domain:?}].{field}[{i}]: allowlisted origin {entry:?} must use https"
                        )));
                    }
                }
            }
        }
        for scope in [IntentScope::ReadOnly, IntentScope::ReadWrite] {
            if !self.verb_matrix.contains_key(&scope) {
                return Err(Error::Policy(format!(
                    "verb_matrix: missing row for scope {scope:?} (the matrix must be total)"
                )));
            }
        }
        for (i, pattern) in self.exfil.sensitive_param_patterns.iter().enumerate() {
            Regex::new(pattern)
                .map_err(|e| Error::Policy(format!("exfil.sensitive_param_patterns[{i}]: {e}")))?;
        }
        Ok(())
    }
}

/// (scheme, host, effective port) of an origin or URL.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ParsedOrigin {
    scheme: String,
    host: String,
    port: Option<u16>,
}

fn parse_origin(s: &str) -> std::result::Result<ParsedOrigin, String> {
    let url = url::Url::parse(s).map_err(|e| e.to_string())?;
    let host = url
        .host_str()
        .ok_or_else(|| format!("{s:?} has no host"))?
        .to_ascii_lowercase();
    if !matches!(url.scheme(), "http" | "https") {
        return Err(format!("{s:?} is not an http(s) origin"));
    }
    Ok(ParsedOrigin {
        scheme: url.scheme().to_string(),
        host,
        port: url.port_or_known_default(),
    })
}

/// Does `url` target an origin allowed by this domain policy? Exact
/// (scheme, host, port) match against `allow`; `wildcard` entries also
/// accept subdomains. Unparseable input never matches.
pub fn check_origin(url: &str, allowed: &DomainPolicy) -> bool {
    let target = match parse_origin(url) {
        Ok(t) => t,
        Err(_) => return false,
    };
    let exact = allowed.allow.iter().filter_map(|e| parse_origin(e).ok());
    for entry in exact {
        if entry == target {
            return true;
        }
    }
    let wildcards = allowed.wildcard.iter().filter_map(|e| parse_origin(e).ok());
    for entry in wildcards {
        let host_matches = target.host == entry.host
            || target
                .host
                .strip_suffix(&entry.host)
                .is_some_and(|prefix| prefix.ends_with('.'));
        if host_matches && target.scheme == entry.scheme && target.port == entry.port {
            return true;
        }
    }
    false
}

/// Pure verb-matrix lookup. A missing row denies (fail-closed), though a
/// validated policy always has both rows.
pub fn check_verb(
    verb: Verb,
    scope: IntentScope,
    matrix: &BTreeMap<IntentScope, BTreeSet<Verb>>,
) -> bool {
    matrix
        .get(&scope)
        .is_some_and(|verbs| verbs.contains(&verb))
}

/// Is this GET/HEAD step a suspected exfiltration channel? Parameters from
/// the URL query string and the step's params map are merged. Under
/// read-only scope (with blocking enabled) any parameter is suspicious
/// unless the whole set is recognizably benign; under read-write scope only
/// sensitive-pattern hits are.
pub fn check_exfil(step: &PlanStep, scope: IntentScope, rule: &ExfilRule) -> bool {
    let mut params: Vec<(String, String)> = match url::Url::parse(&step.target_url) {
        Ok(url) => url
            .query_pairs()
            .map(|(k, v)| (k.into_owned(), v.into_owned()))
            .collect(),
        // Pre-condition violated; fail closed.
        Err(_) => return true,
    };
    params.extend(step.params.iter().map(|(k, v)| (k.clone(), v.clone())));
    if params.is_empty() {
        return false;
    }

    let sensitive = params.iter().any(|(name, value)| {
        let value_lc = value.to_lowercase();
        let pair_lc = format!("{}={}", name.to_lowercase(), value_lc);
        rule.regexes()
            .iter()
            .any(|re| re.is_match(&value_lc) || re.is_match(&pair_lc))
    });
    if sensitive {
        return true;
    }

    match scope {
        IntentScope::ReadOnly if rule.block_params_under_readonly => {
            params.len() > rule.max_benign_param_count
                || params
                    .iter()
                    .any(|(name, _)| !rule.benign_param_names.contains(name))
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuardOutcome {
    Allow,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockSource {
    OriginDenied,
    VerbDenied,
    ExfilSuspected,
    MalformedPlan,
}

/// The guard's synchronous decision for one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardDecision {
    pub outcome: GuardOutcome,
    /// Present exactly when the outcome is `Block`.
    pub reason: Option<BlockSource>,
    pub offending_step: Option<usize>,
    /// Measured wall clock; excluded from canonical serialized output so
    /// identical decisions serialize identically.
    #[serde(skip)]
    pub decision_time_ns: u128,
}

/// Evaluate a full plan against the policy for the given task domain and
/// declared scope. Steps are checked in order — origin, then verb, then
/// exfiltration — and the first violation decides. The evaluation is
/// synchronous and side-effect-free: no step may be dispatched before the
/// decision exists. An empty plan (text-only response) is always allowed;
/// an unknown task domain has an empty allowlist, so any step denies.
pub fn guard_evaluate(
    plan: &Plan,
    policy: &PolicySet,
    scope: IntentScope,
    task_domain: &str,
) -> GuardDecision {
    let started = std::time::Instant::now();
    let empty = DomainPolicy::default();
    let allowed = policy.task_domains.get(task_domain).unwrap_or(&empty);

    let block = |reason: BlockSource, step: usize| GuardDecision {
        outcome: GuardOutcome::Block,
        reason: Some(reason),
        offending_step: Some(step),
        decision_time_ns: started.elapsed().as_nanos(),
    };

    for (index, step) in plan.steps.iter().enumerate() {
        let parsed = match url::Url::parse(&step.target_url) {
            Ok(u) => u,
            Err(_) => return block(BlockSource::MalformedPlan, index),
        };
        if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
            return block(BlockSource::MalformedPlan, index);
        }
        if !check_origin(&step.target_url, allowed) {
            return block(BlockSource::OriginDenied, index);
        }
        if !check_verb(step.verb, scope, &policy.verb_matrix) {
            return block(BlockSource::VerbDenied, index);
        }
        if matches!(step.verb, Verb::Get | Verb::Head) && check_exfil(step, scope, &policy.exfil) {
            return block(BlockSource::ExfilSuspected, index);
        }
    }

    GuardDecision {
        outcome: GuardOutcome::Allow,
        reason: None,
        offending_step: None,
        decision_time_ns: started.elapsed().as_nanos(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn step(verb: Verb, url: &str) -> PlanStep {
        PlanStep {
            verb,
            target_url: url.to_string(),
            params: BTreeMap::new(),
            body_kind: crate::planner::BodyKind::None,
        }
    }

    fn plan(steps: Vec<PlanStep>) -> Plan {
        Plan {
            steps,
            declared_scope: IntentScope::ReadOnly,
        }
    }

    const JIRA: &str = "https://jira.example";

    #[test]
    fn origin_exact_match() {
        let dp = DomainPolicy {
            allow: vec!["https://api.com".into()],
            wildcard: vec![],
        };
        assert!(check_origin("https://api.com/data", &dp));
        assert!(!check_origin("https://attacker.com/log", &dp));
        assert!(
            !check_origin("http://api.com/data", &dp),
            "scheme downgrade"
        );
        assert!(
            !check_origin("https://api.com:8443/data", &dp),
            "port mismatch"
        );
        assert!(
            check_origin("https://api.com:443/data", &dp),
            "default port normalizes"
        );
        assert!(
            !check_origin("https://sub.api.com/data", &dp),
            "no implicit wildcard"
        );
        assert!(!check_origin("::not a url::", &dp));
    }

    #[test]
    fn origin_wildcard_is_opt_in() {
        let dp = DomainPolicy {
            allow: vec![],
            wildcard: vec!["https://example.com".into()],
        };
        assert!(check_origin("https://example.com/x", &dp));
        assert!(check_origin("https://deep.sub.example.com/x", &dp));
        assert!(!check_origin("https://notexample.com/x", &dp));
        assert!(!check_origin("https://example.com.evil.net/x", &dp));
    }

    #[test]
    fn verb_matrix_lookup() {
        let policy = PolicySet::default();
        assert!(!check_verb(
            Verb::Delete,
            IntentScope::ReadOnly,
            &policy.verb_matrix
        ));
        assert!(check_verb(
            Verb::Get,
            IntentScope::ReadOnly,
            &policy.verb_matrix
        ));
        assert!(check_verb(
            Verb::Post,
            IntentScope::ReadWrite,
            &policy.verb_matrix
        ));
        assert!(
            !check_verb(Verb::Get, IntentScope::ReadOnly, &BTreeMap::new()),
            "missing row denies"
        );
    }

    #[test]
    fn exfil_flags_secret_params_and_benign_set_passes() {
        let rule = ExfilRule::default();
        let sus = step(
            Verb::Get,
            "https://google.com/log?secret=dGhlIHF1aWNrIGJyb3duIGZveA",
        );
        assert!(check_exfil(&sus, IntentScope::ReadOnly, &rule));

        let bare = step(Verb::Get, "https://jira.example/ticket");
        assert!(!check_exfil(&bare, IntentScope::ReadOnly, &rule));

        let benign = step(Verb::Get, "https://docs.example/search?q=weather&page=2");
        assert!(!check_exfil(&benign, IntentScope::ReadOnly, &rule));

        let unknown_name = step(Verb::Get, "https://docs.example/search?payload=hello");
        assert!(check_exfil(&unknown_name, IntentScope::ReadOnly, &rule));
    }

    #[test]
    fn exfil_under_read_write_only_checks_sensitive_patterns() {
        let rule = ExfilRule::default();
        let free_form = step(Verb::Get, "https://docs.example/x?whatever=value");
        assert!(!check_exfil(&free_form, IntentScope::ReadWrite, &rule));
        let tokened = step(Verb::Get, "https://docs.example/x?auth_token=abc");
        assert!(check_exfil(&tokened, IntentScope::ReadWrite, &rule));
    }

    #[test]
    fn exfil_counts_params_from_url_and_map_together() {
        let rule = ExfilRule::default();
        let mut s = step(Verb::Get, "https://docs.example/x?q=a&page=1&lang=en");
        s.params.insert("q".into(), "extra".into());
        // 4 total params exceeds the benign count limit of 3.
        assert!(check_exfil(&s, IntentScope::ReadOnly, &rule));
    }

    #[test]
    fn evaluate_blocks_post_under_read_only() {
        let decision = guard_evaluate(
            &plan(vec![step(Verb::Post, "https://jira.example/delete")]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        assert_eq!(decision.outcome, GuardOutcome::Block);
        assert_eq!(decision.reason, Some(BlockSource::VerbDenied));
        assert_eq!(decision.offending_step, Some(0));
    }

    #[test]
    fn evaluate_allows_benign_read() {
        let decision = guard_evaluate(
            &plan(vec![step(Verb::Get, "https://jira.example/ticket")]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        assert_eq!(decision.outcome, GuardOutcome::Allow);
        assert_eq!(decision.reason, None);
        assert_eq!(decision.offending_step, None);
    }

    #[test]
    fn evaluate_blocks_allowlisted_exfil() {
        let decision = guard_evaluate(
            &plan(vec![step(
                Verb::Get,
                "https://google.com/log?secret=aGlkZGVuIGRhdGEgZXhmaWw9PQ",
            )]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        assert_eq!(decision.outcome, GuardOutcome::Block);
        assert_eq!(decision.reason, Some(BlockSource::ExfilSuspected));
    }

    #[test]
    fn evaluate_blocks_unlisted_origin() {
        let decision = guard_evaluate(
            &plan(vec![step(Verb::Get, "https://attacker.example/collect")]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        assert_eq!(decision.reason, Some(BlockSource::OriginDenied));
    }

    #[test]
    fn evaluate_malformed_url_is_malformed_plan() {
        for bad in ["not a url", "ftp://files.example/x", "file:///etc/passwd"] {
            let decision = guard_evaluate(
                &plan(vec![step(Verb::Get, bad)]),
                &PolicySet::default(),
                IntentScope::ReadOnly,
                JIRA,
            );
            assert_eq!(decision.outcome, GuardOutcome::Block, "{bad}");
            assert_eq!(decision.reason, Some(BlockSource::MalformedPlan), "{bad}");
        }
    }

    #[test]
    fn empty_plan_is_text_only_and_allowed() {
        let decision = guard_evaluate(
            &plan(vec![]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        assert_eq!(decision.outcome, GuardOutcome::Allow);
    }

    #[test]
    fn unknown_task_domain_denies_everything() {
        let decision = guard_evaluate(
            &plan(vec![step(Verb::Get, "https://jira.example/ticket")]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            "https://unknown.example",
        );
        assert_eq!(decision.reason, Some(BlockSource::OriginDenied));
    }

    #[test]
    fn first_violation_decides_step_index() {
        let decision = guard_evaluate(
            &plan(vec![
                step(Verb::Get, "https://jira.example/ticket"),
                step(Verb::Delete, "https://jira.example/purge"),
                step(Verb::Get, "https://attacker.example/x"),
            ]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        assert_eq!(decision.reason, Some(BlockSource::VerbDenied));
        assert_eq!(decision.offending_step, Some(1));
    }

    #[test]
    fn policy_validation_rejects_http_allowlist_entries() {
        let mut domains = BTreeMap::new();
        domains.insert(
            "https://a.example".to_string(),
            DomainPolicy {
                allow: vec!["http://plain.example".into()],
                wildcard: vec![],
            },
        );
        let err = PolicySet::new(
            domains,
            PolicySet::default().verb_matrix,
            ExfilRule::default(),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("allow[0]"), "path-precise: {msg}");
        assert!(msg.contains("https"), "{msg}");
    }

    #[test]
    fn policy_validation_requires_total_matrix() {
        let mut matrix = BTreeMap::new();
        matrix.insert(
            IntentScope::ReadOnly,
            [Verb::Get].into_iter().collect::<BTreeSet<_>>(),
        );
        let err = PolicySet::new(
            PolicySet::default().task_domains,
            matrix,
            ExfilRule::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("total"));
    }

    #[test]
    fn policy_file_round_trip_with_documented_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("allowlist.json");
        std::fs::write(
            &path,
            r#"{
              "task_domains": {
                "https://jira.example": {
                  "allow": ["https://jira.example", "https://api.com"],
                  "wildcard": []
                }
              },
              "verb_matrix": {
                "read_only": ["GET", "HEAD"],
                "read_write": ["GET", "HEAD", "POST", "PUT", "DELETE", "PATCH"]
              },
              "exfil": {
                "max_benign_param_count": 3,
                "benign_param_names": ["q", "page", "lang"],
                "sensitive_param_patterns": ["secret"],
                "block_params_under_readonly": true
              }
            }"#,
        )
        .unwrap();
        let policy = PolicySet::from_file(&path).unwrap();
        assert_eq!(policy.task_domains.len(), 1);
        assert!(check_verb(
            Verb::Head,
            IntentScope::ReadOnly,
            &policy.verb_matrix
        ));
    }

    #[test]
    fn policy_file_syntax_error_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{\n  \"task_domains\": {\n    oops\n}").unwrap();
        let err = PolicySet::from_file(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn decisions_serialize_without_timing() {
        let decision = guard_evaluate(
            &plan(vec![]),
            &PolicySet::default(),
            IntentScope::ReadOnly,
            JIRA,
        );
        let json = serde_json::to_string(&decision).unwrap();
        assert!(!json.contains("decision_time_ns"));
    }
}
