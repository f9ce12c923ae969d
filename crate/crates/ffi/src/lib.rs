//! C ABI for the palisade defense engine.
//!
//! Shape of the interface:
//! - An opaque, thread-safe engine handle created from JSON configuration
//!   (or built-in defaults) and released with [`palisade_engine_free`].
//! - Stage calls take UTF-8 C strings and hand structured results back as
//!   heap-allocated JSON strings through out-parameters; every returned
//!   string must be released with [`palisade_string_free`].
//! - Every call returns a [`PalisadeStatus`]; out-parameters are written
//!   only on `PALISADE_STATUS_OK`.
//! - Panics never cross the boundary: they are caught and reported as
//!   `PALISADE_STATUS_INTERNAL`.

use palisade::dom::parse_document;
use palisade::guard::{guard_evaluate, GuardDecision, GuardOutcome, PolicySet};
use palisade::planner::{
    plan_stage, Plan, PlannerOutcome, PlannerVerdict, ReferenceBackend, UserGoal,
};
use palisade::sentinel::{
    sentinel_scan, PhraseListClassifier, SentinelConfig, SentinelOutcome, SentinelVerdict,
};
use serde::Serialize;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

/// Result of any interface call. Out-parameters are valid only when the
/// call returned `PALISADE_STATUS_OK`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PalisadeStatus {
    /// The call succeeded and all out-parameters are set.
    Ok = 0,
    /// A required pointer argument was null.
    NullArg = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A configuration document failed to parse or validate.
    InvalidConfig = 3,
    /// A data argument (goal, plan) failed to parse.
    InvalidInput = 4,
    /// An unexpected internal failure; the out-parameters are untouched.
    Internal = 5,
}

struct Inner {
    sentinel: SentinelConfig,
    classifier: PhraseListClassifier,
    policy: PolicySet,
    backend: ReferenceBackend,
}

/// Opaque handle to a configured engine. Safe to share across threads;
/// all stage calls on it are read-only.
pub struct PalisadeEngine {
    inner: Inner,
}

// The engine is handed to arbitrary C threads, so losing these bounds must
// be a compile error, not a latent data race.
const _: () = {
    const fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<PalisadeEngine>()
};

/// Read a required C string argument.
///
/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, PalisadeStatus> {
    if ptr.is_null() {
        return Err(PalisadeStatus::NullArg);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| PalisadeStatus::InvalidUtf8)
}

/// Serialize `value` and store it in `*out` as a heap-allocated C string.
///
/// # Safety
/// `out` must be a valid, writable pointer.
unsafe fn write_json<T: Serialize>(value: &T, out: *mut *mut c_char) -> PalisadeStatus {
    let json = match serde_json::to_string(value) {
        Ok(json) => json,
        Err(_) => return PalisadeStatus::Internal,
    };
    // JSON strings never contain NUL bytes, so this conversion cannot fail
    // in practice; stay fail-safe regardless.
    match CString::new(json) {
        Ok(cstring) => {
            *out = cstring.into_raw();
            PalisadeStatus::Ok
        }
        Err(_) => PalisadeStatus::Internal,
    }
}

fn guarded(body: impl FnOnce() -> PalisadeStatus) -> PalisadeStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(PalisadeStatus::Internal)
}

/// A goal whose instruction has no drafting template is a caller-input
/// problem; anything else from the planning stage is internal.
fn plan_error_status(err: &palisade::Error) -> PalisadeStatus {
    match err {
        palisade::Error::MissingBenignTemplate(_) => PalisadeStatus::InvalidInput,
        _ => PalisadeStatus::Internal,
    }
}

unsafe fn engine_ref<'a>(
    engine: *const PalisadeEngine,
) -> Result<&'a PalisadeEngine, PalisadeStatus> {
    engine.as_ref().ok_or(PalisadeStatus::NullArg)
}

/// Create an engine.
///
/// `sentinel_config_json` configures the visual scan (thresholds, exemption
/// classes, phrase list); `policy_json` is the origin policy consulted by
/// the guard stage. Either may be null to use the built-in defaults. On
/// success `*out_engine` owns the new engine; release it with
/// `palisade_engine_free`.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings, and
/// `out_engine` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn palisade_engine_new(
    sentinel_config_json: *const c_char,
    policy_json: *const c_char,
    out_engine: *mut *mut PalisadeEngine,
) -> PalisadeStatus {
    guarded(|| {
        if out_engine.is_null() {
            return PalisadeStatus::NullArg;
        }
        let sentinel = if sentinel_config_json.is_null() {
            SentinelConfig::default()
        } else {
            let raw = match read_str(sentinel_config_json) {
                Ok(raw) => raw,
                Err(status) => return status,
            };
            match serde_json::from_str::<SentinelConfig>(raw) {
                Ok(cfg) => cfg,
                Err(_) => return PalisadeStatus::InvalidConfig,
            }
        };
        if sentinel.validate().is_err() {
            return PalisadeStatus::InvalidConfig;
        }
        let classifier = match sentinel.build_classifier() {
            Ok(classifier) => classifier,
            Err(_) => return PalisadeStatus::InvalidConfig,
        };
        let policy = if policy_json.is_null() {
            PolicySet::default()
        } else {
            let raw = match read_str(policy_json) {
                Ok(raw) => raw,
                Err(status) => return status,
            };
            match serde_json::from_str::<PolicySet>(raw) {
                Ok(policy) => policy,
                Err(_) => return PalisadeStatus::InvalidConfig,
            }
        };
        if policy.validate().is_err() {
            return PalisadeStatus::InvalidConfig;
        }
        let engine = Box::new(PalisadeEngine {
            inner: Inner {
                sentinel,
                classifier,
                policy,
                backend: ReferenceBackend::with_defaults(),
            },
        });
        *out_engine = Box::into_raw(engine);
        PalisadeStatus::Ok
    })
}

/// Release an engine created by `palisade_engine_new`. Null is a no-op.
///
/// # Safety
/// `engine` must be null or a pointer obtained from `palisade_engine_new`
/// that has not already been freed, with no other thread still using it.
#[no_mangle]
pub unsafe extern "C" fn palisade_engine_free(engine: *mut PalisadeEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Run the visual scan stage on an HTML document.
///
/// Writes the scan verdict as JSON to `*out_verdict_json`: whether the page
/// is blocked, the visibility findings, and — only when the page is safe —
/// the sanitized text payload that may be forwarded to planning.
///
/// # Safety
/// `engine` must be a live engine, `html` a valid NUL-terminated string,
/// and `out_verdict_json` a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn palisade_scan_page(
    engine: *const PalisadeEngine,
    html: *const c_char,
    out_verdict_json: *mut *mut c_char,
) -> PalisadeStatus {
    guarded(|| {
        let engine = match engine_ref(engine) {
            Ok(engine) => engine,
            Err(status) => return status,
        };
        if out_verdict_json.is_null() {
            return PalisadeStatus::NullArg;
        }
        let html = match read_str(html) {
            Ok(html) => html,
            Err(status) => return status,
        };
        let tree = parse_document(html);
        let verdict = sentinel_scan(&tree, &engine.inner.sentinel, &engine.inner.classifier);
        write_json(&verdict, out_verdict_json)
    })
}

/// Run the planning stage on an already-scanned text payload.
///
/// `goal_json` is the user goal as JSON (`{"instruction": ...,
/// "task_domain": ...}`); `payload_text` is the sanitized page text from a
/// safe scan verdict. Writes the planner verdict as JSON: either a
/// rejection with its threat assessment or a drafted plan. The
/// `simulated_latency_ms` field is always 0 over this interface. A goal
/// whose instruction the built-in backend has no drafting template for is
/// reported as invalid input.
///
/// # Safety
/// `engine` must be a live engine, string arguments valid NUL-terminated
/// strings, and `out_verdict_json` a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn palisade_plan_stage(
    engine: *const PalisadeEngine,
    goal_json: *const c_char,
    payload_text: *const c_char,
    out_verdict_json: *mut *mut c_char,
) -> PalisadeStatus {
    guarded(|| {
        let engine = match engine_ref(engine) {
            Ok(engine) => engine,
            Err(status) => return status,
        };
        if out_verdict_json.is_null() {
            return PalisadeStatus::NullArg;
        }
        let goal_raw = match read_str(goal_json) {
            Ok(raw) => raw,
            Err(status) => return status,
        };
        let payload = match read_str(payload_text) {
            Ok(payload) => payload,
            Err(status) => return status,
        };
        let goal: UserGoal = match serde_json::from_str(goal_raw) {
            Ok(goal) => goal,
            Err(_) => return PalisadeStatus::InvalidInput,
        };
        let verdict = match plan_stage(&goal, payload, None, &engine.inner.backend, 0.0) {
            Ok(verdict) => verdict,
            Err(err) => return plan_error_status(&err),
        };
        write_json(&verdict, out_verdict_json)
    })
}

/// Run the origin-guard stage on a drafted plan.
///
/// `plan_json` is a plan as produced by the planning stage (its declared
/// scope is part of the document); `task_domain` is the origin the user's
/// task is anchored to, e.g. `https://jira.example`. Writes the guard
/// decision as JSON. The guard is deterministic and total: any plan it
/// cannot prove in-policy is blocked.
///
/// # Safety
/// `engine` must be a live engine, string arguments valid NUL-terminated
/// strings, and `out_decision_json` a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn palisade_guard_check(
    engine: *const PalisadeEngine,
    plan_json: *const c_char,
    task_domain: *const c_char,
    out_decision_json: *mut *mut c_char,
) -> PalisadeStatus {
    guarded(|| {
        let engine = match engine_ref(engine) {
            Ok(engine) => engine,
            Err(status) => return status,
        };
        if out_decision_json.is_null() {
            return PalisadeStatus::NullArg;
        }
        let plan_raw = match read_str(plan_json) {
            Ok(raw) => raw,
            Err(status) => return status,
        };
        let task_domain = match read_str(task_domain) {
            Ok(domain) => domain,
            Err(status) => return status,
        };
        let plan: Plan = match serde_json::from_str(plan_raw) {
            Ok(plan) => plan,
            Err(_) => return PalisadeStatus::InvalidInput,
        };
        let decision = guard_evaluate(
            &plan,
            &engine.inner.policy,
            plan.declared_scope,
            task_domain,
        );
        write_json(&decision, out_decision_json)
    })
}

/// The defense decision for one page, produced by `palisade_pipeline_run`.
#[derive(Serialize)]
struct PipelineDecision {
    /// `"L1"`, `"L2"`, `"L3"`, or null when nothing blocked.
    blocked_at: Option<&'static str>,
    scan: SentinelVerdict,
    planner: Option<PlannerVerdict>,
    guard: Option<GuardDecision>,
    /// The vetted plan; present only when every stage passed it.
    approved_plan: Option<Plan>,
}

/// Run a page through all three stages: visual scan, planning screen,
/// origin guard.
///
/// Writes a JSON decision document to `*out_decision_json` with
/// `blocked_at` (`"L1"`, `"L2"`, `"L3"`, or null), the per-stage verdicts
/// that were reached, and — only when all stages passed — the approved
/// plan. A page blocked by the scan never reaches planning, so nothing of
/// its content appears in the decision beyond the visibility findings.
///
/// # Safety
/// `engine` must be a live engine, string arguments valid NUL-terminated
/// strings, and `out_decision_json` a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn palisade_pipeline_run(
    engine: *const PalisadeEngine,
    goal_json: *const c_char,
    html: *const c_char,
    out_decision_json: *mut *mut c_char,
) -> PalisadeStatus {
    guarded(|| {
        let engine = match engine_ref(engine) {
            Ok(engine) => engine,
            Err(status) => return status,
        };
        if out_decision_json.is_null() {
            return PalisadeStatus::NullArg;
        }
        let goal_raw = match read_str(goal_json) {
            Ok(raw) => raw,
            Err(status) => return status,
        };
        let html = match read_str(html) {
            Ok(html) => html,
            Err(status) => return status,
        };
        let goal: UserGoal = match serde_json::from_str(goal_raw) {
            Ok(goal) => goal,
            Err(_) => return PalisadeStatus::InvalidInput,
        };

        let tree = parse_document(html);
        let scan = sentinel_scan(&tree, &engine.inner.sentinel, &engine.inner.classifier);
        if scan.outcome == SentinelOutcome::Blocked {
            let decision = PipelineDecision {
                blocked_at: Some("L1"),
                scan,
                planner: None,
                guard: None,
                approved_plan: None,
            };
            return write_json(&decision, out_decision_json);
        }

        let payload = scan.sanitized_payload.clone().unwrap_or_default();
        let planner = match plan_stage(&goal, &payload, None, &engine.inner.backend, 0.0) {
            Ok(verdict) => verdict,
            Err(err) => return plan_error_status(&err),
        };
        let plan = match &planner.outcome {
            PlannerOutcome::Rejected { .. } => {
                let decision = PipelineDecision {
                    blocked_at: Some("L2"),
                    scan,
                    planner: Some(planner),
                    guard: None,
                    approved_plan: None,
                };
                return write_json(&decision, out_decision_json);
            }
            PlannerOutcome::Planned { plan, .. } => plan.clone(),
        };

        let guard = guard_evaluate(
            &plan,
            &engine.inner.policy,
            plan.declared_scope,
            &goal.task_domain,
        );
        let blocked = guard.outcome == GuardOutcome::Block;
        let decision = PipelineDecision {
            blocked_at: blocked.then_some("L3"),
            scan,
            planner: Some(planner),
            guard: Some(guard),
            approved_plan: (!blocked).then_some(plan),
        };
        write_json(&decision, out_decision_json)
    })
}

/// Release a string returned through any out-parameter. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string obtained from this library that has not
/// already been freed.
#[no_mangle]
pub unsafe extern "C" fn palisade_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The library version as a static string. Do not free.
#[no_mangle]
pub extern "C" fn palisade_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).expect("version has no NUL"))
        .as_ptr()
}
