//! Remote planning service client and a loopback server for conformance
//! testing. The wire protocol is a single POST endpoint with JSON bodies;
//! the request id is echoed in the response. Every transport or schema
//! failure degrades to a fail-closed rejection: no answer means no plan,
//! and no plan means nothing executes.

use super::backend::{BackendAnalysis, PlanHint, PlannerBackend, ReferenceBackend};
use super::{
    IntentScope, MatchedSpan, Plan, PlanStep, PlannerOutcome, ThreatAssessment, ThreatCategory,
    UserGoal,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, Serialize, Deserialize)]
struct WireRequest {
    request_id: String,
    goal: UserGoal,
    payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hint: Option<PlanHint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WirePlanBody {
    steps: Vec<PlanStep>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireResponse {
    request_id: String,
    flagged: bool,
    #[serde(default)]
    categories: Vec<ThreatCategory>,
    #[serde(default)]
    matched_spans: Vec<MatchedSpan>,
    #[serde(default)]
    plan: Option<WirePlanBody>,
    #[serde(default)]
    scope: Option<IntentScope>,
}

/// Validate a wire response and rebuild the backend analysis it encodes.
/// Schema violations (unknown verbs or categories arrive as serde errors
/// upstream) and semantic violations handled here both fail the response.
fn interpret_response(
    response: WireResponse,
    expected_request_id: &str,
    payload_len: usize,
) -> Result<BackendAnalysis> {
    if response.request_id != expected_request_id {
        return Err(Error::MalformedResponse(format!(
            "request id mismatch: sent {expected_request_id:?}, got {:?}",
            response.request_id
        )));
    }
    for span in &response.matched_spans {
        if span.start > span.end || span.end > payload_len {
            return Err(Error::MalformedResponse(format!(
                "matched span {}..{} outside payload of {payload_len} bytes",
                span.start, span.end
            )));
        }
    }
    let categories: BTreeSet<ThreatCategory> = response.categories.iter().copied().collect();
    if response.flagged != !categories.is_empty() {
        return Err(Error::MalformedResponse(
            "flagged flag disagrees with category list".to_string(),
        ));
    }
    let assessment = ThreatAssessment {
        flagged: response.flagged,
        categories,
        matched_spans: response.matched_spans,
    };
    if response.flagged {
        return Ok(BackendAnalysis {
            outcome: PlannerOutcome::Rejected { assessment },
            transport_error: false,
        });
    }
    let scope = response.scope.ok_or_else(|| {
        Error::MalformedResponse("unflagged response carries no scope".to_string())
    })?;
    let steps = response.plan.map(|p| p.steps).unwrap_or_default();
    for step in &steps {
        let url = url::Url::parse(&step.target_url).map_err(|e| {
            Error::MalformedResponse(format!("step target {:?}: {e}", step.target_url))
        })?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(Error::MalformedResponse(format!(
                "step target {:?} has non-http scheme",
                step.target_url
            )));
        }
    }
    Ok(BackendAnalysis {
        outcome: PlannerOutcome::Planned {
            plan: Plan {
                steps,
                declared_scope: scope,
            },
            assessment,
        },
        transport_error: false,
    })
}

/// Client for a remote planning service.
pub struct RemoteBackend {
    endpoint: String,
    agent: ureq::Agent,
    next_request: AtomicU64,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, timeout_ms: u64) -> Self {
        RemoteBackend {
            endpoint: endpoint.into(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_millis(timeout_ms))
                .build(),
            next_request: AtomicU64::new(0),
        }
    }

    fn round_trip(
        &self,
        goal: &UserGoal,
        payload: &str,
        hint: Option<&PlanHint>,
    ) -> Result<BackendAnalysis> {
        let request_id = format!("req-{}", self.next_request.fetch_add(1, Ordering::Relaxed));
        let request = WireRequest {
            request_id: request_id.clone(),
            goal: goal.clone(),
            payload: payload.to_string(),
            hint: hint.cloned(),
        };
        let body = serde_json::to_string(&request)?;
        let raw = self
            .agent
            .post(&self.endpoint)
            .set("content-type", "application/json")
            .send_string(&body)
            .map_err(|e| Error::Transport(e.to_string()))?
            .into_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let response: WireResponse =
            serde_json::from_str(&raw).map_err(|e| Error::MalformedResponse(e.to_string()))?;
        interpret_response(response, &request_id, payload.len())
    }
}

impl PlannerBackend for RemoteBackend {
    /// Fail-closed: any transport or schema failure becomes a rejection
    /// with an empty category set and the transport-error marker.
    fn analyze(
        &self,
        goal: &UserGoal,
        payload: &str,
        hint: Option<&PlanHint>,
    ) -> Result<BackendAnalysis> {
        match self.round_trip(goal, payload, hint) {
            Ok(analysis) => Ok(analysis),
            Err(e) => {
                log::warn!("remote planner unavailable, rejecting fail-closed: {e}");
                Ok(BackendAnalysis {
                    outcome: PlannerOutcome::Rejected {
                        assessment: ThreatAssessment::clean(),
                    },
                    transport_error: true,
                })
            }
        }
    }
}

/// In-process HTTP server exposing a `ReferenceBackend` over the wire
/// protocol; used to prove the remote path and the local path agree.
pub struct LoopbackPlannerServer {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl LoopbackPlannerServer {
    pub fn start(backend: ReferenceBackend) -> Result<Self> {
        let server = tiny_http::Server::http("127.0.0.1:0")
            .map_err(|e| Error::Transport(format!("loopback bind: {e}")))?;
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(a) => a,
            #[allow(unreachable_patterns)]
            _ => return Err(Error::Transport("loopback bound to non-IP address".into())),
        };
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            while !stop_flag.load(Ordering::Relaxed) {
                match server.recv_timeout(Duration::from_millis(25)) {
                    Ok(Some(request)) => handle_request(&backend, request),
                    Ok(None) => continue,
                    Err(_) => break,
                }
            }
        });
        Ok(LoopbackPlannerServer {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    /// Endpoint URL clients should POST to.
    pub fn endpoint(&self) -> String {
        format!("http://{}/", self.addr)
    }
}

impl Drop for LoopbackPlannerServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_request(backend: &ReferenceBackend, mut request: tiny_http::Request) {
    let mut body = String::new();
    if std::io::Read::read_to_string(request.as_reader(), &mut body).is_err() {
        respond(request, 400, "{\"error\":\"unreadable body\"}");
        return;
    }
    let wire: WireRequest = match serde_json::from_str(&body) {
        Ok(w) => w,
        Err(e) => {
            respond(request, 400, &format!("{{\"error\":{:?}}}", e.to_string()));
            return;
        }
    };
    match backend.analyze(&wire.goal, &wire.payload, wire.hint.as_ref()) {
        Ok(analysis) => {
            let response = match analysis.outcome {
                PlannerOutcome::Rejected { assessment } => WireResponse {
                    request_id: wire.request_id,
                    flagged: assessment.flagged,
                    categories: assessment.categories.into_iter().collect(),
                    matched_spans: assessment.matched_spans,
                    plan: None,
                    scope: None,
                },
                PlannerOutcome::Planned { plan, assessment } => WireResponse {
                    request_id: wire.request_id,
                    flagged: assessment.flagged,
                    categories: assessment.categories.into_iter().collect(),
                    matched_spans: assessment.matched_spans,
                    scope: Some(plan.declared_scope),
                    plan: Some(WirePlanBody { steps: plan.steps }),
                },
            };
            match serde_json::to_string(&response) {
                Ok(json) => respond(request, 200, &json),
                Err(e) => respond(request, 500, &format!("{{\"error\":{:?}}}", e.to_string())),
            }
        }
        Err(e) => respond(request, 500, &format!("{{\"error\":{:?}}}", e.to_string())),
    }
}

fn respond(request: tiny_http::Request, status: u16, body: &str) {
    let header = tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
        .expect("static header");
    let response = tiny_http::Response::from_string(body)
        .with_status_code(status)
        .with_header(header);
    if let Err(e) = request.respond(response) {
        log::debug!("loopback response write failed: {e}");
    }
}
