//! Layer 1 — the edge sentinel. Enforces visual consistency: text a human
//! user could not have seen must not reach the planning stage. Runs a cheap
//! visibility predicate over every text node, blocks on the first
//! non-exempt violation, classifies hidden-but-exempt text with a local
//! backend, and produces the sanitized payload for the next layer.

mod classifier;
mod sanitize;

pub use classifier::{
    classify_local, load_phrase_list, normalize_for_matching, Classification, LocalClassifier,
    PhraseListClassifier,
};
pub use sanitize::sanitize;

use crate::dom::{walk_text_nodes, Display, DomTree, RectEstimate, TextNodeView, Viewport};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Tuning for the visibility predicate and the classification policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentinelConfig {
    /// Text with effective opacity strictly below this is hidden.
    pub opacity_threshold: f64,
    /// Text at or below this font size is treated as size zero.
    pub font_size_epsilon_px: f64,
    pub viewport: Viewport,
    /// When set, every text node is classified locally (the literal
    /// per-node loop), not only hidden-but-exempt text.
    pub classify_all_nodes: bool,
    /// Class names that mark legitimate screen-reader-only content.
    pub exemption_classes: Vec<String>,
    /// Optional plain-text file (one phrase per line) for the default
    /// local classifier; `None` uses the built-in list.
    pub phrase_list_path: Option<PathBuf>,
}

impl Default for SentinelConfig {
    fn default() -> Self {
        SentinelConfig {
            opacity_threshold: 0.1,
            font_size_epsilon_px: 0.5,
            viewport: Viewport::default(),
            classify_all_nodes: false,
            exemption_classes: vec!["sr-only".to_string(), "visually-hidden".to_string()],
            phrase_list_path: None,
        }
    }
}

impl SentinelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.opacity_threshold > 0.0 && self.opacity_threshold < 1.0) {
            return Err(Error::Config(format!(
                "opacity_threshold must be in (0, 1), got {}",
                self.opacity_threshold
            )));
        }
        if self.font_size_epsilon_px.is_nan() || self.font_size_epsilon_px < 0.0 {
            return Err(Error::Config(format!(
                "font_size_epsilon_px must be >= 0, got {}",
                self.font_size_epsilon_px
            )));
        }
        if !(self.viewport.width_px > 0.0 && self.viewport.height_px > 0.0) {
            return Err(Error::Config(
                "viewport dimensions must be strictly positive".to_string(),
            ));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let cfg: SentinelConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Build the local classifier this config describes.
    pub fn build_classifier(&self) -> Result<PhraseListClassifier> {
        match &self.phrase_list_path {
            Some(path) => Ok(PhraseListClassifier::new(load_phrase_list(path)?)),
            None => Ok(PhraseListClassifier::with_default_phrases()),
        }
    }
}

/// Which visibility rule a node violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VisibilityRule {
    OpacityHidden,
    ZeroFont,
    OffViewport,
    DisplayNone,
}

/// One visibility violation, with enough context to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFinding {
    pub node_path: String,
    pub rule: VisibilityRule,
    /// Rendered value that tripped the rule (a number or a mode name).
    pub observed_value: String,
    /// First 80 characters of the offending text.
    pub text_excerpt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SentinelOutcome {
    Safe,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockReason {
    VisualObfuscation,
    LocalClassifierFlag,
}

/// Byte accounting and timing for one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanStats {
    pub raw_bytes: usize,
    pub sanitized_bytes: usize,
    /// Measured wall clock. Excluded from canonical serialized output so
    /// that reports stay byte-reproducible; see the harness layer.
    #[serde(skip)]
    pub wall_clock_ns: u128,
}

/// Result of one document scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentinelVerdict {
    pub outcome: SentinelOutcome,
    /// Nonempty exactly when blocked by a visual rule.
    pub findings: Vec<VisibilityFinding>,
    pub block_reason: Option<BlockReason>,
    /// Present exactly when the outcome is `Safe`: nothing leaves the edge
    /// on a block.
    pub sanitized_payload: Option<String>,
    pub stats: ScanStats,
}

/// Apply the visibility predicate to one text node. Returns the violated
/// rule, checked in fixed priority order: opacity, font size, off-viewport,
/// display. Text below the fold (fully under the viewport but within its
/// horizontal band) is reachable by scrolling and does not trigger.
pub fn check_visual(view: &TextNodeView, cfg: &SentinelConfig) -> Option<VisibilityFinding> {
    let style = &view.style;
    let finding = |rule: VisibilityRule, observed: String| {
        Some(VisibilityFinding {
            node_path: view.node_path.clone(),
            rule,
            observed_value: observed,
            text_excerpt: view.text.chars().take(80).collect(),
        })
    };

    if style.effective_opacity < cfg.opacity_threshold {
        return finding(
            VisibilityRule::OpacityHidden,
            format!("{}", style.effective_opacity),
        );
    }
    if style.font_size_px <= cfg.font_size_epsilon_px {
        return finding(
            VisibilityRule::ZeroFont,
            format!("{}px", style.font_size_px),
        );
    }
    if let RectEstimate::Positioned {
        left,
        top,
        width,
        height,
    } = view.rect
    {
        let vw = cfg.viewport.width_px;
        let fully_left = left + width <= 0.0;
        let fully_right = left >= vw;
        let fully_above = top + height <= 0.0;
        if fully_left || fully_right || fully_above {
            return finding(
                VisibilityRule::OffViewport,
                format!("left={left} top={top}"),
            );
        }
    }
    if style.display == Display::None {
        return finding(VisibilityRule::DisplayNone, "display:none".to_string());
    }
    None
}

/// True when the node or an ancestor carries a recognized accessibility
/// marker: `aria-label`, `role`, or one of the configured screen-reader
/// class names.
pub fn is_exempt(view: &TextNodeView, exemption_classes: &[String]) -> bool {
    view.markers.has_aria_label
        || view.markers.has_role
        || view
            .markers
            .ancestor_classes
            .iter()
            .any(|c| exemption_classes.iter().any(|e| e == c))
}

/// A finding paired with its exemption status; diagnostic output only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumeratedFinding {
    pub finding: VisibilityFinding,
    pub exempt: bool,
}

/// Diagnostic full-document pass: every visual finding, exempt or not,
/// without early exit or classification.
pub fn enumerate_findings(tree: &DomTree, cfg: &SentinelConfig) -> Vec<EnumeratedFinding> {
    walk_text_nodes(tree)
        .iter()
        .filter_map(|view| {
            check_visual(view, cfg).map(|finding| EnumeratedFinding {
                exempt: is_exempt(view, &cfg.exemption_classes),
                finding,
            })
        })
        .collect()
}

/// Scan one parsed document. Blocking mode: the first non-exempt visual
/// violation terminates the scan immediately and nothing is forwarded.
/// Hidden-but-exempt text goes through the local classifier (fail-closed);
/// with `classify_all_nodes` every text node does.
pub fn sentinel_scan(
    tree: &DomTree,
    cfg: &SentinelConfig,
    backend: &dyn LocalClassifier,
) -> SentinelVerdict {
    let started = std::time::Instant::now();
    let mut blocked: Option<(Vec<VisibilityFinding>, BlockReason)> = None;

    for view in walk_text_nodes(tree) {
        if let Some(finding) = check_visual(&view, cfg) {
            if !is_exempt(&view, &cfg.exemption_classes) {
                blocked = Some((vec![finding], BlockReason::VisualObfuscation));
                break;
            }
            // Legitimately hidden content still gets a malice check.
            if classify_local(&view.text, backend) == Classification::Unsafe {
                blocked = Some((Vec::new(), BlockReason::LocalClassifierFlag));
                break;
            }
        } else if cfg.classify_all_nodes
            && classify_local(&view.text, backend) == Classification::Unsafe
        {
            blocked = Some((Vec::new(), BlockReason::LocalClassifierFlag));
            break;
        }
    }

    match blocked {
        Some((findings, reason)) => SentinelVerdict {
            outcome: SentinelOutcome::Blocked,
            findings,
            block_reason: Some(reason),
            sanitized_payload: None,
            stats: ScanStats {
                raw_bytes: tree.source_len,
                sanitized_bytes: 0,
                wall_clock_ns: started.elapsed().as_nanos(),
            },
        },
        None => {
            let payload = sanitize(tree);
            let sanitized_bytes = payload.len();
            SentinelVerdict {
                outcome: SentinelOutcome::Safe,
                findings: Vec::new(),
                block_reason: None,
                sanitized_payload: Some(payload),
                stats: ScanStats {
                    raw_bytes: tree.source_len,
                    sanitized_bytes,
                    wall_clock_ns: started.elapsed().as_nanos(),
                },
            }
        }
    }
}
