//! Pluggable local text classifier used on hidden-but-exempt text (and, in
//! the literal per-node mode, on every text node). The default backend is a
//! deterministic phrase matcher standing in for an on-device model.

/// Two-valued verdict every backend must honor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Safe,
    Unsafe,
}

/// A local classification backend. Implementations must be shareable across
/// concurrent scans of distinct documents.
pub trait LocalClassifier: Send + Sync {
    /// Classify one text node's content. An `Err` is a backend failure
    /// (crash, timeout); the caller treats it fail-closed.
    fn classify(&self, text: &str) -> Result<Classification, String>;
}

/// Classify with fail-closed semantics: the text under inspection is
/// already suspicious (hidden), so a broken backend must not wave it
/// through.
pub fn classify_local(text: &str, backend: &dyn LocalClassifier) -> Classification {
    match backend.classify(text) {
        Ok(c) => c,
        Err(reason) => {
            log::warn!("local classifier failed ({reason}); failing closed");
            Classification::Unsafe
        }
    }
}

/// Lowercase and remove all whitespace, so matching is immune to case games
/// and arbitrary whitespace splicing.
pub fn normalize_for_matching(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Deterministic matcher over a configured phrase list.
#[derive(Debug, Clone)]
pub struct PhraseListClassifier {
    normalized_phrases: Vec<String>,
}

impl PhraseListClassifier {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        PhraseListClassifier {
            normalized_phrases: phrases
                .into_iter()
                .map(|p| normalize_for_matching(p.as_ref()))
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    /// Phrase list matching the default semantic threat patterns, so the
    /// edge and the planner agree on what "malicious" means out of the box.
    pub fn with_default_phrases() -> Self {
        PhraseListClassifier::new(crate::planner::default_phrase_list())
    }
}

impl LocalClassifier for PhraseListClassifier {
    fn classify(&self, text: &str) -> Result<Classification, String> {
        let haystack = normalize_for_matching(text);
        let hit = self
            .normalized_phrases
            .iter()
            .any(|p| haystack.contains(p.as_str()));
        Ok(if hit {
            Classification::Unsafe
        } else {
            Classification::Safe
        })
    }
}

/// Load a phrase list from a plain-text file: one phrase per line, blank
/// lines and `#` comments skipped.
pub fn load_phrase_list(path: &std::path::Path) -> crate::Result<Vec<String>> {
    let raw = std::fs::read_to_string(path)?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
