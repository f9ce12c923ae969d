use thiserror::Error;

/// Errors surfaced by the library. Parsing and scanning are total and never
/// produce errors; these cover configuration, policy, corpus, protocol, and
/// I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("no benign plan template for goal instruction {0:?}")]
    MissingBenignTemplate(String),

    #[error("remote planner transport failure: {0}")]
    Transport(String),

    #[error("remote planner returned a malformed response: {0}")]
    MalformedResponse(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
