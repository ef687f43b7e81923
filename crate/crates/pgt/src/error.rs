use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgtError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("instantiation budget exceeded: {needed} vertices > {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("sibling edges are not supported by {0}")]
    SiblingEdges(&'static str),
    #[error("{0}")]
    Precondition(String),
    #[error("state budget exceeded: {0} states")]
    StateBudget(usize),
}

pub type Result<T> = std::result::Result<T, PgtError>;

pub(crate) fn pre<T>(msg: impl Into<String>) -> Result<T> {
    Err(PgtError::Precondition(msg.into()))
}
