use thiserror::Error;

use crate::weight::ElementId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuybackError {
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
    #[error("duplicate element {0}")]
    DuplicateElement(ElementId),
    #[error("operation `{op}` is not defined for {kind} descriptors")]
    Unsupported { op: &'static str, kind: &'static str },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("ground set of {size} elements exceeds the limit of {limit}")]
    SizeLimit { size: usize, limit: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("adversary protocol error: {0}")]
    Protocol(String),
    #[error("snapshot belongs to run {token} but was restored into run {state}")]
    StaleSnapshot { token: u64, state: u64 },
    #[error("event out of order: expected step {expected}, got {got}")]
    Sequencing { expected: usize, got: usize },
    #[error("matching in graph {graph} leaves element {element} unmatched")]
    MatchingIncomplete { graph: usize, element: ElementId },
}

pub type Result<T, E = BuybackError> = std::result::Result<T, E>;
