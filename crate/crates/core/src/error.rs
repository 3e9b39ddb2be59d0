use std::fmt;

use crate::model::Violation;

/// 1-based source position of a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{span}: {message}")]
    Parse { span: Span, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown regime `{0}`")]
    UnknownRegime(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("state space of {configurations} configurations exceeds the cap of {cap}")]
    StateSpace { configurations: u128, cap: u128 },

    #[error("{what}: {count} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, count: u128, cap: u128 },

    #[error("invalid statement: {0}")]
    InvalidStatement(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("model has no unobserved variables; `{0}` needs an extended information base")]
    NotExtended(&'static str),

    #[error("precondition unmet: {0}")]
    Precondition(String),

    #[error("observational conditional undefined at positive-probability history ({history})")]
    UndefinedConditional { history: String },

    #[error("not identifiable from observational data: {0}")]
    NotIdentifiable(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn parse(span: Span, message: impl Into<String>) -> Self {
        Error::Parse {
            span,
            message: message.into(),
        }
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Parse { span, .. } => Some(*span),
            _ => None,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::UnknownVariable(_) => "unknown-variable",
            Error::UnknownRegime(_) => "unknown-regime",
            Error::UnknownNode(_) => "unknown-node",
            Error::InvalidModel(_) => "invalid-model",
            Error::StateSpace { .. } => "state-space",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::InvalidStatement(_) => "invalid-statement",
            Error::InvalidPrior(_) => "invalid-prior",
            Error::InvalidStrategy(_) => "invalid-strategy",
            Error::InvalidDiagram(_) => "invalid-diagram",
            Error::NotExtended(_) => "not-extended",
            Error::Precondition(_) => "precondition",
            Error::UndefinedConditional { .. } => "undefined-conditional",
            Error::NotIdentifiable(_) => "not-identifiable",
            Error::Io(_) => "io",
        }
    }

    /// Process exit status: 1 refusal, 2 bad input, 3 undefined transfer.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UndefinedConditional { .. } => 3,
            Error::NotIdentifiable(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
