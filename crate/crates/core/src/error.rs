use std::fmt;

use thiserror::Error;

use crate::model::ModelDiagnostic;

/// Line and column (both 1-based) of a fact or token in its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, serde::Serialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{name}` expects {expected} arguments, found {found}")]
    WrongArity { name: String, expected: usize, found: usize },
    #[error("argument {index} of `{name}` must be {expected}")]
    BadArgument { name: String, index: usize, expected: &'static str },
    #[error("unsafe rule: variable `{0}` has no positive occurrence")]
    UnsafeVariable(String),
    #[error("comparison over non-integer term `{0}`")]
    NonIntegerComparison(String),
    #[error("violation atoms may not occur in a rule body")]
    NotStratified,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {kind}")]
pub struct ParseError {
    pub location: Location,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(location: Location, kind: ParseErrorKind) -> Self {
        ParseError { location, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("ill-formed model: {}", join(.0))]
    IllFormedModel(Vec<ModelDiagnostic>),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown instantiation `{0}`")]
    UnknownInstantiation(String),
    #[error("instance fact at {location} refers to undeclared instantiation `{inst}`")]
    UndeclaredInstantiation { inst: String, location: Location },
    #[error("instantiation `{inst}` declared for models `{first}` and `{second}`")]
    ConflictingInstantiation { inst: String, first: String, second: String },
    #[error("instantiation `{inst}` belongs to model `{inst_model}`, not `{model}`")]
    ModelMismatch { inst: String, inst_model: String, model: String },
    #[error("constraint refers to undeclared {what} `{name}` of model `{model}`")]
    UndeclaredReference { what: &'static str, name: String, model: String },
    #[error("attribute `{attr}` of class `{class}` has no finite domain; declare bounds or give a default integer domain")]
    UnboundedDomain { class: String, attr: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("oracle cap exceeded: {points} decision points > {cap}")]
    CapExceeded { points: usize, cap: usize },
}

fn join(d: &[ModelDiagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
