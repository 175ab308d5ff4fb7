use thiserror::Error;

use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not representable in the expression class: {0}")]
    NotRepresentable(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("symbol `{0}` has no value at the evaluation point")]
    Unassigned(Symbol),
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("declaration mismatch: {0}")]
    DeclarationMismatch(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid transformation: {0}")]
    InvalidTransform(String),
    #[error("the space map has no declared inverse")]
    MissingInverse,
    #[error("the model is not declared non-explosive")]
    NonExplosiveRequired,
    #[error("the model has no time variable")]
    NoTimeVariable,
    #[error("Doob residual is nonzero at {0}")]
    DoobResidualNonzero(String),
    #[error("PDE residual is nonzero at {0}")]
    PdeResidualNonzero(String),
    #[error("sigma^T sigma is not invertible in the expression class")]
    SingularSigma,
    #[error("basis not closed: {0}")]
    BasisNotClosed(String),
    #[error("no valid sample point found in the declared domain")]
    NoValidSample,
    #[error("path {path} left the domain at step {step}")]
    DomainExit { path: usize, step: usize },
    #[error("path {path} reached transformed time {available} < requested {requested}")]
    ClockTooShort {
        path: usize,
        requested: f64,
        available: f64,
    },
    #[error("density recipe carries no Doob potential")]
    PotentialMissing,
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("not representable at {pos}: {msg}")]
    NotRepresentableAt { pos: usize, msg: String },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("catalog self-test failed: {0}")]
    SelfTest(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
