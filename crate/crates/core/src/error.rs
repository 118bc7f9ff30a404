use std::path::PathBuf;

use thiserror::Error;

use crate::bits::BitVector;
use crate::circuit::netlist::NetlistError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bit string '{text}': unexpected character '{found}'")]
    BadBitString { text: String, found: char },

    #[error("{what}: expected width {expected}, got {got}")]
    WidthMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("malformed circuit: {0}")]
    InvalidCircuit(String),

    #[error("exhaustive check refused: {inputs} inputs exceeds the limit of {max}")]
    TooManyInputs { inputs: usize, max: usize },

    #[error(transparent)]
    Netlist(#[from] NetlistError),

    #[error("malformed model: {0}")]
    InvalidModel(String),

    #[error("transition numerator {numerator} exceeds denominator {denominator} at s={state} s'={successor} a={action}")]
    NumeratorExceedsDenominator {
        numerator: u64,
        denominator: u64,
        state: BitVector,
        successor: BitVector,
        action: usize,
    },

    #[error("transition row s={state} a={action} sums to {sum}/{denominator}, not 1")]
    NotNormalized {
        state: BitVector,
        action: usize,
        sum: u64,
        denominator: u64,
    },

    #[error("successor circuit for action {action} lists s'={successor} twice at s={state}")]
    DuplicateSuccessor {
        state: BitVector,
        action: usize,
        successor: BitVector,
    },

    #[error("policy decoded action index {index}, but only {count} actions exist")]
    InvalidAction { index: u64, count: usize },

    #[error("enumeration limit exceeded: {what} (limit {limit})")]
    LimitExceeded { what: String, limit: usize },

    #[error("state sequence must start at the initial state")]
    NotInitialState,

    #[error("history of {len} states does not fit horizon {horizon}")]
    HistoryTooLong { len: usize, horizon: usize },

    #[error("value function has no entry for s={state} at step {step}")]
    MissingValue { state: BitVector, step: usize },

    #[error("no action satisfies the value equation at s={state}, step {step}")]
    NoConsistentAction { state: BitVector, step: usize },

    #[error("explicit policy is not total: no action for s={state}")]
    PartialPolicy { state: BitVector },

    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CNF line {line}: {message}")]
    Cnf { line: usize, message: String },

    #[error("reduction input rejected: {0}")]
    Reduction(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
