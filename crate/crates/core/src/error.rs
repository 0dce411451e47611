use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("empty program")]
    EmptyProgram,
    #[error("undefined 1/DC: qubit {0} has no direct connections")]
    UndefinedInverseDegree(usize),
    #[error("allocation of {available} qubits cannot hold {required} logical qubits")]
    Capacity { required: usize, available: usize },
    #[error("routing infeasible: {0}")]
    RoutingInfeasible(String),
    #[error("instance too large for the exhaustive oracle: {0}")]
    OracleSize(String),
    #[error("undefined overhead: baseline has zero CNOTs")]
    UndefinedOverhead,
    #[error("insufficient data: need at least {required} samples, got {got}")]
    InsufficientData { required: usize, got: usize },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
