use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: non-finite entry")]
    InvalidMatrix,
    #[error("state is not normalized (|norm - 1| = {deviation:e})")]
    Unnormalized { deviation: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("parameter `{name}` = {value} out of range: {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid classical model: {0}")]
    ClassicalModel(String),
    #[error("a pure state is required")]
    PureStateRequired,
    #[error("triple is not ordered (0 <= A <= B <= I fails)")]
    NotOrdered,
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("iteration cap of {sweeps} sweeps exceeded; best point a1={a1}, a2={a2}, objective={objective}")]
    IterationCap {
        sweeps: usize,
        a1: f64,
        a2: f64,
        objective: f64,
    },
    #[error("sample must contain at least one shot")]
    EmptySample,
    #[error("at least {needed} shots are needed, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("invalid experiment plan: {0}")]
    Plan(String),
    #[error("no noise threshold: {0}")]
    NoThreshold(String),
    #[error("invalid noise model `{0}`")]
    NoiseSpec(String),
    #[error("document error at line {line}, column {column}: {message}")]
    Document {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Parameter {
            name,
            value,
            expected,
        }
    }
}
