use thiserror::Error;

#[derive(Debug, Error)]
pub enum GasError {
    #[error("sonic flow: ram pressure factor {factor:e} at p = {pressure} Pa")]
    SonicFlow { pressure: f64, factor: f64 },

    #[error("non-positive pressure {0} Pa")]
    NonPositivePressure(f64),

    #[error("pipe runs dry at x = {position} m")]
    DrainedPipe { position: f64 },

    #[error("Newton iteration failed at x = {position} m")]
    NewtonDivergence { position: f64 },

    #[error("model level {0} has no closed-form solution")]
    Unsupported(u8),

    #[error("grids do not align: {0}")]
    IncompatibleGrids(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("network has no pipes")]
    EmptyNetwork,

    #[error("unknown {kind} id '{id}'")]
    UnknownId { kind: &'static str, id: String },

    #[error("invalid network:\n{0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unimplemented: {0}")]
    Unimplemented(&'static str),

    #[error("NLP solver failed: {0}")]
    SolverFailure(String),

    #[error("NLP infeasible after {solves} solves")]
    Infeasible { solves: usize },

    #[error("no ε-feasible solution after {0} outer iterations")]
    IterationLimit(usize),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GasError>;
