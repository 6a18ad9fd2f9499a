use thiserror::Error;

use crate::solver::certify::InfeasibilityCertificate;

pub type Result<T> = std::result::Result<T, VngError>;

#[derive(Debug, Error)]
pub enum VngError {
    #[error("tree error at node `{node}`: {message}")]
    Tree { node: String, message: String },

    #[error("level mismatch: expected level {expected}, got {actual}")]
    LevelMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid cone at node `{node}`: {message}")]
    Cone { node: String, message: String },

    #[error("G1-violation at node `{node}`: unit vector e_{coordinate} is not a conic combination of input parts")]
    G1Violation { node: String, coordinate: usize },

    #[error("G2-violation at node `{node}`: generator {generator} has zero input and non-zero output")]
    G2Violation { node: String, generator: usize },

    #[error("G3-violation at node `{node}`: productivity floor {gamma:e} is not positive")]
    G3Violation { node: String, gamma: f64 },

    #[error("initial state: {0}")]
    InitialState(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("LP engine failure: {0}")]
    Lp(String),

    #[error("degenerate model: maximal expected terminal value {value:e} does not exceed tolerance")]
    DegenerateModel { value: f64 },

    #[error("solver did not converge after {iterations} iterations (gap bound {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    #[error("unsupportable node `{node}` at t={time}: preceding state is zero, so p·x = 1 is impossible")]
    Unsupportable { node: String, time: usize },

    #[error("path is not rapid: minimal total support slack {:e}", .0.min_total_slack)]
    NotRapid(Box<InfeasibilityCertificate>),

    #[error("conversion infeasible below node `{node}` (t={time}): {message}")]
    ConversionInfeasible {
        node: String,
        time: usize,
        message: String,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
