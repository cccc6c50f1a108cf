use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("infeasible frame: pilot length {tau_p} does not fit in coherence interval {tau_c}")]
    InfeasibleFrame { tau_p: usize, tau_c: usize },

    #[error("unsupported layout: {0} cells (supported: 1, 7, 19)")]
    UnsupportedLayout(usize),

    #[error("user sampling failed in cell {cell} after {attempts} attempts")]
    Sampling { cell: usize, attempts: usize },

    #[error("invalid antenna pattern: {0}")]
    Pattern(String),

    #[error("array {array} serves {users} pilot directions but has only {elements} elements")]
    ZeroForcingRank {
        array: usize,
        users: usize,
        elements: usize,
    },

    #[error("power allocation violates constraints: {0}")]
    Constraint(String),

    #[error("feasibility solver failed at t = {t}: {reason}")]
    Solver { t: f64, reason: String },

    #[error("gram matrix singular in {0} consecutive draws")]
    SingularGram(usize),

    #[error("empty rate sample")]
    EmptySample,

    #[error("drop {index} failed")]
    Drop {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
