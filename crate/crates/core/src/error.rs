use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {index} out of range (lattice has {len} sites)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("region is empty")]
    EmptyRegion,
    #[error("regions overlap at site {0}")]
    OverlappingRegions(usize),
    #[error("degenerate lattice: {0}")]
    DegenerateLattice(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zeta({0}) is divergent")]
    Divergent(f64),
    #[error("dimension cap exceeded: basis would hold more than {cap} states")]
    DimensionCap { cap: usize },
    #[error("hopping matrix is not symmetric at ({0}, {1})")]
    NonSymmetricHopping(usize, usize),
    #[error("hopping entry J[{i}][{j}] = {value} exceeds the power-law cap {cap}")]
    HoppingCapViolation {
        i: usize,
        j: usize,
        value: f64,
        cap: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step too large: dt = {dt}, try dt <= {suggested:.3e}")]
    StepTooLarge { dt: f64, suggested: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("untrusted truncation: leakage {leakage:.3e} exceeds {limit:.1e}")]
    UntrustedTruncation { leakage: f64, limit: f64 },
    #[error("mass mismatch: {source_mass} vs {target_mass}")]
    MassMismatch { source_mass: f64, target_mass: f64 },
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("dual problem infeasible: {0}")]
    InfeasibleDual(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("state graph node cap exceeded: {nodes} > {cap}")]
    NodeCapExceeded { nodes: usize, cap: usize },
    #[error("time {0} is not on the trajectory grid")]
    OffGrid(f64),
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
