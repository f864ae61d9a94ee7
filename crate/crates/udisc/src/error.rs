//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |H - H*| = {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigendecomposition failed to converge{}", detail)]
    EigenFailure { detail: String },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operator trace {trace:.6} is too far from 1 to normalize")]
    BadTrace { trace: f64 },

    #[error("prior probability {value} for state {index} is not positive")]
    NonPositivePrior { index: usize, value: f64 },

    #[error("prior probabilities sum to {sum:.6}, too far from 1 to renormalize")]
    BadPriorSum { sum: f64 },

    #[error("empty state list")]
    EmptyEnsemble,

    #[error("priors/states length mismatch: {states} states, {priors} priors")]
    PriorCountMismatch { states: usize, priors: usize },

    #[error("numerical failure in SDP solve: {0}")]
    NumericalFailure(String),

    #[error("signal spaces {i} and {j} are not orthogonal: |P_i P_j| = {overlap:.3e}")]
    NotOrthogonal { i: usize, j: usize, overlap: f64 },

    #[error("rank-1 pair solver requires {0}")]
    PairPrecondition(String),

    #[error("signal spaces coincide (|f| = 1 within tolerance): unambiguous discrimination of both states is impossible")]
    DegeneratePair,

    #[error("group element {index} is not unitary: deviation {deviation:.3e}")]
    NotUnitary { index: usize, deviation: f64 },

    #[error("group is not closed: U_{j}* U_{i} matches no element")]
    GroupNotClosed { j: usize, i: usize },

    #[error("group is not abelian: elements {i} and {j} do not commute (|[U_i,U_j]| = {deviation:.3e})")]
    NotAbelian { i: usize, j: usize, deviation: f64 },

    #[error("first group element must be the identity")]
    MissingIdentity,

    #[error("GU/CGU reduction requires uniform priors; prior {index} is {value}")]
    NonUniformPriors { index: usize, value: f64 },

    #[error("measurement has {got} operators, group of order {expected} requires {}", expected + 1)]
    OperatorCountMismatch { expected: usize, got: usize },

    #[error("dual matrix rejected: {0}")]
    DualInfeasible(String),

    #[error("instance generation: {0}")]
    Generation(String),

    #[error("Born probability {value:.3e} for (outcome {outcome}, state {state}) is below -1e-8")]
    NegativeProbability { outcome: usize, state: usize, value: f64 },

    #[error("invalid instance file: {0}")]
    InvalidInstance(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
