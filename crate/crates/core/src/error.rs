use thiserror::Error;

use crate::C64;

/// Errors raised by compilation, simulation and measurement routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no roots of a constant")]
    ConstantRoots,
    #[error("polynomial not completable: sup |P| = {sup} exceeds 1")]
    NotCompletable { sup: f64 },
    #[error("factorization unstable near root {root}")]
    FactorizationUnstable { root: C64 },
    #[error("angle extraction diverged at round {round}")]
    AngleExtraction { round: usize },
    #[error("delta solve did not converge for node {node}")]
    DeltaSolve { node: usize },
    #[error("kernel bound search exhausted")]
    KernelSearchExhausted,
    #[error("truncation too small for alpha")]
    TruncationTooSmall,
    #[error("truncation artifact in Wigner")]
    WignerTruncation,
    #[error("cat phase sum not unimodular")]
    CatPhaseNotUnimodular,
    #[error("amplitude exceeds unity at level {level}")]
    AmplitudeExceedsUnity { level: usize },
    #[error("branch unreachable")]
    BranchUnreachable,
    #[error("integration step too large: dt = {dt}, limit = {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
