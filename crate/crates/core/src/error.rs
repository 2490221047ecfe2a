use thiserror::Error;

use crate::reconstruct::PlaneSelection;

/// Errors produced by the numerical pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("planes are parallel or degenerate (|det| = {det:e})")]
    ParallelOrDegenerate { det: f64 },
    #[error("simplex is degenerate: {0}")]
    DegenerateSimplex(String),
    #[error("design matrix is rank deficient (pivot {pivot:e})")]
    RankDeficient { pivot: f64 },
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("degenerate box: {0}")]
    DegenerateBox(String),
    #[error("plane or line does not meet the box")]
    EmptyIntersection,
    #[error("point {point:?} lies outside the field domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("search budget of {budget} draws exhausted without an accepted draw")]
    BudgetExhausted { budget: usize, best: Box<PlaneSelection> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
