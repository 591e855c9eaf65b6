//! Sparse convex quadratic programming by ADMM operator splitting.
//!
//! ```
//! use cotow_qp::{solve, SolveStatus, SolverSettings, SparseQP};
//!
//! // min ½x² − x  s.t.  0 ≤ x ≤ 0.5
//! let qp = SparseQP::from_triplets(1, &[(0, 0, 1.0)], vec![-1.0], 1, &[(0, 0, 1.0)], vec![0.0], vec![0.5])
//!     .unwrap();
//! let sol = solve(&qp, &SolverSettings::default(), None).unwrap();
//! assert_eq!(sol.status, SolveStatus::Solved);
//! assert!((sol.x[0] - 0.5).abs() < 1e-4);
//! ```

mod admm;
pub mod csc;
pub mod ldl;
mod problem;

pub use admm::{solve, AdmmSolver, QpSolution, SolveStatus, SolverSettings};
pub use csc::CscMatrix;
pub use problem::{kkt_residuals, SparseQP, INFTY};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("P entry ({row}, {col}) lies below the diagonal; only the upper triangle is accepted")]
    LowerTriangleEntry { row: usize, col: usize },
    #[error("entry ({row}, {col}) is outside the declared shape")]
    IndexOutOfRange { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("problem data contains NaN or infinite values")]
    NonFinite,
    #[error("row {row} has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { row: usize, lower: f64, upper: f64 },
    #[error("P is not positive semidefinite")]
    NotConvex,
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("parse error: {0}")]
    Parse(String),
}
