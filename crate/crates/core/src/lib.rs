//! Models and control for towing a floating object with a surface vessel and
//! a tethered aerial vehicle.
//!
//! The controller predicts with a linear model of the coupled system, solves a
//! sparse QP each step and hands trajectories to simple tracking loops. The
//! plant integrates a nonlinear tethered model for evaluation.

pub mod dynamics;
pub mod frames;
pub mod guidance;
pub mod mission;
pub mod mpc;
pub mod plant;
pub mod reference;
pub mod strategy;

use cotow_qp::{QpError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("Euler transform undefined at pitch {theta} rad")]
    GimbalLock { theta: f64 },
    #[error("{0} mass matrix is singular")]
    SingularMass(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state diverged at t = {t} s")]
    NumericBlowup { t: f64 },
    #[error("non-finite measured state")]
    NonFiniteState,
    #[error("tether cannot be linearized (dz = {dz} m, planar separation = {planar} m)")]
    DegenerateGeometry { dz: f64, planar: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("QP solve ended with status {0}")]
    SolverFailed(SolveStatus),
    #[error("unknown {kind} '{name}' (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error(transparent)]
    Qp(#[from] QpError),
}
