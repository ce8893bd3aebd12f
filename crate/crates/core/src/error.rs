use thiserror::Error;

use crate::linalg::Dim;

/// Errors raised by the kinematics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("dimension mismatch: expected {expected:?}, got {found:?}")]
    DimensionMismatch { expected: Dim, found: Dim },
    #[error("matrix is not skew-symmetric (residual {residual:e})")]
    NotSkew { residual: f64 },
    #[error("matrix is not a proper rotation (orthogonality residual {orthogonality:e}, det {det})")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("deformation gradient is singular or orientation-reversing (det {det:e})")]
    SingularF { det: f64 },
    #[error("velocity field is singular at x = {x:?}, t = {t}")]
    SingularPoint { x: Vec<f64>, t: f64 },
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("generator is not skew-symmetric at t = {t} (symmetric part {residual:e})")]
    GeneratorNotSkew { t: f64, residual: f64 },
    #[error("stretch tensor became numerically singular at t = {t}")]
    StretchSingular { t: f64 },
    #[error("time grids do not match: {0}")]
    GridMismatch(String),
    #[error("time {t} is not a node of the grid")]
    NodeMismatch { t: f64 },
    #[error("vector is not of unit length (|e| = {norm})")]
    NotUnit { norm: f64 },
    #[error("fiber rate is not orthogonal to the fiber (<e, edot> = {dot:e})")]
    NotOrthogonal { dot: f64 },
    #[error("input matrix is singular")]
    SingularInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, KinematicsError>;
