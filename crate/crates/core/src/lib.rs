//! Deformation kinematics along trajectories of analytic velocity fields.
//!
//! The crate computes the classic polar decomposition `F = RU = VR` of the
//! deformation gradient next to its dynamic counterpart `F = OM = NO`, in which
//! the rotation `O` is generated by the spin tensor alone and therefore composes
//! across time intervals. On top of that it provides the relative and mean
//! rotation factors, dynamically consistent rotation angles, fiber-averaged
//! angular velocities and observer-change residuals.
//!
//! All tensors are 2×2 or 3×3 and live in [`linalg`].

// `!(x <= tol)` comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod angles;
pub mod dpd;
pub mod error;
pub mod fibers;
pub mod fields;
pub mod frames;
pub mod integrate;
pub mod linalg;
pub mod mean_rotation;
pub mod polar;

pub use error::{KinematicsError, Result};
pub use fields::{FieldSample, VelocityField};
pub use integrate::{DeformationHistory, TimeGrid, Trajectory};
pub use linalg::{AxisAngle, Dim, Mat, Vector};
