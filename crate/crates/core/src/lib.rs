//! Mixed-precision one-sided Jacobi SVD.
//!
//! The SVD of a dense real matrix is computed in three stages: QR-based
//! preconditioning, an inexpensive SVD in lower precision (binary32), and
//! a one-sided Jacobi refinement in working precision (binary64) that
//! restores full high relative accuracy. A symmetric eigensolver built on the
//! same pieces, a test-matrix generator and accuracy metrics are included.

pub mod eigen;
pub mod error;
pub mod factor;
pub mod io;
pub mod jacobi;
pub mod matrix;
pub mod pipeline;
pub mod precond;
pub mod scalar;
pub mod testmat;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::{Matrix, PlaneRotation};
pub use scalar::{Precision, PrecisionConfig, Real};
