//! Loss-function-based weighted orthogonal matching pursuit.
//!
//! Greedy sparse recovery where each iteration picks the column whose
//! one-dimensional update most reduces a regularized loss: weighted LASSO,
//! square-root LASSO or LAD-LASSO, with a weighted `l1` or `l0` penalty.
//! The crate also ships the problem generators and the sweep harness used to
//! study recovery error as a function of the tuning parameter and of the
//! iteration count.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod losses;
pub mod problems;
pub mod selection;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SupportSet};
pub use losses::{LossFamily, LossSpec, Regularizer, Rule, Weights};
