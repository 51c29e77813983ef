//! Permanents, Sinkhorn scaling and scaling means of non-negative matrices,
//! a constructive doubly-stochastic approximation, ergodic matrix
//! environments and Monte-Carlo permanent estimators.

pub mod balance;
pub mod environments;
pub mod error;
pub mod matrix;
pub mod randomized;
pub mod rng;
pub mod scaling;

mod matching;

pub use error::{Error, Result};
pub use matrix::{LogValue, Matrix};
