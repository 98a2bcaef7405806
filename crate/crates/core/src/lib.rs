//! Queue-length-violation probability (QVP) analysis for buffer-aware
//! wireless scheduling.
//!
//! Small queue lengths are handled by truncating the queue chain at a
//! threshold α and bracketing its censored stationary law with
//! stochastically monotone kernels; large queue lengths are handled by a
//! piecewise effective-capacity tail. A Monte-Carlo simulator provides the
//! ground truth both are checked against.

pub mod augment;
pub mod cli;
pub mod errbounds;
pub mod error;
pub mod lql;
pub mod matrix;
pub mod models;
pub mod quadrature;
pub mod sim;
pub mod special;
pub mod tolerance;

pub use error::{QvpError, Result};
