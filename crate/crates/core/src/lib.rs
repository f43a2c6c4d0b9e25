//! DC optimal power flow, monotonicity analysis of the OPF operator, and a
//! Laplace mechanism for releasing regional generation and load totals.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod monotonicity;
pub mod network;
pub mod opf;
pub mod privacy;

pub use error::{Error, Result};
