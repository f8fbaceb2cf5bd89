//! Numerical simulation of correlated multiphoton holes: two-mode states
//! built from a coherent state and squeezed vacuum, mixed on a balanced
//! beamsplitter, in which a chosen `(N1, N2)` coincidence amplitude vanishes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlations;
pub mod detection;
pub mod error;
pub mod fock;
pub mod holes;
pub mod optics;

pub use error::{CphError, Result};
