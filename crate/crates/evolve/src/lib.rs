//! Discrete evolutionary equations for linear boundary control systems.
//!
//! The crate builds staggered gradient/divergence pairs with an exact
//! summation-by-parts identity, computes their boundary data spaces, assembles
//! control systems of the form `(d/dt M0 + M1 + A) x = J f` and integrates them
//! with causal one-step schemes whose energy balances hold as exact discrete
//! identities.

pub mod bdspace;
pub mod control_system;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod models;
pub mod spatial_complex;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
