//! Spectral solver for the replicator-mutator equation
//!
//! ```text
//! u_t = σ² u_xx + u (W(x) − ∫ W u)
//! ```
//!
//! with a confining fitness `W`. The Cauchy problem is solved through the
//! eigenpairs of the Schrödinger operator `H = −σ² d²/dx² − W` on a truncated
//! uniform grid; the ground state of `H` governs the long-time trait
//! distribution and therefore evolutionary branching.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and parallel sweeps live in the `replimut` crate.
#![no_std]
// Test builds link std, whose inherent float methods shadow `math::Real`.
#![cfg_attr(test, allow(unused_imports))]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod math;

pub mod branching;
pub mod catalog;
pub mod error;
pub mod evolution;
pub mod fitness;
pub mod gamma;
pub mod grid;
pub mod poly;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
pub use fitness::{Fitness, FitnessPolynomial};
pub use grid::Grid;
pub use poly::Polynomial;
