//! Simulation and verification toolkit for transport bounds in dissipative bosonic lattices.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod fock;
pub mod lattice;
pub mod lindblad;
pub mod ot;
pub mod sparse;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
