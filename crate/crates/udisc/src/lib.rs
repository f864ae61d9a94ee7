//! Provably optimal measurements for unambiguous discrimination of mixed
//! quantum states.
//!
//! The crate builds the block semidefinite program whose optimum is the
//! maximal detection probability, solves it with a primal-dual interior-point
//! method, emits machine-checkable dual certificates, short-circuits to
//! closed-form solutions when the signal spaces are orthogonal or the
//! instance is a rank-1 pair, and exploits geometric-uniformity symmetry to
//! shrink the program.

pub mod closed_form;
pub mod ensemble;
pub mod error;
pub mod gen;
pub mod hermitian;
pub mod io;
pub mod sdp;
pub mod sim;
pub mod solver;
pub mod symmetry;

pub use error::{Error, Result};
