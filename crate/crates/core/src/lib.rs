//! Finite-dimensional smooth entropy numerics.
//!
//! The crate computes von Neumann, Rényi, 0th-order and min-entropies, solves the
//! conditional min-entropy as a small semidefinite program, builds explicit
//! ε-smoothed states by eigenvalue truncation, evaluates smoothed entropies of
//! i.i.d. tensor powers through their type-class spectra, and ships a harness
//! that checks the data processing inequality and related bounds on random
//! states. All logarithms are base 2.

pub mod entropy;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod sdp;
pub mod smoothing;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityOperator, MultipartiteState, PureState};
