//! Dense complex linear algebra, multipartite bookkeeping and random states.

mod eig;
pub mod io;
mod matrix;
mod random;
mod state;

pub use eig::{eig_hermitian, singular_values, sqrt_psd, svd, trace_norm, Eigen};
pub use matrix::ComplexMatrix;
pub use random::{ginibre, random_density, random_spectrum, random_unitary};
pub use state::{
    partial_trace, purify, support_projector, tensor, tensor_with_max, top_projector, DensityOperator,
    MultipartiteState, PureState, SupportProjector, TraceClass, DEFAULT_HERM_TOL, DEFAULT_MAX_DIM, DEFAULT_RANK_TOL,
};

pub use num_complex::Complex64;
