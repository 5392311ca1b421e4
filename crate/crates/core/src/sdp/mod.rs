//! Conditional min-entropy as a semidefinite program.

mod engine;
mod minentropy;

pub use engine::{sdp_solve, SdpOptions, SdpProblem, SdpSolution, SdpStatus, MAX_DIM_B};
pub use minentropy::{
    bipartition, hmin_conditional, hmin_conditional_with, hmin_smooth_upper_bound, verify_certificate,
    CertificateReport, CERTIFICATE_GAP_TOL, CERTIFICATE_SLACK_TOL,
};
