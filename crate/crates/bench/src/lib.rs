//! Fixed inputs shared by the benchmarks.

use smoothent_core::linalg::random_density;
use smoothent_core::smoothing::Spectrum;
use smoothent_core::MultipartiteState;

/// Full-rank random state on `dims` with a fixed seed.
pub fn state(dims: &[usize]) -> MultipartiteState {
    let d = dims.iter().product();
    random_density(dims, d, 0xbe9c).expect("valid dims")
}

pub fn qubit_spectrum() -> Spectrum {
    Spectrum::new(&[0.75, 0.25]).expect("normalized")
}

pub fn qutrit_spectrum() -> Spectrum {
    Spectrum::new(&[0.5, 0.3, 0.2]).expect("normalized")
}
