use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, DensityOperator, MultipartiteState};
use crate::error::{Error, Result};

/// Ginibre-induced random state `G G^dag / Tr(G G^dag)` with `G` of size `dim × rank`.
///
/// Entries of `G` are independent standard complex Gaussians drawn from a
/// ChaCha20 stream keyed by `seed`, so the output is a pure function of
/// `(dims, rank, seed)`.
pub fn random_density(dims: &[usize], rank: usize, seed: u64) -> Result<MultipartiteState> {
    let dim: usize = dims.iter().product();
    if rank == 0 || rank > dim {
        return Err(Error::OutOfRange(format!("rank {rank} must lie in 1..={dim}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, dim, rank);
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    let m = ComplexMatrix::new(gg.map(|z| z / tr))?;
    MultipartiteState::new(DensityOperator::from_matrix(m)?, dims.to_vec())
}

/// Matrix of independent standard complex Gaussians (unit variance overall).
pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, dim, dim);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for k in 0..dim {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for x in q.column_mut(k).iter_mut() {
                *x *= phase;
            }
        }
    }
    ComplexMatrix::from_inner_unchecked(q)
}

/// Random probability vector of length `d`: eigenvalues of a Ginibre-induced state.
pub fn random_spectrum(d: usize, seed: u64) -> Vec<f64> {
    let s = random_density(&[d], d, seed).expect("valid rank");
    s.state().eigenvalues().into_iter().map(|x| x.max(0.0)).collect()
}
