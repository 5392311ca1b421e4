use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Eigenvalues (non-increasing) with unit eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.inner().column(k).iter().copied().collect()
    }

    /// `V f(Λ) V^dag`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.vectors.inner();
        let n = self.dim();
        let mut scaled = v.clone();
        for k in 0..n {
            let fk = f(self.values[k]);
            scaled.column_mut(k).scale_mut(fk);
        }
        ComplexMatrix::from_inner_unchecked(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Hermitian eigendecomposition of `(M + M^dag)/2`.
///
/// Eigenvalues come back non-increasing. Each eigenvector is phase-fixed so its
/// first dominant component is real and positive; numerically tied eigenvalues
/// are ordered by the position of their eigenvectors' leading component.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let h = m.hermitize().into_inner();
    let se = SymmetricEigen::new(h);
    let mut cols: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<Complex64> = se.eigenvectors.column(k).iter().copied().collect();
            fix_phase(&mut v);
            (se.eigenvalues[k], v)
        })
        .collect();
    let scale = cols.iter().fold(1.0_f64, |a, (x, _)| a.max(x.abs()));
    let tie = 1e-12 * scale;
    cols.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= tie {
            lead_key(&a.1).cmp(&lead_key(&b.1))
        } else {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal)
        }
    });
    let values = cols.iter().map(|c| c.0).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| cols[k].1[i]);
    Ok(Eigen {
        values,
        vectors: ComplexMatrix::from_inner_unchecked(vectors),
    })
}

fn dominant_index(v: &[Complex64]) -> usize {
    let max = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0)
}

fn fix_phase(v: &mut [Complex64]) {
    let k = dominant_index(v);
    let z = v[k];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

// (first significant component, larger magnitude first)
fn lead_key(v: &[Complex64]) -> (usize, i64) {
    let k = v.iter().position(|z| z.norm() > 1e-8).unwrap_or(v.len());
    let mag = v.get(k).map(|z| z.norm()).unwrap_or(0.0);
    (k, -(mag * 1e9) as i64)
}

/// Square root of a PSD matrix; tolerance-level negative eigenvalues are clamped to zero.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.reconstruct_with(|x| x.max(0.0).sqrt()))
}

/// Singular values, non-increasing.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return vec![];
    }
    jacobi_svd(m.inner()).1
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// SVD `M = U diag(s) V^dag` with `s` non-increasing, returned as `(U, s, V)`.
///
/// For square input both factors are unitary.
pub fn svd(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let (u, s, v) = if m.rows() >= m.cols() {
        jacobi_svd(m.inner())
    } else {
        let (v, s, u) = jacobi_svd(&m.inner().adjoint());
        (u, s, v)
    };
    (
        ComplexMatrix::from_inner_unchecked(u),
        s,
        ComplexMatrix::from_inner_unchecked(v),
    )
}

const JACOBI_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi for `rows >= cols`. `U` is `rows x cols` with
/// orthonormal columns; columns for zero singular values are completed by Gram-Schmidt.
fn jacobi_svd(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dotc(&a.column(j));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, i)];
                        let y = mat[(r, j)] * phase.conj();
                        mat[(r, i)] = x * c - y * s;
                        mat[(r, j)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = (0..n).map(|k| (a.column(k).norm(), k)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1)));
    let s: Vec<f64> = order.iter().map(|o| o.0).collect();
    let floor = s.first().copied().unwrap_or(0.0) * (rows.max(n) as f64) * f64::EPSILON;
    let mut u = DMatrix::<Complex64>::zeros(rows, n);
    let mut vs = DMatrix::<Complex64>::zeros(n, n);
    let mut filled = 0;
    for (k, &(sk, src)) in order.iter().enumerate() {
        vs.set_column(k, &v.column(src));
        if sk > floor {
            u.set_column(k, &(a.column(src) / Complex64::new(sk, 0.0)));
            filled = k + 1;
        }
    }
    complete_columns(&mut u, filled);
    (u, s, vs)
}

/// Fills columns `from..` with unit vectors orthogonal to all earlier ones.
fn complete_columns(u: &mut DMatrix<Complex64>, from: usize) {
    let (rows, cols) = u.shape();
    let mut k = from;
    let mut e = 0;
    while k < cols && e < rows {
        let mut w = nalgebra::DVector::<Complex64>::zeros(rows);
        w[e] = Complex64::new(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for p in 0..k {
                let proj = u.column(p).dotc(&w);
                w -= u.column(p) * proj;
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            u.set_column(k, &(w / Complex64::new(norm, 0.0)));
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eig_hermitian(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(e.values.len(), 3);
        for v in &e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        // tie-break yields the standard basis in order
        for k in 0..3 {
            assert!((e.vectors.get(k, k).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_sorted_descending() {
        let e = eig_hermitian(&ComplexMatrix::from_diagonal(&[0.2, 0.8])).unwrap();
        assert!((e.values[0] - 0.8).abs() < 1e-15);
        assert!((e.values[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn pauli_x_closed_form() {
        let x = ComplexMatrix::from_row_major(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let e = eig_hermitian(&x).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        assert!((v0[0] - c(s, 0.)).norm() < 1e-12 && (v0[1] - c(s, 0.)).norm() < 1e-12);
        let v1 = e.vector(1);
        // (|0> - |1>)/sqrt2 up to the phase convention
        assert!((v1[0].norm() - s).abs() < 1e-12);
        assert!((v1[0] + v1[1]).norm() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            eig_hermitian(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn trace_norm_of_pauli_y() {
        let y = ComplexMatrix::from_row_major(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap();
        assert!((trace_norm(&y) - 2.0).abs() < 1e-14);
    }

    fn recompose(u: &ComplexMatrix, s: &[f64], v: &ComplexMatrix) -> ComplexMatrix {
        &(u * &ComplexMatrix::from_diagonal(s)) * &v.adjoint()
    }

    #[test]
    fn svd_of_nearly_rank_one_product() {
        // √ρ√σ for two pure states: one singular value |⟨a|b⟩|, the rest round-off
        let a = [c(0.6, 0.1), c(-0.2, 0.3), c(0.5, -0.4), c(0.1, 0.25)];
        let b = [c(0.1, -0.5), c(0.7, 0.0), c(-0.3, 0.2), c(0.2, 0.3)];
        let unit = |v: &[Complex64]| {
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter().map(|z| z / n).collect::<Vec<_>>()
        };
        let (a, b) = (unit(&a), unit(&b));
        let pa = sqrt_psd(&ComplexMatrix::outer(&a, &a)).unwrap();
        let pb = sqrt_psd(&ComplexMatrix::outer(&b, &b)).unwrap();
        let m = &pa * &pb;
        let (u, s, v) = svd(&m);
        let overlap = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm();
        assert!((s[0] - overlap).abs() < 1e-12);
        assert!(s[1..].iter().all(|&x| x < 1e-12));
        assert!(recompose(&u, &s, &v).max_abs_diff(&m) < 1e-12);
        for w in [&u, &v] {
            assert!((&w.adjoint() * w).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        }
    }

    #[test]
    fn svd_wide_and_tall() {
        let m = ComplexMatrix::from_row_major(
            2,
            3,
            &[c(1., 0.), c(0., 2.), c(-1., 1.), c(0.5, 0.), c(3., -1.), c(0., 0.)],
        )
        .unwrap();
        let (u, s, v) = svd(&m);
        assert_eq!((u.rows(), u.cols(), v.rows(), v.cols()), (2, 2, 3, 2));
        assert!(s[0] >= s[1]);
        assert!(recompose(&u, &s, &v).max_abs_diff(&m) < 1e-12);
        let (u2, s2, v2) = svd(&m.adjoint());
        assert!(s.iter().zip(&s2).all(|(x, y)| (x - y).abs() < 1e-12));
        assert!(recompose(&u2, &s2, &v2).max_abs_diff(&m.adjoint()) < 1e-12);
    }
}
