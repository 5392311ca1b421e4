//! Fidelity, generalized fidelity, purified distance and trace distance.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, sqrt_psd, svd, trace_norm, ComplexMatrix, DensityOperator, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Fidelity,
    GeneralizedFidelity,
    PurifiedDistance,
    TraceDistance,
}

/// A distance or fidelity in `[0, 1]`; `raw` keeps the unclamped value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceValue {
    pub kind: DistanceKind,
    pub value: f64,
    pub raw: f64,
}

impl DistanceValue {
    fn new(kind: DistanceKind, raw: f64) -> Self {
        Self {
            kind,
            value: raw.clamp(0.0, 1.0),
            raw,
        }
    }
}

fn same_dim(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operands have dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// `F(ρ, σ) = ‖√ρ √σ‖₁`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DistanceValue> {
    same_dim(rho, sigma)?;
    let raw = raw_fidelity(rho.matrix(), sigma.matrix())?;
    Ok(DistanceValue::new(DistanceKind::Fidelity, raw))
}

fn raw_fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let a = sqrt_psd(rho)?;
    let b = sqrt_psd(sigma)?;
    Ok(trace_norm(&(&a * &b)))
}

/// `ρ ⊕ (1 − Tr ρ)`.
pub fn pad_with_deficit(rho: &DensityOperator) -> ComplexMatrix {
    let d = rho.dim();
    let m = rho.matrix().inner();
    let deficit = (1.0 - rho.trace()).max(0.0);
    let padded = DMatrix::from_fn(d + 1, d + 1, |i, j| {
        if i < d && j < d {
            m[(i, j)]
        } else if i == d && j == d {
            Complex64::new(deficit, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    ComplexMatrix::new(padded).expect("finite entries")
}

/// Fidelity of the trace-padded extensions; equals [`fidelity`] when either input is normalized.
pub fn generalized_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DistanceValue> {
    same_dim(rho, sigma)?;
    let raw = raw_fidelity(&pad_with_deficit(rho), &pad_with_deficit(sigma))?;
    Ok(DistanceValue::new(DistanceKind::GeneralizedFidelity, raw))
}

/// `P(ρ, σ) = √(1 − F̄(ρ, σ)²)`.
pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DistanceValue> {
    let f = generalized_fidelity(rho, sigma)?.value;
    let raw = (1.0 - f * f).max(0.0).sqrt();
    Ok(DistanceValue::new(DistanceKind::PurifiedDistance, raw))
}

/// Purified distance between two (sub)normalized vectors.
pub fn purified_distance_pure(a: &PureState, b: &PureState) -> DistanceValue {
    let na = a.norm().powi(2);
    let nb = b.norm().powi(2);
    let f = a.inner(b).norm() + ((1.0 - na).max(0.0) * (1.0 - nb).max(0.0)).sqrt();
    let f = f.min(1.0);
    DistanceValue::new(DistanceKind::PurifiedDistance, (1.0 - f * f).max(0.0).sqrt())
}

/// `D(ρ, σ) = ½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DistanceValue> {
    same_dim(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let e = eig_hermitian(&diff)?;
    let raw = 0.5 * e.values.iter().map(|x| x.abs()).sum::<f64>();
    Ok(DistanceValue::new(DistanceKind::TraceDistance, raw))
}

/// Purifications `(|ψ⟩ of σ, |φ⟩ of ρ)` on `H ⊗ H` whose overlap equals `F(ρ, σ)`.
///
/// `|φ⟩ = vec(√ρ)` and `|ψ⟩ = vec(√σ U)`, where `U` is the unitary factor of the
/// polar decomposition that makes `Tr(√ρ √σ U)` real and maximal.
pub fn uhlmann_pair(rho: &DensityOperator, sigma: &DensityOperator) -> Result<(PureState, PureState)> {
    same_dim(rho, sigma)?;
    let d = rho.dim();
    let sr = sqrt_psd(rho.matrix())?;
    let ss = sqrt_psd(sigma.matrix())?;
    let (p, _, q) = svd(&(&sr * &ss));
    let u = &q * &p.adjoint();
    let su = &ss * &u;
    let phi = PureState::new(sr.to_row_major(), vec![d, d])?;
    let psi = PureState::new(su.to_row_major(), vec![d, d])?;
    Ok((psi, phi))
}

/// `σ̃ = Σᵢ sᵢ |i⟩⟨i|`: σ's non-increasing spectrum placed on ρ's sorted eigenvectors.
pub fn reorder_to_eigenbasis(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DensityOperator> {
    same_dim(rho, sigma)?;
    let er = rho.eigen();
    let s = sigma.eigenvalues();
    let v = er.vectors.inner();
    let mut out = DMatrix::<Complex64>::zeros(rho.dim(), rho.dim());
    for (k, &sk) in s.iter().enumerate() {
        let col = v.column(k);
        out += (col * col.adjoint()) * Complex64::new(sk.max(0.0), 0.0);
    }
    DensityOperator::new(ComplexMatrix::new(out)?, sigma.herm_tol().max(1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn d(v: &[f64]) -> DensityOperator {
        DensityOperator::from_diagonal(v).unwrap()
    }

    fn plus() -> DensityOperator {
        let c = Complex64::new(S, 0.0);
        DensityOperator::pure(&[c, c]).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let r = random_density(&[3], 3, 1).unwrap().into_state();
        assert!((fidelity(&r, &r).unwrap().value - 1.0).abs() < 1e-10);
        assert!(fidelity(&d(&[1., 0.]), &d(&[0., 1.])).unwrap().value.abs() < 1e-12);
        assert!((fidelity(&d(&[1., 0.]), &d(&[0.5, 0.5])).unwrap().value - S).abs() < 1e-12);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        assert!(matches!(
            fidelity(&d(&[1.0]), &d(&[0.5, 0.5])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn generalized_fidelity_examples() {
        let a = random_density(&[2], 2, 3).unwrap().into_state();
        let b = random_density(&[2], 2, 4).unwrap().into_state();
        let f = fidelity(&a, &b).unwrap().value;
        let g = generalized_fidelity(&a, &b).unwrap().value;
        assert!((f - g).abs() < 1e-10);

        let h0 = d(&[0.5, 0.]);
        assert!((generalized_fidelity(&h0, &h0).unwrap().value - 1.0).abs() < 1e-12);

        // padded 3x3 by hand: diag(0.5,0,0.5) vs diag(0,0.5,0.5) -> sqrt(0.25) = 0.5
        let g = generalized_fidelity(&d(&[0.5, 0.]), &d(&[0., 0.5])).unwrap().value;
        assert!((g - 0.5).abs() < 1e-12);
        let by_hand = raw_fidelity(
            &ComplexMatrix::from_diagonal(&[0.5, 0., 0.5]),
            &ComplexMatrix::from_diagonal(&[0., 0.5, 0.5]),
        )
        .unwrap();
        assert!((g - by_hand).abs() < 1e-14);
    }

    #[test]
    fn purified_and_trace_distance_examples() {
        let r = d(&[0.3, 0.7]);
        assert!(purified_distance(&r, &r).unwrap().value < 1e-7);
        assert!((purified_distance(&d(&[1., 0.]), &d(&[0., 1.])).unwrap().value - 1.0).abs() < 1e-12);
        assert!((purified_distance(&d(&[1., 0.]), &d(&[0.5, 0.5])).unwrap().value - S).abs() < 1e-12);

        assert!(trace_distance(&r, &r).unwrap().value < 1e-15);
        assert!((trace_distance(&d(&[1., 0.]), &d(&[0., 1.])).unwrap().value - 1.0).abs() < 1e-14);
        assert!((trace_distance(&d(&[0.7, 0.3]), &d(&[0.5, 0.5])).unwrap().value - 0.2).abs() < 1e-14);
    }

    #[test]
    fn uhlmann_examples() {
        let r = random_density(&[2], 2, 10).unwrap().into_state();
        let (psi, phi) = uhlmann_pair(&r, &r).unwrap();
        assert!((psi.inner(&phi).norm() - 1.0).abs() < 1e-10);

        let (psi, phi) = uhlmann_pair(&d(&[1., 0.]), &d(&[0., 1.])).unwrap();
        assert!(psi.inner(&phi).norm() < 1e-12);

        let a = random_density(&[2], 2, 11).unwrap().into_state();
        let b = random_density(&[2], 2, 12).unwrap().into_state();
        let (psi, phi) = uhlmann_pair(&a, &b).unwrap();
        let f = fidelity(&a, &b).unwrap().value;
        assert!((psi.inner(&phi).norm() - f).abs() < 1e-8);
        let back_b = psi.to_density().unwrap().partial_trace(&[0]).unwrap();
        let back_a = phi.to_density().unwrap().partial_trace(&[0]).unwrap();
        assert!(back_b.state().matrix().max_abs_diff(b.matrix()) < 1e-9);
        assert!(back_a.state().matrix().max_abs_diff(a.matrix()) < 1e-9);
    }

    #[test]
    fn reorder_examples() {
        let r = d(&[0.7, 0.3]);
        let s = d(&[0.6, 0.4]);
        let t = reorder_to_eigenbasis(&r, &s).unwrap();
        assert!(t.matrix().max_abs_diff(s.matrix()) < 1e-14);

        let k0 = d(&[1., 0.]);
        let t = reorder_to_eigenbasis(&k0, &plus()).unwrap();
        assert!(t.matrix().max_abs_diff(k0.matrix()) < 1e-12);
        assert!((purified_distance(&k0, &plus()).unwrap().value - S).abs() < 1e-12);
        assert!(purified_distance(&k0, &t).unwrap().value < 1e-7);
    }

    #[test]
    fn commuting_fidelity_matches_classical_formula() {
        let p = [0.5, 0.3, 0.2];
        let q = [0.1, 0.6, 0.3];
        let f = fidelity(&d(&p), &d(&q)).unwrap().value;
        let classical: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
        assert!((f - classical).abs() < 1e-10);
    }
}
