//! Unsmoothed entropy functionals. All logarithms are base 2.

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, support_projector, ComplexMatrix, DensityOperator, MultipartiteState, DEFAULT_RANK_TOL,
};

/// Eigenvalues below this are exact zeros inside every logarithm.
pub const ZERO_EIGENVALUE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Vn,
    CondVn,
    Relative,
    RenyiAlpha(f64),
    H0,
    Hmin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub measure: Measure,
    /// Bits.
    pub value: f64,
}

impl EntropyValue {
    fn new(measure: Measure, value: f64) -> Self {
        Self { measure, value }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.measure {
            Measure::RenyiAlpha(a) => Some(a),
            _ => None,
        }
    }
}

fn positive(values: &[f64]) -> impl Iterator<Item = f64> + '_ {
    values.iter().copied().filter(|&x| x > ZERO_EIGENVALUE)
}

/// `−Σ λ log λ` over a list of eigenvalues.
pub fn shannon(values: &[f64]) -> f64 {
    -positive(values).map(|x| x * x.log2()).sum::<f64>()
}

/// `H(ρ) = −Tr ρ log ρ`.
pub fn von_neumann(rho: &DensityOperator) -> EntropyValue {
    EntropyValue::new(Measure::Vn, shannon(&rho.eigenvalues()))
}

fn check_cond(rho: &MultipartiteState, cond_on: &[usize]) -> Result<()> {
    let n = rho.num_subsystems();
    if let Some(&bad) = cond_on.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidSubsystems(format!(
            "subsystem {bad} out of range for {n} subsystems"
        )));
    }
    let mut sorted = cond_on.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != cond_on.len() {
        return Err(Error::InvalidSubsystems("repeated subsystem index".into()));
    }
    if sorted.len() == n {
        return Err(Error::InvalidSubsystems(
            "conditioning system cannot be the whole system".into(),
        ));
    }
    Ok(())
}

/// `H(A|B) = H(AB) − H(B)`, where `B = cond_on` and `A` is every other subsystem.
pub fn conditional_vn(rho: &MultipartiteState, cond_on: &[usize]) -> Result<EntropyValue> {
    check_cond(rho, cond_on)?;
    let hab = von_neumann(rho.state()).value;
    let hb = if cond_on.is_empty() {
        0.0
    } else {
        von_neumann(rho.partial_trace(cond_on)?.state()).value
    };
    Ok(EntropyValue::new(Measure::CondVn, hab - hb))
}

/// `(1/Tr ρ̃) max_σ Tr(ρ̃ (log(1 ⊗ σ_B) − log ρ̃))` with `σ_B` normalized.
///
/// Writing `ρ̃ = t τ`, the maximum is attained at `σ_B = τ_B` and the value is
/// `H(A|B)_τ − log t`.
pub fn conditional_vn_subnormalized(rho: &MultipartiteState, cond_on: &[usize]) -> Result<EntropyValue> {
    check_cond(rho, cond_on)?;
    let t = rho.state().trace();
    if t <= ZERO_EIGENVALUE {
        return Err(Error::ZeroOperator);
    }
    let tau = MultipartiteState::new(rho.state().normalized()?, rho.dims().to_vec())?;
    let h = conditional_vn(&tau, cond_on)?.value;
    Ok(EntropyValue::new(Measure::CondVn, h - t.log2()))
}

/// `Tr ρ log ρ − Tr ρ log σ`, evaluated in σ's eigenbasis.
///
/// Returns `+∞` when ρ has weight outside the support of σ.
pub fn relative_entropy(rho: &DensityOperator, sigma: &ComplexMatrix) -> Result<f64> {
    if sigma.rows() != rho.dim() || !sigma.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "rho is {0}x{0}, sigma is {1}x{2}",
            rho.dim(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    let es = eig_hermitian(sigma)?;
    let scale = es.values.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let cut = (DEFAULT_RANK_TOL * scale).max(ZERO_EIGENVALUE);
    let r = rho.matrix().inner();
    let mut cross = 0.0;
    for (k, &mu) in es.values.iter().enumerate() {
        let v = es.vectors.inner().column(k);
        let w = (v.adjoint() * r * v)[(0, 0)].re;
        if mu <= cut {
            if w > DEFAULT_RANK_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += w * mu.log2();
    }
    let self_term = -shannon(&rho.eigenvalues());
    Ok(self_term - cross)
}

/// `H_α(ρ) = log(Tr ρ^α) / (1 − α)`.
pub fn renyi_alpha(rho: &DensityOperator, alpha: f64) -> Result<EntropyValue> {
    Ok(EntropyValue::new(
        Measure::RenyiAlpha(alpha),
        renyi_of_spectrum(&rho.eigenvalues(), alpha)?,
    ))
}

/// Rényi entropy of a list of eigenvalues.
pub fn renyi_of_spectrum(values: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Err(Error::OutOfRange("alpha = 1 is the von Neumann entropy".into()));
    }
    let max = positive(values).fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Err(Error::ZeroOperator);
    }
    // factor out the largest eigenvalue so large alpha does not underflow
    let s: f64 = positive(values).map(|x| (x / max).powf(alpha)).sum();
    Ok((s.log2() + alpha * max.log2()) / (1.0 - alpha))
}

/// `H₀(ρ) = log rank ρ`.
pub fn h0(rho: &DensityOperator) -> Result<EntropyValue> {
    let sp = support_projector(rho, DEFAULT_RANK_TOL);
    if sp.zero_operator {
        return Err(Error::ZeroOperator);
    }
    Ok(EntropyValue::new(Measure::H0, (sp.rank as f64).log2()))
}

/// `H_min(ρ) = −log ‖ρ‖_∞`.
pub fn hmin(rho: &DensityOperator) -> Result<EntropyValue> {
    let max = rho.eigenvalues().into_iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if max <= ZERO_EIGENVALUE {
        return Err(Error::ZeroOperator);
    }
    Ok(EntropyValue::new(Measure::Hmin, -max.log2()))
}

/// `η(x) = −x log x`, with `η(0) = 0`.
pub fn eta(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("eta needs x in [0, 1], got {x}")));
    }
    Ok(if x == 0.0 { 0.0 } else { -x * x.log2() })
}

/// `Σ |λ↓ᵢ − μ↓ᵢ|` for two spectra padded with zeros to equal length.
pub fn sorted_l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let n = a.len().max(b.len());
    a.resize(n, 0.0);
    b.resize(n, 0.0);
    a.sort_by(|x, y| y.total_cmp(x));
    b.sort_by(|x, y| y.total_cmp(x));
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum()
}

/// Fannes continuity bound `t log d + η(t)`, valid for `t ≤ 1/e`, where `t` is an
/// ℓ₁ distance between the ordered spectra (at most `‖ρ − σ‖₁`).
pub fn fannes_bound(t: f64, d: usize) -> Result<f64> {
    if !(0.0..=(-1.0_f64).exp()).contains(&t) {
        return Err(Error::OutOfRange(format!("Fannes bound needs t in [0, 1/e], got {t}")));
    }
    Ok(t * (d as f64).log2() + eta(t)?)
}
