//! Primal-dual interior-point solver for
//!
//! ```text
//! minimize  Tr σ          subject to  S = 1_A ⊗ σ − ρ ⪰ 0
//! maximize  Tr(ρ X)       subject to  Tr_A X = 1_B,  X ⪰ 0
//! ```
//!
//! σ is parametrized by its coordinates in an orthonormal Hermitian basis of the
//! `d_B × d_B` matrices, so the σ problem stays exactly feasible along the path.
//! Search directions are the HKM ones with a Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator};

/// Cap on `d_B`: the Newton system has `d_B²` unknowns.
pub const MAX_DIM_B: usize = 64;

type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    rho: ComplexMatrix,
    d_a: usize,
    d_b: usize,
}

impl SdpProblem {
    pub fn new(rho: &DensityOperator, d_a: usize, d_b: usize) -> Result<Self> {
        if d_a == 0 || d_b == 0 || d_a * d_b != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "d_A = {d_a}, d_B = {d_b} do not factor dimension {}",
                rho.dim()
            )));
        }
        if d_b > MAX_DIM_B {
            return Err(Error::DimensionTooLarge {
                dim: d_b,
                max: MAX_DIM_B,
            });
        }
        Ok(Self {
            rho: rho.matrix().clone(),
            d_a,
            d_b,
        })
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    InfeasibleNumerics,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// `Tr σ` at the returned iterate; `H_min = −log₂` of it.
    pub optimal_value: f64,
    /// Unnormalized σ_B; `1_A ⊗ σ_B − ρ` is positive definite along the whole path.
    pub sigma_b: ComplexMatrix,
    /// `X` with `Tr_A X ≈ 1_B`; `Tr(ρ X)` lower-bounds the optimum.
    pub dual_certificate: ComplexMatrix,
    /// `Tr(ρ X)`.
    pub dual_value: f64,
    /// Relative duality gap `(Tr σ − Tr ρX) / Tr σ`.
    pub gap: f64,
    /// `max |Tr_A X − 1_B|`.
    pub residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

/// Orthonormal Hermitian basis of `d × d` matrices under `⟨E, F⟩ = Tr(E F)`.
struct HermBasis {
    d: usize,
    // (k, l, kind): 0 diagonal, 1 symmetric, 2 antisymmetric
    elems: Vec<(usize, usize, u8)>,
}

impl HermBasis {
    fn new(d: usize) -> Self {
        let mut elems: Vec<(usize, usize, u8)> = (0..d).map(|k| (k, k, 0)).collect();
        for k in 0..d {
            for l in k + 1..d {
                elems.push((k, l, 1));
                elems.push((k, l, 2));
            }
        }
        Self { d, elems }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    fn element(&self, i: usize) -> CMat {
        let (k, l, kind) = self.elems[i];
        let mut m = CMat::zeros(self.d, self.d);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match kind {
            0 => m[(k, k)] = c(1.0),
            1 => {
                m[(k, l)] = c(s);
                m[(l, k)] = c(s);
            }
            _ => {
                m[(k, l)] = Complex64::new(0.0, -s);
                m[(l, k)] = Complex64::new(0.0, s);
            }
        }
        m
    }

    /// `Re Tr(E_i Q)` for every basis element.
    fn coords(&self, q: &CMat) -> DVector<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DVector::from_iterator(
            self.len(),
            self.elems.iter().map(|&(k, l, kind)| match kind {
                0 => q[(k, k)].re,
                1 => (q[(l, k)].re + q[(k, l)].re) * s,
                _ => (q[(l, k)].im - q[(k, l)].im) * s,
            }),
        )
    }

    fn matrix(&self, y: &DVector<f64>) -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = CMat::zeros(self.d, self.d);
        for (&(k, l, kind), &v) in self.elems.iter().zip(y.iter()) {
            match kind {
                0 => m[(k, k)] += c(v),
                1 => {
                    m[(k, l)] += c(v * s);
                    m[(l, k)] += c(v * s);
                }
                _ => {
                    m[(k, l)] += Complex64::new(0.0, -v * s);
                    m[(l, k)] += Complex64::new(0.0, v * s);
                }
            }
        }
        m
    }
}

fn lift(d_a: usize, sigma: &CMat) -> CMat {
    CMat::identity(d_a, d_a).kronecker(sigma)
}

fn trace_a(d_a: usize, d_b: usize, p: &CMat) -> CMat {
    let mut out = CMat::zeros(d_b, d_b);
    for a in 0..d_a {
        out += p.view((a * d_b, a * d_b), (d_b, d_b));
    }
    out
}

fn herm(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// Largest `α ≤ 1` (scaled by `frac`) keeping `Z + α ΔZ` positive definite.
fn step_length(z: &CMat, dz: &CMat, frac: f64) -> Option<f64> {
    let l = Cholesky::new(z.clone())?.l();
    let t = l.solve_lower_triangular(dz)?;
    let w = l.solve_lower_triangular(&t.adjoint())?;
    let lmin = herm(&w)
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &x| a.min(x));
    if !lmin.is_finite() {
        return None;
    }
    Some(if lmin >= 0.0 { 1.0 } else { (frac / -lmin).min(1.0) })
}

struct Newton<'a> {
    basis: &'a HermBasis,
    d_a: usize,
    d_b: usize,
    x: &'a CMat,
    s_inv: &'a CMat,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl Newton<'_> {
    /// Direction for the complementarity target `X S + ... = X S + rc`, i.e. solves
    /// `ΔX = sym((Rc − X ΔS) S⁻¹)`, `Tr_A ΔX = rp`.
    fn solve(&self, rc: &CMat, rp: &DVector<f64>) -> Option<(DVector<f64>, CMat, CMat)> {
        let rcs = rc * self.s_inv;
        let rhs = self.basis.coords(&trace_a(self.d_a, self.d_b, &rcs)) - rp;
        let dy = self.chol.solve(&rhs);
        if dy.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let ds = lift(self.d_a, &self.basis.matrix(&dy));
        let dx = herm(&((rc - self.x * &ds) * self.s_inv));
        Some((dy, ds, dx))
    }
}

/// Solves the conditional min-entropy SDP.
pub fn sdp_solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::OutOfRange(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let (d_a, d_b) = (p.d_a, p.d_b);
    let n = d_a * d_b;
    let rho = p.rho.inner();
    let basis = HermBasis::new(d_b);
    let m = basis.len();
    let b = basis.coords(&CMat::identity(d_b, d_b));

    let norm = rho
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |a, &x| a.max(x.abs()));
    if norm == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let mut y = &b * ((d_a as f64 + 1.0) * norm);
    let mut x = CMat::identity(n, n) * c(1.0 / d_a as f64);

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let summarize = |x: &CMat, y: &DVector<f64>| {
        let sigma = basis.matrix(y);
        let primal = sigma.trace().re;
        let dual = re_trace_product(rho, x);
        let rp = &b - basis.coords(&trace_a(d_a, d_b, x));
        let residual = rp.amax();
        (sigma, primal, dual, rp, residual)
    };

    for it in 0..=opts.max_iter {
        iterations = it;
        let (sigma, primal, dual, rp, residual) = summarize(&x, &y);
        let gap = (primal - dual) / primal.abs().max(f64::MIN_POSITIVE);
        if gap.abs() <= opts.tol && residual <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        let s = lift(d_a, &sigma) - rho;
        let Some(s_chol) = Cholesky::new(s.clone()) else {
            status = SdpStatus::InfeasibleNumerics;
            break;
        };
        let s_inv = s_chol.inverse();

        let mut mm = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let aj = lift(d_a, &basis.element(j));
            let q = trace_a(d_a, d_b, &(&x * aj * &s_inv));
            mm.set_column(j, &basis.coords(&q));
        }
        let mm = (&mm + mm.transpose()) * 0.5;
        let Some(chol) = Cholesky::new(mm) else {
            status = SdpStatus::InfeasibleNumerics;
            break;
        };
        let newton = Newton {
            basis: &basis,
            d_a,
            d_b,
            x: &x,
            s_inv: &s_inv,
            chol,
        };

        let xs = &x * &s;
        let mu = re_trace_product(&x, &s) / n as f64;

        // predictor
        let Some((_, ds_a, dx_a)) = newton.solve(&(-&xs), &rp) else {
            status = SdpStatus::InfeasibleNumerics;
            break;
        };
        let (Some(ap), Some(ad)) = (step_length(&x, &dx_a, 1.0), step_length(&s, &ds_a, 1.0)) else {
            status = SdpStatus::InfeasibleNumerics;
            break;
        };
        let mu_aff = re_trace_product(&(&x + &dx_a * c(ap)), &(&s + &ds_a * c(ad))) / n as f64;
        let centering = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc = CMat::identity(n, n) * c(centering * mu) - &xs - &dx_a * &ds_a;
        let Some((dy, ds, dx)) = newton.solve(&rc, &rp) else {
            status = SdpStatus::InfeasibleNumerics;
            break;
        };
        let (Some(ap), Some(ad)) = (step_length(&x, &dx, 0.98), step_length(&s, &ds, 0.98)) else {
            status = SdpStatus::InfeasibleNumerics;
            break;
        };
        x = herm(&(&x + &dx * c(ap)));
        y += &dy * ad;
    }

    let (sigma, primal, dual, _, residual) = summarize(&x, &y);
    Ok(SdpSolution {
        optimal_value: primal,
        sigma_b: ComplexMatrix::new(sigma)?,
        dual_certificate: ComplexMatrix::new(x)?,
        dual_value: dual,
        gap: (primal - dual) / primal.abs().max(f64::MIN_POSITIVE),
        residual,
        iterations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    #[test]
    fn basis_is_orthonormal_and_coordinates_invert() {
        let basis = HermBasis::new(3);
        assert_eq!(basis.len(), 9);
        for i in 0..9 {
            for j in 0..9 {
                let g = re_trace_product(&basis.element(i), &basis.element(j));
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let h = random_density(&[3], 3, 4).unwrap().into_state();
        let q = h.matrix().inner();
        let back = basis.matrix(&basis.coords(q));
        assert!((back - q).camax() < 1e-14);
    }

    #[test]
    fn one_dimensional_a_returns_trace() {
        let r = random_density(&[3], 2, 7).unwrap().into_state();
        let sol = sdp_solve(&SdpProblem::new(&r, 1, 3).unwrap(), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.optimal_value - r.trace()).abs() < 1e-8);
    }

    #[test]
    fn random_instances_terminate_with_small_gap() {
        for seed in 0..5 {
            let r = random_density(&[2, 2], 4, seed).unwrap().into_state();
            let sol = sdp_solve(&SdpProblem::new(&r, 2, 2).unwrap(), &SdpOptions::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!(sol.gap.abs() <= 1e-8 && sol.residual <= 1e-8, "{sol:?}");
        }
    }

    #[test]
    fn iteration_cap_reports_max_iter() {
        let r = random_density(&[2, 2], 4, 1).unwrap().into_state();
        let sol = sdp_solve(
            &SdpProblem::new(&r, 2, 2).unwrap(),
            &SdpOptions { tol: 1e-9, max_iter: 2 },
        )
        .unwrap();
        assert_eq!(sol.status, SdpStatus::MaxIter);
        assert!(sdp_solve(
            &SdpProblem::new(&r, 2, 2).unwrap(),
            &SdpOptions { tol: 0.0, max_iter: 5 }
        )
        .is_err());
    }
}
