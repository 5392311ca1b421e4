use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, DensityOperator, MultipartiteState};

use super::engine::{sdp_solve, SdpOptions, SdpProblem, SdpSolution};

/// Groups `rho` as `A ⊗ B` with `B = cond_on` and `A` the remaining subsystems.
///
/// Returns the reordered operator and `(d_A, d_B)`.
pub fn bipartition(rho: &MultipartiteState, cond_on: &[usize]) -> Result<(DensityOperator, usize, usize)> {
    let n = rho.num_subsystems();
    if let Some(&bad) = cond_on.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidSubsystems(format!(
            "subsystem {bad} out of range for {n} subsystems"
        )));
    }
    let a: Vec<usize> = (0..n).filter(|k| !cond_on.contains(k)).collect();
    if a.is_empty() {
        return Err(Error::InvalidSubsystems(
            "conditioning system cannot be the whole system".into(),
        ));
    }
    let order: Vec<usize> = a.iter().chain(cond_on).copied().collect();
    let permuted = rho.permute(&order)?;
    let d_a: usize = a.iter().map(|&k| rho.dims()[k]).product();
    let d_b: usize = cond_on.iter().map(|&k| rho.dims()[k]).product();
    Ok((permuted.into_state(), d_a, d_b))
}

/// `H_min(A|B)` in bits, with `B = cond_on`, together with the solver output.
///
/// Callers should check `witness.status`; anything but optimal means the value is
/// unreliable. The reported value is `−log₂ Tr σ` at a strictly feasible σ, so it
/// never overstates the entropy.
pub fn hmin_conditional(rho: &MultipartiteState, cond_on: &[usize]) -> Result<(f64, SdpSolution)> {
    hmin_conditional_with(rho, cond_on, &SdpOptions::default())
}

pub fn hmin_conditional_with(
    rho: &MultipartiteState,
    cond_on: &[usize],
    opts: &SdpOptions,
) -> Result<(f64, SdpSolution)> {
    let (op, d_a, d_b) = bipartition(rho, cond_on)?;
    let sol = sdp_solve(&SdpProblem::new(&op, d_a, d_b)?, opts)?;
    Ok((-sol.optimal_value.log2(), sol))
}

/// Outcome of replaying a solution against `ρ_AB` (already ordered as `A ⊗ B`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    /// `−log₂` of the claimed optimum.
    pub lambda: f64,
    /// Minimum eigenvalue of `2^{−λ} 1 ⊗ σ_B/Tr σ_B − ρ_AB`.
    pub slack: f64,
    /// Relative gap between the claimed optimum and `Tr(ρ X)`.
    pub gap: f64,
    pub pass: bool,
}

pub const CERTIFICATE_SLACK_TOL: f64 = 1e-7;
pub const CERTIFICATE_GAP_TOL: f64 = 1e-6;

/// Recomputes the operator inequality and the duality gap from scratch.
pub fn verify_certificate(rho_ab: &DensityOperator, d_a: usize, sol: &SdpSolution) -> Result<CertificateReport> {
    let d_b = sol.sigma_b.rows();
    if d_a * d_b != rho_ab.dim() {
        return Err(Error::DimensionMismatch(format!(
            "witness has d_B = {d_b}, state dimension {} with d_A = {d_a}",
            rho_ab.dim()
        )));
    }
    let lambda = -sol.optimal_value.log2();
    let tr = sol.sigma_b.trace().re;
    let sigma = sol.sigma_b.scale(sol.optimal_value / tr);
    let lhs = &ComplexMatrix::identity(d_a).kron(&sigma) - rho_ab.matrix();
    let slack = *eig_hermitian(&lhs)?.values.last().unwrap();
    let dual = rho_ab.matrix().trace_product_re(&sol.dual_certificate);
    let gap = (sol.optimal_value - dual) / sol.optimal_value.abs();
    let pass = slack >= -CERTIFICATE_SLACK_TOL && gap.abs() <= CERTIFICATE_GAP_TOL;
    Ok(CertificateReport {
        lambda,
        slack,
        gap,
        pass,
    })
}

/// Upper bound on `H_min(A|B)` over every ρ' with `P(ρ, ρ') ≤ δ`.
///
/// Any `X ⪰ 0` with `Tr_A X = 1_B` gives `H_min(A|B)_ρ' ≤ −log Tr(ρ' X)`, and
/// `Tr(ρ' X) ≥ Tr(ρ X) − 2δ ‖X‖_∞` on the ball. The certificate's residual is
/// charged against the bound. Returns `+∞` when the right side is not positive.
pub fn hmin_smooth_upper_bound(rho_ab: &DensityOperator, sol: &SdpSolution, delta: f64) -> Result<f64> {
    let x = &sol.dual_certificate;
    let e = eig_hermitian(x)?;
    let xmax = e.values.first().copied().unwrap_or(0.0).max(0.0);
    // rescale so that Tr_A X ≤ 1_B holds exactly
    let scale = 1.0 / (1.0 + sol.residual * sol.sigma_b.rows() as f64);
    let base = rho_ab.matrix().trace_product_re(x) * scale;
    let lower = base - 2.0 * delta * xmax * scale;
    Ok(if lower > 0.0 { -lower.log2() } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::hmin;
    use crate::linalg::{random_density, random_unitary, tensor, Complex64};
    use crate::sdp::SdpStatus;

    fn bell() -> MultipartiteState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        let a = Complex64::new(s, 0.0);
        MultipartiteState::new(DensityOperator::pure(&[a, z, z, a]).unwrap(), vec![2, 2]).unwrap()
    }

    #[test]
    fn maximally_mixed_gives_log_da() {
        let m = MultipartiteState::new(DensityOperator::maximally_mixed(4).unwrap(), vec![2, 2]).unwrap();
        let (v, sol) = hmin_conditional(&m, &[1]).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((v - 1.0).abs() < 1e-7);
        let s = sol.sigma_b.scale(1.0 / sol.sigma_b.trace().re);
        assert!(s.max_abs_diff(&ComplexMatrix::from_diagonal(&[0.5, 0.5])) < 1e-6);
    }

    // brute force: min over Bloch-ball σ of the smallest t with t·1⊗σ ⪰ ρ, i.e.
    // t = λ_max((1⊗σ)^{-1/2} ρ (1⊗σ)^{-1/2}); a coarse grid followed by local grids
    // shrinking around the best point down to a spacing below 1e-3
    fn bloch_oracle(rho: &DensityOperator) -> f64 {
        let eval = |x: f64, y: f64, z: f64| {
            if x * x + y * y + z * z >= 0.999 {
                return f64::INFINITY;
            }
            let c = |re: f64, im: f64| Complex64::new(re, im);
            let sigma = ComplexMatrix::from_row_major(
                2,
                2,
                &[
                    c((1.0 + z) / 2.0, 0.0),
                    c(x / 2.0, -y / 2.0),
                    c(x / 2.0, y / 2.0),
                    c((1.0 - z) / 2.0, 0.0),
                ],
            )
            .unwrap();
            let inv_sqrt = eig_hermitian(&ComplexMatrix::identity(2).kron(&sigma))
                .unwrap()
                .reconstruct_with(|v| 1.0 / v.sqrt());
            let m = &(&inv_sqrt * rho.matrix()) * &inv_sqrt;
            eig_hermitian(&m).unwrap().values[0]
        };
        let mut best = (f64::INFINITY, [0.0; 3]);
        let mut center = [0.0; 3];
        let mut half = 1.0;
        let k = 10;
        while half > 5e-4 {
            for i in 0..=2 * k {
                for j in 0..=2 * k {
                    for l in 0..=2 * k {
                        let step = half / k as f64;
                        let p = [
                            center[0] + (i as f64 - k as f64) * step,
                            center[1] + (j as f64 - k as f64) * step,
                            center[2] + (l as f64 - k as f64) * step,
                        ];
                        let t = eval(p[0], p[1], p[2]);
                        if t < best.0 {
                            best = (t, p);
                        }
                    }
                }
            }
            center = best.1;
            half /= 4.0;
        }
        best.0
    }

    #[test]
    fn maximally_entangled_gives_minus_one() {
        let (v, sol) = hmin_conditional(&bell(), &[1]).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((v + 1.0).abs() < 1e-7);
        let oracle = bloch_oracle(bell().state());
        assert!((oracle - 2.0).abs() < 1e-9);
        assert!((sol.optimal_value - oracle).abs() < 1e-7);
    }

    #[test]
    fn product_states_reduce_to_marginal() {
        for seed in 0..5 {
            let ra = random_density(&[2], 2, 100 + seed).unwrap().into_state();
            let rb = random_density(&[2], 2, 200 + seed).unwrap().into_state();
            let ab = MultipartiteState::new(tensor(&ra, &rb).unwrap(), vec![2, 2]).unwrap();
            let (v, _) = hmin_conditional(&ab, &[1]).unwrap();
            assert!((v - hmin(&ra).unwrap().value).abs() < 1e-7);
            // the grid oracle never beats the SDP and comes close to it
            let oracle = bloch_oracle(ab.state());
            assert!(oracle >= 2f64.powf(-v) - 1e-8);
            assert!(
                oracle - 2f64.powf(-v) < 1e-3,
                "oracle {oracle} sdp {} rb {:?}",
                2f64.powf(-v),
                rb.eigenvalues()
            );
        }
    }

    #[test]
    fn diagonal_states_match_column_maxima() {
        for seed in 0..5 {
            let p = crate::linalg::random_spectrum(6, seed);
            let r = DensityOperator::from_diagonal(&p).unwrap();
            let ab = MultipartiteState::new(r, vec![2, 3]).unwrap();
            let (_, sol) = hmin_conditional(&ab, &[1]).unwrap();
            let oracle: f64 = (0..3).map(|j| p[j].max(p[3 + j])).sum();
            assert!(
                (sol.optimal_value - oracle).abs() < 1e-8,
                "{} vs {oracle}",
                sol.optimal_value
            );
        }
    }

    #[test]
    fn trivial_b_reduces_to_hmin() {
        let r = random_density(&[3], 3, 9).unwrap().into_state();
        let (v, _) = hmin_conditional(&MultipartiteState::single(r.clone()), &[]).unwrap();
        assert!((v - hmin(&r).unwrap().value).abs() < 1e-7);
    }

    #[test]
    fn scaling_and_unitary_invariance() {
        let s = random_density(&[2, 2], 3, 31).unwrap();
        let (v, _) = hmin_conditional(&s, &[1]).unwrap();
        let scaled = MultipartiteState::new(s.state().scaled(0.3).unwrap(), vec![2, 2]).unwrap();
        let (vs, _) = hmin_conditional(&scaled, &[1]).unwrap();
        assert!((vs - (v - 0.3f64.log2())).abs() < 1e-7);
        let u = random_unitary(2, 5).kron(&ComplexMatrix::identity(2));
        let (vu, _) = hmin_conditional(&s.conjugate_by(&u).unwrap(), &[1]).unwrap();
        assert!((vu - v).abs() < 1e-7);
    }

    #[test]
    fn conditioning_order_is_respected() {
        let s = random_density(&[2, 3], 6, 12).unwrap();
        let (v_ab, _) = hmin_conditional(&s, &[1]).unwrap();
        let swapped = s.permute(&[1, 0]).unwrap();
        let (v_swapped, _) = hmin_conditional(&swapped, &[0]).unwrap();
        assert!((v_ab - v_swapped).abs() < 1e-7);
        assert!(hmin_conditional(&s, &[0, 1]).is_err());
    }

    #[test]
    fn certificate_checks() {
        let s = random_density(&[2, 2], 4, 77).unwrap();
        let (_, sol) = hmin_conditional(&s, &[1]).unwrap();
        assert!(verify_certificate(s.state(), 2, &sol).unwrap().pass);

        let mut bad = sol.clone();
        let e = eig_hermitian(&sol.sigma_b).unwrap();
        let halved = e.reconstruct_with(|x| x).scale(1.0);
        let v0 = e.vector(0);
        let shrink = ComplexMatrix::outer(&v0, &v0).scale(0.5 * e.values[0]);
        bad.sigma_b = &halved - &shrink;
        let r = verify_certificate(s.state(), 2, &bad).unwrap();
        assert!(!r.pass && r.slack < 0.0);

        let mut inflated = sol.clone();
        inflated.optimal_value *= 2f64.powf(-0.1);
        let r = verify_certificate(s.state(), 2, &inflated).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn smooth_upper_bound_dominates_exact_value() {
        let s = random_density(&[2, 2], 4, 3).unwrap();
        let (v, sol) = hmin_conditional(&s, &[1]).unwrap();
        let u0 = hmin_smooth_upper_bound(s.state(), &sol, 0.0).unwrap();
        assert!(u0 >= v - 1e-9 && u0 - v < 1e-6);
        let u = hmin_smooth_upper_bound(s.state(), &sol, 0.05).unwrap();
        assert!(u > u0);
    }
}
