use serde::Serialize;

use super::spectrum::{smooth_h0, smooth_hmin_unconditional, truncate_spectrum, Direction, Spectrum, TruncationResult};
use crate::entropy::{conditional_vn, conditional_vn_subnormalized};
use crate::error::Result;
use crate::linalg::{ComplexMatrix, DensityOperator, Eigen, MultipartiteState, DEFAULT_RANK_TOL};
use crate::metrics::purified_distance;
use crate::sdp::{bipartition, hmin_conditional};

/// Truncates `rho` in its own eigenbasis.
pub fn truncated_state(
    rho: &DensityOperator,
    target: f64,
    direction: Direction,
) -> Result<(DensityOperator, TruncationResult)> {
    let e = rho.eigen();
    let spectrum = Spectrum::new(&e.values)?;
    let t = truncate_spectrum(&spectrum, target, direction)?;
    let m = Eigen {
        values: t.aligned.clone(),
        vectors: e.vectors,
    }
    .reconstruct();
    Ok((DensityOperator::new(m, rho.herm_tol())?, t))
}

/// Retained weight of the `H_min` truncation at smoothing ε.
fn hmin_target(epsilon: f64) -> f64 {
    (1.0 - epsilon * epsilon).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionalBounds {
    pub epsilon: f64,
    /// `H_min^ε(AB) − H₀^ε(B)`, a lower bound on `H_min^{3ε}(A|B)`.
    pub lower: f64,
    /// Largest conditional entropy among the candidate states in the ε-ball.
    pub upper: f64,
    /// `H_min(A|B)` of the unsmoothed state.
    pub exact_hmin: f64,
}

/// Bounds on the smooth conditional min-entropy of `rho`, conditioning on `cond_on`.
pub fn smooth_hmin_conditional_bounds(
    rho: &MultipartiteState,
    cond_on: &[usize],
    epsilon: f64,
) -> Result<ConditionalBounds> {
    let (op, d_a, d_b) = bipartition(rho, cond_on)?;
    let ab = MultipartiteState::new(op, vec![d_a, d_b])?;
    let rho_b = ab.partial_trace(&[1])?;
    let lower = smooth_hmin_unconditional(&Spectrum::from_density(ab.state())?, epsilon)?
        - smooth_h0(&Spectrum::from_density(rho_b.state())?, epsilon)?;

    let (cand, _) = truncated_state(ab.state(), hmin_target(epsilon), Direction::CutLarge)?;
    let cand = MultipartiteState::new(cand, vec![d_a, d_b])?;
    let upper = conditional_vn(&ab, &[1])?
        .value
        .max(conditional_vn_subnormalized(&cand, &[1])?.value);

    let (exact_hmin, _) = hmin_conditional(&ab, &[1])?;
    Ok(ConditionalBounds {
        epsilon,
        lower,
        upper,
        exact_hmin,
    })
}

/// Explicit state realizing the chain-rule lower bound.
#[derive(Debug, Clone)]
pub struct ChainWitness {
    /// `(1 ⊗ Π) ρ' (1 ⊗ Π)` on `A ⊗ B`, where ρ' is the `H_min` truncation of `ρ_AB`
    /// and Π projects onto the support of the `H₀` truncation of `ρ_B`.
    pub state: MultipartiteState,
    /// `H_min^ε(AB)` of the construction.
    pub lambda: f64,
    /// `H₀^ε(B)`, equal to `log₂ rank Π`.
    pub log_rank: f64,
    /// Purified distance from the input to `state`.
    pub distance: f64,
}

pub fn chain_rule_witness(rho: &MultipartiteState, cond_on: &[usize], epsilon: f64) -> Result<ChainWitness> {
    let (op, d_a, d_b) = bipartition(rho, cond_on)?;
    let ab = MultipartiteState::new(op, vec![d_a, d_b])?;
    let rho_b = ab.partial_trace(&[1])?;
    let (smoothed_ab, _) = truncated_state(ab.state(), hmin_target(epsilon), Direction::CutLarge)?;
    let lambda = smooth_hmin_unconditional(&Spectrum::from_density(ab.state())?, epsilon)?;

    let eb = rho_b.state().eigen();
    let spectrum_b = Spectrum::new(&eb.values)?;
    let tb = truncate_spectrum(&spectrum_b, 1.0 - epsilon * epsilon, Direction::CutSmall)?;
    let floor = DEFAULT_RANK_TOL * spectrum_b.max();
    let keep = tb.aligned.iter().map(|&v| if v > floor { 1.0 } else { 0.0 }).collect();
    let proj = Eigen {
        values: keep,
        vectors: eb.vectors,
    }
    .reconstruct();
    let log_rank = smooth_h0(&spectrum_b, epsilon)?;

    let lift = ComplexMatrix::identity(d_a).kron(&proj);
    let m = &(&lift * smoothed_ab.matrix()) * &lift;
    let state = DensityOperator::new(m, ab.state().herm_tol())?;
    let distance = purified_distance(ab.state(), &state)?.value;
    Ok(ChainWitness {
        state: MultipartiteState::new(state, vec![d_a, d_b])?,
        lambda,
        log_rank,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    #[test]
    fn truncated_state_keeps_eigenbasis() {
        let rho = random_density(&[3], 3, 7).unwrap().into_state();
        let (s, t) = truncated_state(&rho, 0.9, Direction::CutLarge).unwrap();
        assert!((s.trace() - 0.9).abs() < 1e-12);
        let got = s.eigenvalues();
        let mut want = t.aligned.clone();
        want.sort_by(|a, b| b.total_cmp(a));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        // commutes with rho
        let c = &(s.matrix() * rho.matrix()) - &(rho.matrix() * s.matrix());
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn bounds_ordered_for_random_states() {
        for seed in 0..5 {
            let rho = random_density(&[2, 2], 4, seed).unwrap();
            let b = smooth_hmin_conditional_bounds(&rho, &[1], 0.05).unwrap();
            assert!(b.lower <= b.upper + 1e-9, "{b:?}");
            assert!(b.exact_hmin <= conditional_vn(&rho, &[1]).unwrap().value + 1e-7);
        }
    }

    #[test]
    fn bounds_at_zero_smoothing() {
        // product of a qubit with a maximally mixed conditioning qubit
        let a = DensityOperator::from_diagonal(&[0.75, 0.25]).unwrap();
        let b = DensityOperator::maximally_mixed(2).unwrap();
        let rho = MultipartiteState::new(crate::linalg::tensor(&a, &b).unwrap(), vec![2, 2]).unwrap();
        let bounds = smooth_hmin_conditional_bounds(&rho, &[1], 0.0).unwrap();
        let hmin_a = -0.75f64.log2();
        assert!((bounds.lower - hmin_a).abs() < 1e-12);
        assert!((bounds.exact_hmin - hmin_a).abs() < 1e-7);
        let h_a = crate::entropy::shannon(&[0.75, 0.25]);
        assert!((bounds.upper - h_a).abs() < 1e-12);
    }

    #[test]
    fn chain_witness_is_close_and_projected() {
        for seed in 0..4 {
            let rho = random_density(&[2, 3], 6, 100 + seed).unwrap();
            let eps = 0.1;
            let w = chain_rule_witness(&rho, &[1], eps).unwrap();
            assert!(w.distance <= 3.0 * eps + 1e-9, "{}", w.distance);
            let (h, _) = hmin_conditional(&w.state, &[1]).unwrap();
            assert!(w.lambda - w.log_rank <= h + 1e-6, "{} {} {h}", w.lambda, w.log_rank);
        }
    }
}
