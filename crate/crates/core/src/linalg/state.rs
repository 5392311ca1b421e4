use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{eig_hermitian, ComplexMatrix, Eigen};
use crate::error::{Error, Result};

/// Default tolerance for Hermiticity, positivity and trace checks.
pub const DEFAULT_HERM_TOL: f64 = 1e-10;

/// Relative eigenvalue threshold below which an eigenvalue is outside the support.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Largest matrix dimension produced by tensor products.
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceClass {
    Normalized,
    Subnormalized,
}

/// Hermitian positive semidefinite operator with trace at most one.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    trace_class: TraceClass,
    herm_tol: f64,
}

impl DensityOperator {
    /// Validates and Hermitizes `matrix`.
    pub fn new(matrix: ComplexMatrix, herm_tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if matrix.rows() == 0 {
            return Err(Error::Shape("empty matrix".into()));
        }
        let deviation = matrix.hermiticity_defect();
        if deviation > herm_tol {
            return Err(Error::NotHermitian {
                deviation,
                tol: herm_tol,
            });
        }
        let matrix = matrix.hermitize();
        let min_eigenvalue = *eig_hermitian(&matrix)?.values.last().unwrap();
        if min_eigenvalue < -herm_tol {
            return Err(Error::NotPositive {
                min_eigenvalue,
                tol: herm_tol,
            });
        }
        let trace = matrix.trace().re;
        let trace_class = if (trace - 1.0).abs() <= herm_tol {
            TraceClass::Normalized
        } else if trace <= 1.0 + herm_tol {
            TraceClass::Subnormalized
        } else {
            return Err(Error::TraceTooLarge { trace });
        };
        Ok(Self {
            matrix,
            trace_class,
            herm_tol,
        })
    }

    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, DEFAULT_HERM_TOL)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(ComplexMatrix::from_diagonal(diag))
    }

    /// `|v><v|` (no normalization is applied).
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        Self::from_matrix(ComplexMatrix::outer(amplitudes, amplitudes))
    }

    /// Computational basis projector `|k><k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        let mut d = vec![0.0; dim];
        d[k] = 1.0;
        Self::from_diagonal(&d)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0 / dim as f64; dim])
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn trace_class(&self) -> TraceClass {
        self.trace_class
    }

    pub fn herm_tol(&self) -> f64 {
        self.herm_tol
    }

    pub fn is_normalized(&self) -> bool {
        self.trace_class == TraceClass::Normalized
    }

    pub fn eigen(&self) -> Eigen {
        eig_hermitian(&self.matrix).expect("density operators are square")
    }

    /// Eigenvalues, non-increasing.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    /// `c · rho`, which must stay subnormalized.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::OutOfRange(format!("scale factor {c} must be nonnegative")));
        }
        Self::new(self.matrix.scale(c), self.herm_tol)
    }

    /// `rho / Tr rho`.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroOperator);
        }
        Self::new(self.matrix.scale(1.0 / t), self.herm_tol)
    }

    /// `U rho U^dag` for a unitary (or isometry/contraction) `u`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        let m = &(u * &self.matrix) * &u.adjoint();
        Self::new(m, self.herm_tol.max(1e-9))
    }
}

/// Density operator on a tensor product of subsystems.
#[derive(Debug, Clone)]
pub struct MultipartiteState {
    state: DensityOperator,
    dims: Vec<usize>,
}

impl MultipartiteState {
    pub fn new(state: DensityOperator, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!("invalid subsystem dims {dims:?}")));
        }
        let total: usize = dims.iter().product();
        if total != state.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} multiply to {total}, matrix has dimension {}",
                state.dim()
            )));
        }
        Ok(Self { state, dims })
    }

    /// Single-subsystem wrapper.
    pub fn single(state: DensityOperator) -> Self {
        let d = state.dim();
        Self { state, dims: vec![d] }
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn into_state(self) -> DensityOperator {
        self.state
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Reduced state on `keep`; kept subsystems retain their original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let state = tensor(&self.state, &other.state)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(state, dims)
    }

    /// Applies `(U ⊗ 1)` style conjugation by a full-dimension operator.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::new(self.state.conjugate_by(u)?, self.dims.clone())
    }

    /// Same matrix, regrouped dims (product must match).
    pub fn regroup(&self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.state.clone(), dims)
    }

    /// Reorders subsystems: position `p` of the result holds subsystem `order[p]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let n = self.dims.len();
        let mut seen = order.to_vec();
        seen.sort_unstable();
        if seen != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidSubsystems(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
        let new_dims: Vec<usize> = order.iter().map(|&k| self.dims[k]).collect();
        let total = self.dim();
        // old index of each new index
        let mut map = vec![0usize; total];
        let mut digits = vec![0usize; n];
        for (new_i, slot) in map.iter_mut().enumerate() {
            let mut rem = new_i;
            for p in (0..n).rev() {
                digits[order[p]] = rem % new_dims[p];
                rem /= new_dims[p];
            }
            *slot = (0..n).fold(0, |acc, s| acc * self.dims[s] + digits[s]);
        }
        let m = self.state.matrix.inner();
        let out = nalgebra::DMatrix::from_fn(total, total, |i, j| m[(map[i], map[j])]);
        let state = DensityOperator {
            matrix: ComplexMatrix::from_inner_unchecked(out),
            trace_class: self.state.trace_class,
            herm_tol: self.state.herm_tol,
        };
        Self::new(state, new_dims)
    }
}

/// State vector on a tensor product of subsystems.
#[derive(Debug, Clone)]
pub struct PureState {
    pub amplitudes: Vec<Complex64>,
    pub dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} multiply to {total}, vector has length {}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1.0 + DEFAULT_HERM_TOL {
            return Err(Error::TraceTooLarge { trace: norm * norm });
        }
        Ok(Self { amplitudes, dims })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn to_density(&self) -> Result<MultipartiteState> {
        let rho = DensityOperator::pure(&self.amplitudes)?;
        MultipartiteState::new(rho, self.dims.clone())
    }
}

/// Kronecker product with the default dimension cap.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    tensor_with_max(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_with_max(a: &DensityOperator, b: &DensityOperator, max_dim: usize) -> Result<DensityOperator> {
    let dim = a.dim().saturating_mul(b.dim());
    if dim > max_dim {
        return Err(Error::DimensionTooLarge { dim, max: max_dim });
    }
    DensityOperator::new(a.matrix.kron(&b.matrix), a.herm_tol.max(b.herm_tol))
}

/// Partial trace over every subsystem not listed in `keep`.
pub fn partial_trace(rho: &MultipartiteState, keep: &[usize]) -> Result<MultipartiteState> {
    let n = rho.dims.len();
    if keep.is_empty() {
        return Err(Error::InvalidSubsystems("keep set is empty".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if let Some(&bad) = keep_sorted.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidSubsystems(format!(
            "subsystem {bad} out of range for {n} subsystems"
        )));
    }
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| rho.dims[k]).collect();
    let traced: Vec<usize> = (0..n).filter(|k| !keep_sorted.contains(k)).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced.iter().map(|&k| rho.dims[k]).product();

    // split each full index into (kept index, traced index)
    let total = rho.dim();
    let mut kept_idx = vec![0usize; total];
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); dt];
    let mut digits = vec![0usize; n];
    for i in 0..total {
        let mut rem = i;
        for s in (0..n).rev() {
            digits[s] = rem % rho.dims[s];
            rem /= rho.dims[s];
        }
        let k = keep_sorted.iter().fold(0, |acc, &s| acc * rho.dims[s] + digits[s]);
        let t = traced.iter().fold(0, |acc, &s| acc * rho.dims[s] + digits[s]);
        kept_idx[i] = k;
        groups[t].push(i);
    }
    let m = rho.state.matrix.inner();
    let mut out = nalgebra::DMatrix::<Complex64>::zeros(dk, dk);
    for g in &groups {
        for &i in g {
            for &j in g {
                out[(kept_idx[i], kept_idx[j])] += m[(i, j)];
            }
        }
    }
    let state = DensityOperator::new(ComplexMatrix::from_inner_unchecked(out), rho.state.herm_tol.max(1e-9))?;
    MultipartiteState::new(state, kept_dims)
}

/// Canonical purification `sum_i sqrt(l_i) |v_i>_A |i>_R` over the support.
///
/// The reference system has dimension `rank(rho)` (at least one); eigenvalues
/// appear in non-increasing order.
pub fn purify(rho: &DensityOperator) -> PureState {
    let e = rho.eigen();
    let d = rho.dim();
    let lmax = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = e
        .values
        .iter()
        .filter(|&&l| l > DEFAULT_RANK_TOL * lmax && l > 0.0)
        .count();
    let r = rank.max(1);
    let mut amps = vec![Complex64::new(0.0, 0.0); d * r];
    for k in 0..rank {
        let s = e.values[k].sqrt();
        for a in 0..d {
            amps[a * r + k] = e.vectors.get(a, k) * s;
        }
    }
    PureState {
        amplitudes: amps,
        dims: vec![d, r],
    }
}

/// Projector onto the span of eigenvectors with eigenvalue above `rank_tol · λ_max`.
#[derive(Debug, Clone)]
pub struct SupportProjector {
    pub projector: ComplexMatrix,
    pub rank: usize,
    /// Set when the input had no eigenvalue above zero.
    pub zero_operator: bool,
}

pub fn support_projector(rho: &DensityOperator, rank_tol: f64) -> SupportProjector {
    let e = rho.eigen();
    let lmax = e.values.first().copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        return SupportProjector {
            projector: ComplexMatrix::zeros(rho.dim(), rho.dim()),
            rank: 0,
            zero_operator: true,
        };
    }
    let rank = e.values.iter().filter(|&&l| l > rank_tol * lmax).count();
    SupportProjector {
        projector: top_projector(&e, rank),
        rank,
        zero_operator: false,
    }
}

/// Projector onto the first `k` eigenvectors.
pub fn top_projector(e: &Eigen, k: usize) -> ComplexMatrix {
    let n = e.dim();
    let v = e.vectors.inner();
    let mut p = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for c in 0..k {
        let col = v.column(c);
        p += col * col.adjoint();
    }
    ComplexMatrix::from_inner_unchecked(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityOperator::pure(&[c(s), c(0.), c(0.), c(s)]).unwrap()
    }

    #[test]
    fn validation_rejects_bad_operators() {
        let neg = ComplexMatrix::from_diagonal(&[1.2, -0.2]);
        assert!(matches!(
            DensityOperator::from_matrix(neg),
            Err(Error::NotPositive { .. })
        ));
        let big = ComplexMatrix::from_diagonal(&[0.7, 0.7]);
        assert!(matches!(
            DensityOperator::from_matrix(big),
            Err(Error::TraceTooLarge { .. })
        ));
        let nh = ComplexMatrix::from_row_major(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]).unwrap();
        assert!(matches!(
            DensityOperator::from_matrix(nh),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn trace_classification() {
        assert!(DensityOperator::from_diagonal(&[0.5, 0.5]).unwrap().is_normalized());
        let sub = DensityOperator::from_diagonal(&[0.3, 0.2]).unwrap();
        assert_eq!(sub.trace_class(), TraceClass::Subnormalized);
    }

    #[test]
    fn tensor_examples() {
        let mm = DensityOperator::maximally_mixed(2).unwrap();
        let t = tensor(&mm, &mm).unwrap();
        assert!(t.matrix().max_abs_diff(&ComplexMatrix::from_diagonal(&[0.25; 4])) < 1e-15);

        let k0 = DensityOperator::basis(2, 0).unwrap();
        let k1 = DensityOperator::basis(2, 1).unwrap();
        let t = tensor(&k0, &k1).unwrap();
        assert!(
            t.matrix()
                .max_abs_diff(&ComplexMatrix::from_diagonal(&[0., 1., 0., 0.]))
                < 1e-15
        );

        let a = DensityOperator::from_diagonal(&[0.7, 0.3]).unwrap();
        let b = DensityOperator::from_diagonal(&[0.6, 0.4]).unwrap();
        let t = tensor(&a, &b).unwrap();
        let want = ComplexMatrix::from_diagonal(&[0.42, 0.28, 0.18, 0.12]);
        assert!(t.matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn tensor_dimension_cap() {
        let a = DensityOperator::maximally_mixed(4).unwrap();
        assert!(matches!(
            tensor_with_max(&a, &a, 8),
            Err(Error::DimensionTooLarge { dim: 16, max: 8 })
        ));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let s = MultipartiteState::new(bell(), vec![2, 2]).unwrap();
        let a = s.partial_trace(&[0]).unwrap();
        let want = ComplexMatrix::from_diagonal(&[0.5, 0.5]);
        assert!(a.state().matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let s = MultipartiteState::new(bell(), vec![2, 2]).unwrap();
        assert!(matches!(s.partial_trace(&[]), Err(Error::InvalidSubsystems(_))));
        assert!(matches!(s.partial_trace(&[2]), Err(Error::InvalidSubsystems(_))));
    }

    #[test]
    fn purify_examples() {
        let p = purify(&DensityOperator::basis(2, 0).unwrap());
        assert_eq!(p.dims, vec![2, 1]);
        assert!((p.amplitudes[0] - c(1.0)).norm() < 1e-15);

        let p = purify(&DensityOperator::maximally_mixed(2).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = [c(s), c(0.), c(0.), c(s)];
        for (x, y) in p.amplitudes.iter().zip(&want) {
            assert!((x - y).norm() < 1e-12);
        }

        let rho = DensityOperator::from_diagonal(&[0.9, 0.1]).unwrap();
        let p = purify(&rho);
        assert!((p.amplitudes[0] - c(0.9f64.sqrt())).norm() < 1e-12);
        assert!((p.amplitudes[3] - c(0.1f64.sqrt())).norm() < 1e-12);
        let back = p.to_density().unwrap().partial_trace(&[0]).unwrap();
        assert!(back.state().matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn support_projector_examples() {
        let p = support_projector(&DensityOperator::maximally_mixed(2).unwrap(), DEFAULT_RANK_TOL);
        assert_eq!(p.rank, 2);
        assert!(p.projector.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);

        let p = support_projector(&DensityOperator::basis(2, 0).unwrap(), DEFAULT_RANK_TOL);
        assert_eq!(p.rank, 1);
        assert!(p.projector.max_abs_diff(&ComplexMatrix::from_diagonal(&[1., 0.])) < 1e-14);

        let rho = DensityOperator::from_diagonal(&[0.999999, 1e-15]).unwrap();
        let p = support_projector(&rho, 1e-10);
        assert_eq!(p.rank, 1);
        assert!(p.projector.max_abs_diff(&ComplexMatrix::from_diagonal(&[1., 0.])) < 1e-14);

        let z = support_projector(&DensityOperator::from_diagonal(&[0., 0.]).unwrap(), 1e-10);
        assert!(z.zero_operator && z.rank == 0);
    }

    #[test]
    fn permute_swaps_product_factors() {
        let a = DensityOperator::from_diagonal(&[0.6, 0.4]).unwrap();
        let b = DensityOperator::from_diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let ab = MultipartiteState::new(tensor(&a, &b).unwrap(), vec![2, 3]).unwrap();
        let ba = ab.permute(&[1, 0]).unwrap();
        assert_eq!(ba.dims(), &[3, 2]);
        assert!(ba.state().matrix().max_abs_diff(tensor(&b, &a).unwrap().matrix()) < 1e-15);
        assert!(ab.permute(&[0, 0]).is_err());
    }
}
