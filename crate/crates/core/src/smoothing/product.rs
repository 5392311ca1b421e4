use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use super::spectrum::{SmoothMeasure, Spectrum};
use super::typeclass::{
    cut_classes, log_max_after_cut, smooth_entropy_of_classes, tensor_power_spectrum, ClassSource, TypeClassSpectrum,
};
use crate::entropy::shannon;
use crate::error::{Error, Result};

/// Upper limit on the number of class pairs for a product of two tensor powers.
pub const MAX_PAIRS: usize = 5_000_000;

/// Classes of `(ρ_A ⊗ ρ_B)^⊗n`, built as pairs of classes of the two factors.
struct ProductClasses<'a> {
    a: &'a TypeClassSpectrum,
    b: &'a TypeClassSpectrum,
    pairs: Vec<(f64, u32, u32)>,
}

impl<'a> ProductClasses<'a> {
    fn new(a: &'a TypeClassSpectrum, b: &'a TypeClassSpectrum) -> Result<Self> {
        let (na, nb) = (a.classes().len(), b.classes().len());
        if na * nb > MAX_PAIRS {
            return Err(Error::DimensionTooLarge {
                dim: na * nb,
                max: MAX_PAIRS,
            });
        }
        let mut pairs: Vec<(f64, u32, u32)> = (0..na)
            .flat_map(|i| {
                (0..nb).map(move |j| (a.classes()[i].log_value + b.classes()[j].log_value, i as u32, j as u32))
            })
            .collect();
        pairs.par_sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        Ok(Self { a, b, pairs })
    }
}

impl ClassSource for ProductClasses<'_> {
    fn len(&self) -> usize {
        self.pairs.len()
    }
    fn log_value(&self, k: usize) -> f64 {
        self.pairs[k].0
    }
    fn log_mult(&self, k: usize) -> f64 {
        let (_, i, j) = self.pairs[k];
        self.a.classes()[i as usize].log_multiplicity + self.b.classes()[j as usize].log_multiplicity
    }
    fn mult(&self, k: usize) -> BigUint {
        let (_, i, j) = self.pairs[k];
        &self.a.classes()[i as usize].multiplicity * &self.b.classes()[j as usize].multiplicity
    }
}

/// Per-copy rates for a product source `ρ_AB = ρ_A ⊗ ρ_B`, where `H(A|B) = H(A)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProductRates {
    pub n: usize,
    pub epsilon: f64,
    /// `(1/n) [H_min^ε(AⁿBⁿ) − H₀^ε(Bⁿ)]`.
    pub lower: f64,
    /// `(1/n) H(Aⁿ|Bⁿ)` of the truncated candidate.
    pub upper_candidate: f64,
    /// `H(A|B)` of one copy.
    pub target: f64,
}

/// Lower bound and candidate value for the smooth conditional min-entropy rate of
/// `n` copies of `ρ_A ⊗ ρ_B`.
///
/// The candidate removes weight `1 − √(1 − ε²)` from the top of the joint spectrum.
/// Unlike the single-copy cut, the boundary class is scaled down uniformly, which
/// keeps every copy of a class equal and the `Bⁿ` marginal computable per class.
pub fn product_conditional_rates(base_a: &Spectrum, base_b: &Spectrum, n: usize, epsilon: f64) -> Result<ProductRates> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let a = tensor_power_spectrum(base_a, n)?;
    let b = tensor_power_spectrum(base_b, n)?;
    let view = ProductClasses::new(&a, &b)?;
    let total = a.total_weight() * b.total_weight();
    let budget = if epsilon == 0.0 {
        0.0
    } else {
        (total - (1.0 - epsilon * epsilon).sqrt()).max(0.0)
    };
    let cut = cut_classes(&view, budget, true);

    let hmin_ab = -log_max_after_cut(&view, &cut);
    let h0_b = smooth_entropy_of_classes(&b, epsilon, SmoothMeasure::H0)?;

    let wa: Vec<f64> = a.classes().iter().map(|c| c.weight()).collect();
    let mut removed_a = vec![0.0_f64; b.classes().len()];
    let boundary = cut.boundary.min(view.len());
    for &(_, i, j) in &view.pairs[..boundary] {
        removed_a[j as usize] += wa[i as usize];
    }
    let q = if boundary < view.len() { cut.class_fraction } else { 0.0 };
    let mut s_ab = 0.0;
    if boundary < view.len() {
        let (lv, i, j) = view.pairs[boundary];
        removed_a[j as usize] += q * wa[i as usize];
        if lv.is_finite() && q < 1.0 {
            s_ab += (1.0 - q) * view.weight(boundary) * -(lv + (1.0 - q).log2());
        }
        for k in boundary + 1..view.len() {
            let lv = view.pairs[k].0;
            if lv.is_finite() {
                s_ab += view.weight(k) * -lv;
            }
        }
    }
    let mut s_b = 0.0;
    let mut kept = 0.0;
    for (j, c) in b.classes().iter().enumerate() {
        let keep = (1.0 - removed_a[j]).max(0.0);
        if c.log_value.is_finite() && keep > 0.0 {
            let w = c.weight() * keep;
            s_b += w * -(c.log_value + keep.log2());
            kept += w;
        }
    }
    let nf = n as f64;
    Ok(ProductRates {
        n,
        epsilon,
        lower: (hmin_ab - h0_b) / nf,
        upper_candidate: ((s_ab - s_b) / kept - kept.log2()) / nf,
        target: shannon(&base_a.values()),
    })
}
