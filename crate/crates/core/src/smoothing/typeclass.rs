use std::borrow::Cow;

use num_bigint::BigUint;
use num_traits::{Float, One, ToPrimitive, Zero};

use super::spectrum::{SmoothMeasure, Spectrum, SNAP};
use crate::error::{Error, Result};

/// Upper limit on the number of type classes held in memory.
pub const MAX_CLASSES: usize = 1_000_000;

/// `log₂ x` for an arbitrarily large integer; `-∞` for zero.
pub fn log2_big(x: &BigUint) -> f64 {
    let mut digits = x.iter_u64_digits().rev();
    let len = digits.len();
    match (digits.next(), digits.next()) {
        (None, _) => f64::NEG_INFINITY,
        (Some(hi), None) => (hi as f64).log2(),
        (Some(hi), Some(lo)) => (hi as f64 * 2f64.powi(64) + lo as f64).log2() + 64.0 * (len - 2) as f64,
    }
}

/// One eigenvalue of `ρ^⊗n` together with how often it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeClass {
    /// `log₂` of the eigenvalue, `-∞` for the merged zero class.
    pub log_value: f64,
    pub multiplicity: BigUint,
    pub log_multiplicity: f64,
}

impl TypeClass {
    /// Total weight `multiplicity · eigenvalue`.
    pub fn weight(&self) -> f64 {
        (self.log_multiplicity + self.log_value).exp2()
    }
}

/// Spectrum of an i.i.d. tensor power, grouped by type.
#[derive(Debug, Clone)]
pub struct TypeClassSpectrum {
    n: usize,
    base_dim: u64,
    classes: Vec<TypeClass>,
}

impl TypeClassSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base_dim(&self) -> u64 {
        self.base_dim
    }

    /// Classes sorted by eigenvalue, largest first.
    pub fn classes(&self) -> &[TypeClass] {
        &self.classes
    }

    pub fn total_multiplicity(&self) -> BigUint {
        self.classes.iter().map(|c| &c.multiplicity).sum()
    }

    pub fn total_weight(&self) -> f64 {
        // Neumaier summation
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        for c in &self.classes {
            let w = c.weight();
            let t = sum + w;
            comp += if sum.abs() >= w.abs() {
                (sum - t) + w
            } else {
                (w - t) + sum
            };
            sum = t;
        }
        sum + comp
    }

    /// `−Σ ν log₂ ν` over all eigenvalues.
    pub fn entropy(&self) -> f64 {
        self.classes
            .iter()
            .filter(|c| c.log_value.is_finite())
            .map(|c| c.weight() * -c.log_value)
            .sum()
    }
}

fn class_count(n: usize, d: usize) -> f64 {
    // C(n + d − 1, d − 1)
    (1..d).fold(1.0, |acc, i| acc * (n + i) as f64 / i as f64)
}

/// Type-class decomposition of `ρ^⊗n` for a base spectrum.
///
/// Class eigenvalues are `Π λᵢ^kᵢ` over compositions `k` of `n`; multiplicities are
/// multinomials times the powers of the base multiplicities, so they sum to `dⁿ`
/// exactly. All classes with a zero eigenvalue are merged into one.
pub fn tensor_power_spectrum(base: &Spectrum, n: usize) -> Result<TypeClassSpectrum> {
    if n == 0 {
        return Err(Error::OutOfRange("tensor power needs n ≥ 1".into()));
    }
    let nonzero: Vec<(f64, u64)> = base.entries().iter().copied().filter(|e| e.0 > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::ZeroOperator);
    }
    let count = class_count(n, nonzero.len());
    if count > MAX_CLASSES as f64 {
        return Err(Error::DimensionTooLarge {
            dim: count as usize,
            max: MAX_CLASSES,
        });
    }
    let logs: Vec<f64> = nonzero.iter().map(|e| e.0.log2()).collect();
    let mults: Vec<u64> = nonzero.iter().map(|e| e.1).collect();
    let mut classes = Vec::with_capacity(count as usize);
    compositions(&logs, &mults, 0, n, BigUint::one(), 0.0, &mut classes);

    let zero_mult: u64 = base.entries().iter().filter(|e| e.0 == 0.0).map(|e| e.1).sum();
    if zero_mult > 0 {
        let nz: u64 = mults.iter().sum();
        let m = BigUint::from(nz + zero_mult).pow(n as u32) - BigUint::from(nz).pow(n as u32);
        let log_multiplicity = log2_big(&m);
        classes.push(TypeClass {
            log_value: f64::NEG_INFINITY,
            multiplicity: m,
            log_multiplicity,
        });
    }
    classes.sort_by(|a, b| b.log_value.total_cmp(&a.log_value));
    Ok(TypeClassSpectrum {
        n,
        base_dim: base.dim(),
        classes,
    })
}

fn compositions(
    logs: &[f64],
    mults: &[u64],
    level: usize,
    remaining: usize,
    coef: BigUint,
    log_value: f64,
    out: &mut Vec<TypeClass>,
) {
    let d = logs.len();
    if level == d - 1 {
        let k = remaining;
        let m = if mults[level] == 1 {
            coef
        } else {
            coef * BigUint::from(mults[level]).pow(k as u32)
        };
        let log_multiplicity = log2_big(&m);
        let lv = if k == 0 {
            log_value
        } else {
            log_value + k as f64 * logs[level]
        };
        out.push(TypeClass {
            log_value: lv,
            multiplicity: m,
            log_multiplicity,
        });
        return;
    }
    let mut binom = BigUint::one();
    let mut power = BigUint::one();
    for k in 0..=remaining {
        let c = &coef * &binom * &power;
        let lv = if k == 0 {
            log_value
        } else {
            log_value + k as f64 * logs[level]
        };
        compositions(logs, mults, level + 1, remaining - k, c, lv, out);
        binom = binom * BigUint::from(remaining - k) / BigUint::from(k + 1);
        if mults[level] != 1 {
            power *= BigUint::from(mults[level]);
        }
    }
}

/// Read access to a sorted list of eigenvalue classes.
pub(crate) trait ClassSource {
    fn len(&self) -> usize;
    fn log_value(&self, k: usize) -> f64;
    fn log_mult(&self, k: usize) -> f64;
    fn mult(&self, k: usize) -> BigUint;

    fn weight(&self, k: usize) -> f64 {
        let lv = self.log_value(k);
        if lv == f64::NEG_INFINITY {
            0.0
        } else {
            (self.log_mult(k) + lv).exp2()
        }
    }
}

impl ClassSource for TypeClassSpectrum {
    fn len(&self) -> usize {
        self.classes.len()
    }
    fn log_value(&self, k: usize) -> f64 {
        self.classes[k].log_value
    }
    fn log_mult(&self, k: usize) -> f64 {
        self.classes[k].log_multiplicity
    }
    fn mult(&self, k: usize) -> BigUint {
        self.classes[k].multiplicity.clone()
    }
}

/// Where a one-sided weight removal stopped.
#[derive(Debug, Clone)]
pub(crate) struct ClassCut {
    pub from_top: bool,
    /// Position in processing order of the first class not removed whole.
    pub boundary: usize,
    /// Copies of the boundary class removed whole.
    pub removed: BigUint,
    /// Fraction removed from one further copy.
    pub frac: f64,
    /// Fraction of the boundary class's weight removed.
    pub class_fraction: f64,
}

impl ClassCut {
    pub fn index(&self, len: usize, pos: usize) -> usize {
        if self.from_top {
            pos
        } else {
            len - 1 - pos
        }
    }
}

/// `(⌊q m⌋, q m − ⌊q m⌋)` computed exactly from the binary expansion of `q`.
fn mul_floor(m: &BigUint, q: f64) -> (BigUint, f64) {
    let (mant, exp, _) = q.integer_decode();
    let p = m * BigUint::from(mant);
    if exp >= 0 {
        return (p << exp as u64, 0.0);
    }
    let sh = (-exp) as u64;
    let whole = &p >> sh;
    let rem = p - (&whole << sh);
    let frac = if sh > 64 {
        (rem >> (sh - 64)).to_f64().unwrap_or(0.0) / 2f64.powi(64)
    } else {
        rem.to_f64().unwrap_or(0.0) / 2f64.powi(sh as i32)
    };
    (whole, frac)
}

/// Removes `budget` weight from one end of a sorted class list.
pub(crate) fn cut_classes<S: ClassSource + ?Sized>(src: &S, budget: f64, from_top: bool) -> ClassCut {
    let len = src.len();
    let mut remaining = if budget < SNAP { 0.0 } else { budget };
    let mut cut = ClassCut {
        from_top,
        boundary: len,
        removed: BigUint::zero(),
        frac: 0.0,
        class_fraction: 0.0,
    };
    for pos in 0..len {
        let k = cut.index(len, pos);
        if remaining == 0.0 {
            cut.boundary = pos;
            return cut;
        }
        let w = src.weight(k);
        if w <= remaining {
            remaining -= w;
            if remaining < SNAP {
                remaining = 0.0;
            }
            continue;
        }
        let q = remaining / w;
        let (mut whole, mut frac) = mul_floor(&src.mult(k), q);
        let v = src.log_value(k).exp2();
        if frac * v < SNAP {
            frac = 0.0;
        } else if (1.0 - frac) * v < SNAP {
            whole += 1u32;
            frac = 0.0;
        }
        cut.boundary = pos;
        cut.removed = whole;
        cut.frac = frac;
        cut.class_fraction = q;
        return cut;
    }
    cut
}

/// `log₂` of the largest eigenvalue left after a cut from the top.
pub(crate) fn log_max_after_cut<S: ClassSource + ?Sized>(src: &S, cut: &ClassCut) -> f64 {
    debug_assert!(cut.from_top);
    let len = src.len();
    if cut.boundary >= len {
        return f64::NEG_INFINITY;
    }
    let k = cut.boundary;
    let used = &cut.removed + if cut.frac > 0.0 { 1u32 } else { 0u32 };
    if src.mult(k) > used {
        return src.log_value(k);
    }
    let partial = if cut.frac > 0.0 {
        src.log_value(k) + (1.0 - cut.frac).log2()
    } else {
        f64::NEG_INFINITY
    };
    let next = if k + 1 < len {
        src.log_value(k + 1)
    } else {
        f64::NEG_INFINITY
    };
    partial.max(next)
}

/// Number of nonzero eigenvalues left after a cut from the bottom; a partly cut copy counts.
pub(crate) fn rank_after_cut<S: ClassSource + ?Sized>(src: &S, cut: &ClassCut) -> BigUint {
    debug_assert!(!cut.from_top);
    let len = src.len();
    let mut rank = BigUint::zero();
    if cut.boundary >= len {
        return rank;
    }
    let b = cut.index(len, cut.boundary);
    for k in 0..=b {
        if src.log_value(k) == f64::NEG_INFINITY {
            continue;
        }
        if k == b {
            rank += src.mult(k) - &cut.removed;
        } else {
            rank += src.mult(k);
        }
    }
    rank
}

/// Smooth entropy of `ρ^⊗n`, in bits (not divided by `n`).
///
/// Uses the same constructions as [`smooth_hmin_unconditional`](super::smooth_hmin_unconditional)
/// and [`smooth_h0`](super::smooth_h0) on the full `dⁿ` spectrum.
pub fn smooth_entropy_iid(base: &Spectrum, n: usize, epsilon: f64, measure: SmoothMeasure) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let t = (base.total_weight() - 1.0).abs();
    if t > 1e-9 {
        return Err(Error::OutOfRange("base spectrum must be normalized".into()));
    }
    let tps = tensor_power_spectrum(base, n)?;
    smooth_entropy_of_classes(&tps, epsilon, measure)
}

pub fn smooth_entropy_of_classes(tps: &TypeClassSpectrum, epsilon: f64, measure: SmoothMeasure) -> Result<f64> {
    let total = tps.total_weight();
    match measure {
        SmoothMeasure::Hmin => {
            let budget = if epsilon == 0.0 {
                0.0
            } else {
                (total - (1.0 - epsilon * epsilon).sqrt()).max(0.0)
            };
            let cut = cut_classes(tps, budget, true);
            Ok(-log_max_after_cut(tps, &cut))
        }
        SmoothMeasure::H0 => {
            let cut = cut_classes(tps, epsilon * epsilon, false);
            Ok(log2_big(&rank_after_cut(tps, &cut)))
        }
    }
}

/// Run-length spectrum `(log₂ value, count)`, largest first.
type Runs<'a> = Vec<(f64, Cow<'a, BigUint>)>;

fn runs_after_top_cut<'a>(tps: &'a TypeClassSpectrum, cut: &ClassCut) -> Runs<'a> {
    let mut runs = Vec::new();
    let cls = tps.classes();
    if cut.boundary < cls.len() {
        let c = &cls[cut.boundary];
        let used = &cut.removed + if cut.frac > 0.0 { 1u32 } else { 0u32 };
        if c.multiplicity > used {
            runs.push((c.log_value, Cow::Owned(&c.multiplicity - used)));
        }
        if cut.frac > 0.0 {
            runs.push((c.log_value + (1.0 - cut.frac).log2(), Cow::Owned(BigUint::one())));
        }
        runs.extend(
            cls[cut.boundary + 1..]
                .iter()
                .map(|c| (c.log_value, Cow::Borrowed(&c.multiplicity))),
        );
    }
    runs
}

fn runs_entropy(runs: &Runs) -> f64 {
    runs.iter()
        .filter(|r| r.0.is_finite())
        .map(|(lv, c)| (log2_big(c) + lv).exp2() * -lv)
        .sum()
}

/// `log₂ |2^a − 2^b|`.
fn log_abs_diff(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (-(-(hi - lo) * std::f64::consts::LN_2).exp_m1()).log2()
}

/// `Σ |aᵢ↓ − bᵢ↓|` for two run-length spectra of equal total count.
fn runs_l1(a: &Runs, b: &Runs) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut ca = a.first().map(|r| r.1.clone().into_owned()).unwrap_or_default();
    let mut cb = b.first().map(|r| r.1.clone().into_owned()).unwrap_or_default();
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        let step = if ca <= cb {
            cb -= &ca;
            std::mem::take(&mut ca)
        } else {
            ca -= &cb;
            std::mem::take(&mut cb)
        };
        if a[i].0 != b[j].0 {
            sum += (log2_big(&step) + log_abs_diff(a[i].0, b[j].0)).exp2();
        }
        if ca.is_zero() {
            i += 1;
            if i < a.len() {
                ca = a[i].1.clone().into_owned();
            }
        }
        if cb.is_zero() {
            j += 1;
            if j < b.len() {
                cb = b[j].1.clone().into_owned();
            }
        }
    }
    sum
}

/// Quantities entering the continuity estimate for the smoothed tensor power.
#[derive(Debug, Clone, Copy)]
pub struct FannesTerms {
    pub n: usize,
    pub epsilon: f64,
    /// `(1/n) |H(σₙ) − H(ρ^⊗n)|`.
    pub lhs: f64,
    /// `(1/n) [t log₂(dⁿ + 1) + η(t) + η(1 − Tr σₙ)]`.
    pub rhs: f64,
    /// Sorted ℓ₁ distance after padding both spectra by one dimension.
    pub l1: f64,
}

/// Compares `ρ^⊗n` with its `H_min` truncation `σₙ` through Fannes' inequality.
///
/// Both spectra are padded to dimension `dⁿ + 1`, the removed weight going into the
/// extra eigenvalue of σ.
pub fn fannes_limit_terms(base: &Spectrum, n: usize, epsilon: f64) -> Result<FannesTerms> {
    fannes_terms_of_classes(&tensor_power_spectrum(base, n)?, epsilon)
}

/// [`fannes_limit_terms`] for an already decomposed tensor power.
pub fn fannes_terms_of_classes(tps: &TypeClassSpectrum, epsilon: f64) -> Result<FannesTerms> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let n = tps.n();
    let total = tps.total_weight();
    let retained = (1.0 - epsilon * epsilon).sqrt();
    let budget = (total - retained).max(0.0);
    let cut = cut_classes(tps, budget, true);
    let sigma = runs_after_top_cut(tps, &cut);
    let h_rho = tps.entropy();
    let h_sigma = runs_entropy(&sigma);

    let one = BigUint::one();
    let mut rho_padded: Runs = tps
        .classes()
        .iter()
        .map(|c| (c.log_value, Cow::Borrowed(&c.multiplicity)))
        .collect();
    rho_padded.push((f64::NEG_INFINITY, Cow::Borrowed(&one)));
    let mut sigma_padded = sigma;
    let extra = if budget > 0.0 { budget.log2() } else { f64::NEG_INFINITY };
    let at = sigma_padded.partition_point(|r| r.0 >= extra);
    sigma_padded.insert(at, (extra, Cow::Borrowed(&one)));
    let l1 = runs_l1(&rho_padded, &sigma_padded);
    if l1 > (-1.0f64).exp() {
        return Err(Error::OutOfRange(format!("ℓ₁ distance {l1} exceeds 1/e")));
    }
    let eta = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    let d = tps.base_dim() as f64;
    let log_dim = n as f64 * d.log2() + (-(n as f64) * d.log2()).exp2().ln_1p() / std::f64::consts::LN_2;
    let nf = n as f64;
    Ok(FannesTerms {
        n,
        epsilon,
        lhs: (h_sigma - h_rho).abs() / nf,
        rhs: (l1 * log_dim + eta(l1) + eta(budget)) / nf,
        l1,
    })
}
