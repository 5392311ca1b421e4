use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, DEFAULT_RANK_TOL};

/// Values closer than this are merged into one entry.
const MERGE_TOL: f64 = 1e-13;
/// Removal budgets and leftover pieces below this are treated as zero.
pub const SNAP: f64 = 1e-14;

/// Eigenvalue multiset, sorted non-increasing, equal values merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    entries: Vec<(f64, u64)>,
}

impl Spectrum {
    pub fn new(values: &[f64]) -> Result<Self> {
        Self::from_entries(values.iter().map(|&v| (v, 1)).collect())
    }

    /// Canonicalizes `(value, multiplicity)` pairs.
    pub fn from_entries(mut entries: Vec<(f64, u64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Shape("empty spectrum".into()));
        }
        for e in entries.iter_mut() {
            if !e.0.is_finite() || e.0 < -1e-12 {
                return Err(Error::OutOfRange(format!("eigenvalue {} must be nonnegative", e.0)));
            }
            if e.1 == 0 {
                return Err(Error::OutOfRange("multiplicity must be positive".into()));
            }
            if e.0 < SNAP {
                e.0 = 0.0;
            }
        }
        entries.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(entries.len());
        for (v, m) in entries {
            match merged.last_mut() {
                Some(last) if (last.0 - v).abs() <= MERGE_TOL => {
                    let total = last.1 + m;
                    last.0 = (last.0 * last.1 as f64 + v * m as f64) / total as f64;
                    last.1 = total;
                }
                _ => merged.push((v, m)),
            }
        }
        let s = Self { entries: merged };
        if s.total_weight() > 1.0 + 1e-12 {
            return Err(Error::TraceTooLarge {
                trace: s.total_weight(),
            });
        }
        Ok(s)
    }

    pub fn from_density(rho: &DensityOperator) -> Result<Self> {
        Self::new(&rho.eigenvalues())
    }

    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|&(v, m)| v * m as f64).sum()
    }

    pub fn dim(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn max(&self) -> f64 {
        self.entries[0].0
    }

    /// Expanded values, non-increasing.
    pub fn values(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m as usize))
            .collect()
    }

    fn check_normalized(&self) -> Result<()> {
        let t = self.total_weight();
        if (t - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange(format!(
                "spectrum must be normalized, total weight is {t}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Remove weight starting from the largest eigenvalues.
    CutLarge,
    /// Remove weight starting from the smallest eigenvalues.
    CutSmall,
}

#[derive(Debug, Clone)]
pub struct TruncationResult {
    pub smoothed: Spectrum,
    /// Smoothed value of each eigenvalue, aligned with the original's expanded order.
    pub aligned: Vec<f64>,
    /// Original value of the eigenvalue at which the cut stopped.
    pub lambda_star: f64,
    /// Fraction of the boundary eigenvalue removed, in `[0, 1)`.
    pub fractional_cut: f64,
    /// `Σ ν`, equal to the requested target.
    pub retained_weight: f64,
    pub direction: Direction,
}

impl TruncationResult {
    /// Generalized fidelity between the original and the smoothed co-diagonal states.
    ///
    /// At least `retained_weight`, since `√(λ ν) ≥ ν` whenever `ν ≤ λ`.
    pub fn fidelity(&self, original: &Spectrum) -> f64 {
        let orig = original.values();
        let f: f64 = orig.iter().zip(&self.aligned).map(|(l, n)| (l * n).sqrt()).sum();
        let pad = ((1.0 - original.total_weight()).max(0.0) * (1.0 - self.retained_weight).max(0.0)).sqrt();
        (f + pad).min(1.0)
    }
}

/// Removes `total − target` weight from one end of the spectrum.
///
/// Whole eigenvalues are removed until the next one exceeds the remaining budget;
/// that boundary eigenvalue is then reduced by exactly the remainder.
pub fn truncate_spectrum(s: &Spectrum, target: f64, direction: Direction) -> Result<TruncationResult> {
    s.check_normalized()?;
    if !(target > 0.0) {
        return Err(Error::OutOfRange(format!(
            "target weight must be positive, got {target}"
        )));
    }
    let total = s.total_weight();
    if target > total + 1e-12 {
        return Err(Error::OutOfRange(format!(
            "target {target} exceeds the available weight {total}"
        )));
    }
    let values = s.values();
    let mut aligned = values.clone();
    let n = values.len();
    let order: Vec<usize> = match direction {
        Direction::CutLarge => (0..n).collect(),
        Direction::CutSmall => (0..n).rev().collect(),
    };
    let mut remaining = (total - target).max(0.0);
    if remaining < SNAP {
        remaining = 0.0;
    }
    let mut lambda_star = values[order[0]];
    let mut fractional_cut = 0.0;
    for &i in &order {
        let v = values[i];
        if v == 0.0 {
            continue;
        }
        lambda_star = v;
        if remaining == 0.0 {
            break;
        }
        if v <= remaining + SNAP {
            aligned[i] = 0.0;
            remaining = (remaining - v).max(0.0);
            if remaining < SNAP {
                remaining = 0.0;
            }
        } else {
            aligned[i] = v - remaining;
            fractional_cut = remaining / v;
            break;
        }
    }
    let smoothed = Spectrum::new(&aligned)?;
    let retained_weight = aligned.iter().sum();
    Ok(TruncationResult {
        smoothed,
        aligned,
        lambda_star,
        fractional_cut,
        retained_weight,
        direction,
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Certified lower bound on `H_min^ε`: `−log₂` of the largest eigenvalue left after
/// cutting from the top down to retained weight `√(1 − ε²)`.
pub fn smooth_hmin_unconditional(s: &Spectrum, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    s.check_normalized()?;
    if epsilon == 0.0 {
        return Ok(-s.max().log2());
    }
    let t = truncate_spectrum(s, (1.0 - epsilon * epsilon).sqrt(), Direction::CutLarge)?;
    Ok(-t.smoothed.max().log2())
}

/// `H₀^ε`: `log₂` of the smallest rank whose top eigenvalues carry weight `1 − ε²`.
///
/// Cutting `ε²` from the bottom and renormalizing gives a state at purified
/// distance at most ε; no state of smaller rank is that close. A fractionally cut
/// eigenvalue still counts toward the rank.
pub fn smooth_h0(s: &Spectrum, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    s.check_normalized()?;
    let floor = DEFAULT_RANK_TOL * s.max();
    if epsilon == 0.0 {
        let rank: u64 = s.entries().iter().filter(|e| e.0 > floor).map(|e| e.1).sum();
        return Ok((rank as f64).log2());
    }
    let t = truncate_spectrum(s, 1.0 - epsilon * epsilon, Direction::CutSmall)?;
    let rank = t.aligned.iter().filter(|&&v| v > floor).count();
    Ok((rank as f64).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothMeasure {
    Hmin,
    H0,
}

/// Exhaustive search over co-diagonal subnormalized spectra ν with
/// `F̄(λ, ν) ≥ √(1 − ε²)`.
///
/// The square roots of the first `d − 1` coordinates run over a grid with `grid`
/// points on `[0, 1]`; the last coordinate is set in closed form. The fidelity
/// constraint is relaxed by the grid's rounding error `h Σ √λᵢ`, so the returned
/// value is never worse than the continuous optimum: at least it for `hmin`, at
/// most it for `h0`.
pub fn brute_force_smooth(s: &Spectrum, epsilon: f64, measure: SmoothMeasure, grid: usize) -> Result<f64> {
    check_epsilon(epsilon)?;
    let lam = s.values();
    let d = lam.len();
    if d > 4 {
        return Err(Error::DimensionTooLarge { dim: d, max: 4 });
    }
    if grid < 100 {
        return Err(Error::OutOfRange(format!("grid needs at least 100 points, got {grid}")));
    }
    let h = 1.0 / (grid - 1) as f64;
    let slack: f64 = h * lam[..d - 1].iter().map(|l| l.sqrt()).sum::<f64>();
    let target = (1.0 - epsilon * epsilon).sqrt() - slack;
    let last = lam[d - 1];

    let mut best = match measure {
        SmoothMeasure::Hmin => f64::NEG_INFINITY,
        SmoothMeasure::H0 => f64::INFINITY,
    };
    let mut idx = vec![0usize; d - 1];
    loop {
        let nu: Vec<f64> = idx.iter().map(|&k| (k as f64 * h).powi(2)).collect();
        let used: f64 = nu.iter().sum();
        if used <= 1.0 + 1e-12 {
            let room = (1.0 - used).max(0.0);
            let f: f64 = nu.iter().zip(&lam).map(|(n, l)| (n * l).sqrt()).sum();
            let need = target - f;
            match measure {
                SmoothMeasure::Hmin => {
                    let top = nu.iter().fold(0.0_f64, |a, &x| a.max(x));
                    let nu_d = if need <= 0.0 {
                        Some(0.0)
                    } else if last > 0.0 && need * need / last <= room {
                        Some(need * need / last)
                    } else {
                        None
                    };
                    if let Some(nu_d) = nu_d {
                        let m = top.max(nu_d);
                        if m > 0.0 {
                            best = best.max(-m.log2());
                        }
                    }
                }
                SmoothMeasure::H0 => {
                    let base = nu.iter().filter(|&&x| x > 0.0).count();
                    let rank = if need <= 0.0 {
                        Some(base)
                    } else if room > 0.0 && (last * room).sqrt() >= need {
                        Some(base + 1)
                    } else {
                        None
                    };
                    if let Some(r) = rank.filter(|&r| r > 0) {
                        best = best.min((r as f64).log2());
                    }
                }
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == d - 1 {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < grid && idx[..=k].iter().map(|&i| (i as f64 * h).powi(2)).sum::<f64>() <= 1.0 + 1e-12 {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sp(v: &[f64]) -> Spectrum {
        Spectrum::new(v).unwrap()
    }

    #[test]
    fn canonical_form_merges_and_sorts() {
        let s = sp(&[0.25, 0.25, 0.5]);
        assert_eq!(s.entries(), &[(0.5, 1), (0.25, 2)]);
        assert_eq!(s.dim(), 3);
        assert!(Spectrum::new(&[0.7, 0.7]).is_err());
        assert!(Spectrum::new(&[-0.1, 1.0]).is_err());
    }

    #[test]
    fn truncation_examples() {
        let s = sp(&[0.3, 0.7]);
        let t = truncate_spectrum(&s, 1.0, Direction::CutLarge).unwrap();
        assert_eq!(t.smoothed, s);
        assert_eq!(t.fractional_cut, 0.0);

        let t = truncate_spectrum(&sp(&[0.5, 0.5]), 0.75, Direction::CutLarge).unwrap();
        assert_eq!(t.aligned, vec![0.25, 0.5]);
        assert_eq!(t.smoothed.entries(), &[(0.5, 1), (0.25, 1)]);
        assert!((t.fractional_cut - 0.5).abs() < 1e-15);

        let t = truncate_spectrum(&sp(&[0.4, 0.3, 0.3]), 0.7, Direction::CutSmall).unwrap();
        assert_eq!(t.aligned, vec![0.4, 0.3, 0.0]);
        assert_eq!(t.fractional_cut, 0.0);

        assert!(truncate_spectrum(&s, 0.0, Direction::CutLarge).is_err());
        assert!(truncate_spectrum(&s, 1.1, Direction::CutLarge).is_err());
    }

    #[test]
    fn hmin_examples() {
        let s = sp(&[0.75, 0.25]);
        assert!((smooth_hmin_unconditional(&s, 0.0).unwrap() + 0.75f64.log2()).abs() < 1e-15);
        let v = smooth_hmin_unconditional(&s, 0.6).unwrap();
        assert!((v + 0.55f64.log2()).abs() < 1e-12);
        assert!((v - 0.862496).abs() < 1e-6);
        let flat = sp(&[0.25; 4]);
        assert!(smooth_hmin_unconditional(&flat, 0.3).unwrap() >= 2.0 - 1e-12);
        assert!(smooth_hmin_unconditional(&s, 1.0).is_err());
    }

    #[test]
    fn h0_examples() {
        let s = sp(&[0.5, 0.3, 0.2]);
        assert!((smooth_h0(&s, 0.0).unwrap() - 3f64.log2()).abs() < 1e-15);
        assert_eq!(smooth_h0(&sp(&[1.0, 0.0]), 0.4).unwrap(), 0.0);
        // dropping both small eigenvalues retains 0.98 < 1 − 0.05² and leaves the ball
        let s = sp(&[0.98, 0.01, 0.01]);
        assert!((smooth_h0(&s, 0.05).unwrap() - 3f64.log2()).abs() < 1e-15);
        assert_eq!(smooth_h0(&s, 0.15).unwrap(), 0.0);
    }

    #[test]
    fn h0_matches_smallest_qualifying_rank() {
        // independent check: scan k directly
        for (vals, eps) in [
            (vec![0.6, 0.25, 0.1, 0.05], 0.3),
            (vec![0.5, 0.5], 0.5),
            (vec![0.9, 0.1], 0.2),
        ] {
            let s = sp(&vals);
            let need = 1.0 - eps * eps;
            let mut acc = 0.0;
            let mut k = 0;
            for v in s.values() {
                acc += v;
                k += 1;
                if acc >= need - 1e-15 {
                    break;
                }
            }
            assert_eq!(smooth_h0(&s, eps).unwrap(), (k as f64).log2(), "{vals:?} {eps}");
        }
    }

    #[test]
    fn brute_force_examples() {
        let s = sp(&[0.75, 0.25]);
        let hm = brute_force_smooth(&s, 0.6, SmoothMeasure::Hmin, 1001).unwrap();
        assert!(hm >= 0.862496 - 1e-9);
        // flat cap ν₁ = ν₂ = m with √m (√.75 + √.25) = 0.8
        let m = (0.8 / (0.75f64.sqrt() + 0.5)).powi(2);
        assert!(hm >= -m.log2() - 1e-12 && hm < -m.log2() + 0.01, "{hm}");
        let s = sp(&[0.98, 0.01, 0.01]);
        assert_eq!(
            brute_force_smooth(&s, 0.05, SmoothMeasure::H0, 2001).unwrap(),
            3f64.log2()
        );
        assert_eq!(brute_force_smooth(&s, 0.2, SmoothMeasure::H0, 200).unwrap(), 0.0);
        assert!(brute_force_smooth(&sp(&[0.2; 5]), 0.1, SmoothMeasure::H0, 100).is_err());
        assert!(brute_force_smooth(&s, 0.1, SmoothMeasure::H0, 50).is_err());
    }

    fn spectrum_strategy() -> impl Strategy<Value = Spectrum> {
        prop::collection::vec(0.001f64..1.0, 2..5).prop_map(|raw| {
            let t: f64 = raw.iter().sum();
            Spectrum::new(&raw.iter().map(|x| x / t).collect::<Vec<_>>()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn truncation_stays_in_ball(s in spectrum_strategy(), eps in 0.01f64..0.99) {
            let target = (1.0 - eps * eps).sqrt();
            for dir in [Direction::CutLarge, Direction::CutSmall] {
                let t = truncate_spectrum(&s, target, dir).unwrap();
                prop_assert!((t.retained_weight - target).abs() < 1e-12);
                let f = t.fidelity(&s);
                prop_assert!(f >= target - 1e-12);
                prop_assert!((1.0 - f * f).max(0.0).sqrt() <= eps + 1e-12);
                prop_assert!(t.smoothed.total_weight() <= s.total_weight() + 1e-15);
            }
        }

        #[test]
        fn monotone_in_epsilon(s in spectrum_strategy(), e1 in 0.0f64..0.98, de in 0.0f64..0.5) {
            let e2 = (e1 + de).min(0.99);
            prop_assert!(smooth_hmin_unconditional(&s, e2).unwrap() >= smooth_hmin_unconditional(&s, e1).unwrap() - 1e-12);
            prop_assert!(smooth_h0(&s, e2).unwrap() <= smooth_h0(&s, e1).unwrap());
        }
    }
}
