//! Basis weights `z_{m,r}(y) = C(m+r, r) y^r`, the interval localization of a
//! point, and certified truncation of the infinite reductions over `r`.
//!
//! Weights are handled in the log domain or as ratios anchored at the
//! dominant index `s`; the raw binomials overflow `f64` once `m + r` passes
//! roughly a thousand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{ln_binomial, ln_binomial_pmf};

/// Default hard cap on truncation indices.
pub const DEFAULT_INDEX_CAP: u64 = 10_000_000;

/// Operator degree `m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Degree(u64);

impl Degree {
    /// Smallest degree covered by the approximation bound.
    pub const THEOREM_MIN: u64 = 4;

    pub fn new(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("degree m must be >= 1".into()));
        }
        Ok(Self(m))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Checks the `m >= 4` hypothesis of the approximation bound.
    pub fn require_theorem_range(self) -> Result<Self> {
        if self.0 < Self::THEOREM_MIN {
            return Err(Error::Hypothesis(format!(
                "degree m = {} but the bound requires m >= {}",
                self.0,
                Self::THEOREM_MIN
            )));
        }
        Ok(self)
    }
}

impl TryFrom<u64> for Degree {
    type Error = Error;

    fn try_from(m: u64) -> Result<Self> {
        Self::new(m)
    }
}

impl From<Degree> for u64 {
    fn from(m: Degree) -> u64 {
        m.0
    }
}

impl std::fmt::Display for Degree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Localized basis context at `(m, y)`: the interval index `s` and `ln z_{m,s}(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint<T> {
    pub m: Degree,
    pub y: T,
    pub s: u64,
    pub log_zs: T,
}

impl<T: Real> BasisPoint<T> {
    pub fn locate(m: Degree, y: T) -> Result<Self> {
        let s = interval_index(m, y)?;
        let log_zs = log_basis_weight(m, s, y)?;
        Ok(Self { m, y, s, log_zs })
    }

    /// `z_{m,r}(y) / z_{m,s}(y)`.
    pub fn ratio(&self, r: u64) -> Result<T> {
        Ok((log_basis_weight(self.m, r, self.y)? - self.log_zs).exp())
    }
}

/// Certificate that dropping the terms outside `[r_min, r_max]` perturbs a
/// reduction by at most `tail_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCertificate<T> {
    pub r_min: u64,
    pub r_max: u64,
    pub tail_bound: T,
    /// Term ratio `z_{r+1}/z_r` at `r = r_max + 1`; bounds every later ratio.
    pub decay_ratio: T,
}

/// Kind of reduction being truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Supremum of `z_{m,r}(y) / z_{m,s}(y) * g(node)`.
    Max,
    /// Sum of the normalized weights `C(m+r,r) y^r (1-y)^(m+1) * g(node)`.
    Sum,
}

fn check_half_open<T: Real>(y: T) -> Result<()> {
    if !(y >= T::zero() && y < T::one()) {
        return Err(Error::OutOfDomain {
            y: y.as_f64(),
            domain: "[0,1)",
        });
    }
    Ok(())
}

fn check_open<T: Real>(y: T) -> Result<()> {
    if !(y > T::zero() && y < T::one()) {
        return Err(Error::OutOfDomain {
            y: y.as_f64(),
            domain: "(0,1)",
        });
    }
    Ok(())
}

/// `ln C(m+r, r) + r ln y`.
pub fn log_basis_weight<T: Real>(m: Degree, r: u64, y: T) -> Result<T> {
    check_half_open(y)?;
    if r == 0 {
        return Ok(T::zero());
    }
    if y == T::zero() {
        return Ok(T::neg_infinity());
    }
    Ok(ln_binomial::<T>(m.get() + r, r) + T::from_index(r) * y.ln())
}

/// Left endpoint `s/(m+s)` of the `s`-th localization interval.
#[inline]
pub fn interval_start<T: Real>(m: Degree, s: u64) -> T {
    T::from_index(s) / T::from_index(m.get() + s)
}

/// `[s/(m+s), (s+1)/(m+s+1)]`.
pub fn interval_bounds<T: Real>(m: Degree, s: u64) -> (T, T) {
    (interval_start(m, s), interval_start(m, s + 1))
}

/// Index `s` of the interval `[s/(m+s), (s+1)/(m+s+1)]` containing `y`.
///
/// Shared endpoints resolve to the larger index. The floor formula
/// `floor(m y / (1 - y))` is corrected against the rounded endpoints so that
/// `interval_index(m, s/(m+s)) == s` holds for the computed endpoint.
pub fn interval_index<T: Real>(m: Degree, y: T) -> Result<u64> {
    check_half_open(y)?;
    if y == T::zero() {
        return Ok(0);
    }
    let raw = (T::from_index(m.get()) * y / (T::one() - y)).floor();
    let raw = raw.to_f64().unwrap_or(f64::INFINITY);
    if !(raw < 9.0e15) {
        return Err(Error::OutOfDomain {
            y: y.as_f64(),
            domain: "[0,1) with representable interval index",
        });
    }
    let mut s = raw as u64;
    while interval_start::<T>(m, s + 1) <= y {
        s += 1;
    }
    while s > 0 && interval_start::<T>(m, s) > y {
        s -= 1;
    }
    Ok(s)
}

/// `ln(z_{m,r}(y) / z_{m,s}(y))`.
pub fn log_weight_ratio<T: Real>(m: Degree, r: u64, s: u64, y: T) -> Result<T> {
    check_open(y)?;
    if r == s {
        return Ok(T::zero());
    }
    Ok(log_basis_weight(m, r, y)? - log_basis_weight(m, s, y)?)
}

/// `m_{r,m,s}(y) = z_{m,r}(y) / z_{m,s}(y)`.
pub fn weight_ratio<T: Real>(m: Degree, r: u64, s: u64, y: T) -> Result<T> {
    Ok(log_weight_ratio(m, r, s, y)?.exp())
}

/// Node `r/(m+r)` of the max-product operator.
#[inline]
pub fn node<T: Real>(m: Degree, r: u64) -> T {
    T::from_index(r) / T::from_index(m.get() + r)
}

/// `M_{r,m,s}(y) = m_{r,m,s}(y) |r/(m+r) - y|`.
pub fn weighted_distance<T: Real>(m: Degree, r: u64, s: u64, y: T) -> Result<T> {
    Ok(weight_ratio(m, r, s, y)? * (node::<T>(m, r) - y).abs())
}

/// `z_{m,r+1}(y) / z_{m,r}(y) = y (m+r+1)/(r+1)`.
#[inline]
pub fn step_up<T: Real>(m: Degree, r: u64, y: T) -> T {
    y * T::from_index(m.get() + r + 1) / T::from_index(r + 1)
}

/// `z_{m,r-1}(y) / z_{m,r}(y) = r / (y (m+r))`, for `r >= 1`.
#[inline]
pub fn step_down<T: Real>(m: Degree, r: u64, y: T) -> T {
    T::from_index(r) / (y * T::from_index(m.get() + r))
}

/// Truncation certificate for a max reduction with the default cap.
///
/// `r_max` is the smallest index `>= s` such that every omitted term
/// satisfies `z_{m,r}(y) sup_g < tol z_{m,s}(y)`.
pub fn truncation_index<T: Real>(m: Degree, y: T, sup_g: T, tol: T) -> Result<TailCertificate<T>> {
    certify_truncation(m, y, sup_g, tol, Reduction::Max, DEFAULT_INDEX_CAP)
}

/// Truncation certificate for either reduction kind.
///
/// Upper and lower tails are both certified by a geometric envelope: the
/// term ratio `z_{r+1}/z_r` decreases in `r`, so once it drops below one
/// at `r_max + 1` every later term is dominated by `z_{r_max+1} q^k`, and
/// symmetrically below `r_min`.
pub fn certify_truncation<T: Real>(
    m: Degree,
    y: T,
    sup_g: T,
    tol: T,
    reduction: Reduction,
    cap: u64,
) -> Result<TailCertificate<T>> {
    check_open(y)?;
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !(sup_g >= T::zero()) {
        return Err(Error::InvalidArgument(format!("sup bound must be nonnegative, got {sup_g}")));
    }
    let infeasible = || Error::TruncationInfeasible {
        m: m.get(),
        y: y.as_f64(),
        tol: tol.as_f64(),
        cap,
    };
    let s = interval_index(m, y)?;
    if s > cap {
        return Err(infeasible());
    }
    // Sum reductions are measured in absolute (normalized) weights.
    let anchor = match reduction {
        Reduction::Max => T::one(),
        Reduction::Sum => log_normalized_weight(m, s, y).exp(),
    };
    let one = T::one();
    // the two tails of a sum add up, so each gets half the budget
    let side_tol = match reduction {
        Reduction::Max => tol,
        Reduction::Sum => tol * T::lit(0.5),
    };
    let omitted = |term: T, ratio: T| match reduction {
        Reduction::Max => term * sup_g,
        Reduction::Sum => term / (one - ratio) * sup_g,
    };

    let mut r_max = s;
    let mut next = anchor * step_up(m, s, y);
    let (upper, decay) = loop {
        let q = step_up(m, r_max + 1, y);
        if q < one {
            let bound = omitted(next, q);
            if bound < side_tol {
                break (bound, q);
            }
        }
        r_max += 1;
        if r_max > cap {
            return Err(infeasible());
        }
        next = next * step_up(m, r_max, y);
    };

    let mut r_min = s;
    let mut lower = T::zero();
    let mut current = anchor;
    while r_min > 0 {
        let below = current * step_down(m, r_min, y);
        let p = if r_min >= 2 { step_down(m, r_min - 1, y) } else { T::zero() };
        if p < one {
            let bound = omitted(below, p);
            if bound < side_tol {
                lower = bound;
                break;
            }
        }
        r_min -= 1;
        current = below;
    }

    let tail_bound = match reduction {
        Reduction::Max => upper.max(lower),
        Reduction::Sum => upper + lower,
    };
    Ok(TailCertificate {
        r_min,
        r_max,
        tail_bound,
        decay_ratio: decay,
    })
}

/// `ln(C(m+r, r) y^r (1-y)^(m+1))`, the log of a classical MKZ weight.
pub fn log_normalized_weight<T: Real>(m: Degree, r: u64, y: T) -> T {
    let m1 = m.get() + 1;
    if r == 0 {
        return T::from_index(m1) * (-y).ln_1p();
    }
    // C(m+r,r) y^r (1-y)^(m+1) = (m+1)/(m+r+1) * b(r; m+r+1, y)
    (T::from_index(m1) / T::from_index(m1 + r)).ln() + ln_binomial_pmf(r, m1 + r, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(m: u64) -> Degree {
        Degree::new(m).unwrap()
    }

    #[test]
    fn degree_rejects_zero_and_gates_theorem() {
        assert!(Degree::new(0).is_err());
        assert!(deg(3).require_theorem_range().is_err());
        assert!(deg(4).require_theorem_range().is_ok());
    }

    #[test]
    fn log_weight_examples() {
        assert_eq!(log_basis_weight(deg(4), 0, 0.3).unwrap(), 0.0);
        assert_eq!(log_basis_weight(deg(4), 1, 0.0).unwrap(), f64::NEG_INFINITY);
        let v: f64 = log_basis_weight(deg(4), 2, 0.5).unwrap();
        // C(6,2) * 0.5^2 = 3.75
        assert!((v - 3.75f64.ln()).abs() < 1e-12);
        assert!(log_basis_weight(deg(4), 2, 1.0).is_err());
        assert!(log_basis_weight(deg(4), 2, -0.1).is_err());
    }

    #[test]
    fn interval_index_examples() {
        assert_eq!(interval_index(deg(4), 0.0).unwrap(), 0);
        assert_eq!(interval_index(deg(4), 0.5).unwrap(), 4);
        // shared endpoint of s = 0 and s = 1
        assert_eq!(interval_index(deg(4), 0.2).unwrap(), 1);
        assert!(interval_index(deg(4), 1.0).is_err());
    }

    #[test]
    fn interval_index_hits_computed_left_endpoints() {
        for m in 1..=64u64 {
            for s in 1..=300u64 {
                let y: f64 = interval_start(deg(m), s);
                assert_eq!(interval_index(deg(m), y).unwrap(), s, "m={m} s={s}");
            }
        }
    }

    #[test]
    fn endpoint_weights_tie() {
        let z0: f64 = log_basis_weight(deg(4), 0, 0.2).unwrap();
        let z1: f64 = log_basis_weight(deg(4), 1, 0.2).unwrap();
        assert!((z0.exp() - 1.0).abs() < 1e-15);
        assert!((z1.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(weight_ratio(deg(4), 3, 3, 0.45).unwrap(), 1.0);
        // y (m+r+1)/(r+1) at r = 4: 0.52 * 9/5
        let v: f64 = weight_ratio(deg(4), 5, 4, 0.52).unwrap();
        assert!((v - 0.936).abs() < 1e-12);
        // 1 / (C(12,2) (1/6)^2) = 36/66
        let v: f64 = weight_ratio(deg(10), 0, 2, 2.0 / 12.0).unwrap();
        assert!((v - 36.0 / 66.0).abs() < 1e-12);
        assert!(weight_ratio(deg(4), 1, 0, 0.0f64).is_err());
    }

    #[test]
    fn weighted_distance_examples() {
        assert_eq!(weighted_distance(deg(4), 4, 4, 0.5).unwrap(), 0.0);
        for m in [1u64, 4, 17, 200] {
            for y in [0.001, 0.2, 0.7] {
                assert!((weighted_distance::<f64>(deg(m), 0, 0, y).unwrap() - y).abs() < 1e-15);
            }
        }
        let v: f64 = weighted_distance(deg(4), 5, 4, 0.52).unwrap();
        let expected = 0.936 * (5.0f64 / 9.0 - 0.52).abs();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.03328).abs() < 1e-5);
    }

    #[test]
    fn truncation_at_midpoint() {
        let m = deg(4);
        let cert = truncation_index(m, 0.5, 1.0, 1e-12).unwrap();
        assert!(cert.r_max >= 4);
        assert!(cert.decay_ratio < 1.0);
        assert!(cert.tail_bound < 1e-12);
        // direct scan: envelope term just beyond r_max is below tol, the one before is not
        let beyond: f64 = weight_ratio(m, cert.r_max + 1, 4, 0.5).unwrap();
        let at: f64 = weight_ratio(m, cert.r_max, 4, 0.5).unwrap();
        assert!(beyond < 1e-12 * (1.0 + 1e-9));
        assert!(at >= 1e-12 * (1.0 - 1e-9));
    }

    #[test]
    fn truncation_near_zero_is_short() {
        let cert = truncation_index(deg(4), 1e-9, 1.0, 1e-12).unwrap();
        assert!(cert.r_max <= 2, "r_max = {}", cert.r_max);
        assert_eq!(cert.r_min, 0);
    }

    #[test]
    fn truncation_cap_reports_infeasible() {
        let err = certify_truncation(deg(4), 0.999, 1.0, 1e-300, Reduction::Max, 100).unwrap_err();
        assert!(matches!(err, Error::TruncationInfeasible { .. }));
        assert!(truncation_index(deg(4), 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn sum_certificate_bounds_mass() {
        let m = deg(10);
        let y = 0.6;
        let cert = certify_truncation(m, y, 1.0, 1e-13, Reduction::Sum, DEFAULT_INDEX_CAP).unwrap();
        let kept: f64 = (cert.r_min..=cert.r_max)
            .map(|r| log_normalized_weight::<f64>(m, r, y).exp())
            .sum();
        assert!((1.0 - kept).abs() < 1e-12);
        assert!(cert.tail_bound < 1e-13);
    }

    #[test]
    fn step_recurrences_match_logs() {
        let m = deg(7);
        let y = 0.41;
        for r in 1..40u64 {
            let up: f64 = step_up(m, r - 1, y);
            let down: f64 = step_down(m, r, y);
            let lr = log_weight_ratio(m, r, r - 1, y).unwrap();
            assert!((up.ln() - lr).abs() < 1e-13);
            assert!((down.ln() + lr).abs() < 1e-13);
        }
    }

    #[test]
    fn locate_reports_dominant_weight() {
        let p = BasisPoint::locate(deg(4), 0.52).unwrap();
        assert_eq!(p.s, 4);
        assert!((p.ratio(4).unwrap() - 1.0f64).abs() < 1e-15);
        let origin = BasisPoint::locate(deg(4), 0.0f64).unwrap();
        assert_eq!((origin.s, origin.log_zs), (0, 0.0));
    }
}
