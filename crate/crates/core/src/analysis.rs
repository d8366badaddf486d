//! Moduli of continuity, the `alpha`-family error bound and empirical rates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::basis::Degree;
use crate::error::{Error, Result};
use crate::operators::{grid_point, TestFunction};
use crate::scalar::Real;

/// Default grid size for modulus estimates of functions without an exact modulus.
pub const DEFAULT_MODULUS_GRID: usize = 4097;

/// Smoothing exponent `alpha >= 2`; the bound decays like `m^-(1 - 1/alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SmoothingExponent(u32);

impl SmoothingExponent {
    /// Largest exponent accepted from the command line.
    pub const CLI_MAX: u32 = 64;

    pub fn new(alpha: u32) -> Result<Self> {
        if alpha < 2 {
            return Err(Error::InvalidArgument(format!("alpha must be >= 2, got {alpha}")));
        }
        Ok(Self(alpha))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `1 - 1/alpha`.
    pub fn order<T: Real>(self) -> T {
        T::one() - T::from_index(self.0 as u64).recip()
    }

    /// `delta_m = m^-(1 - 1/alpha)`; `1/sqrt(m)` when `alpha = 2`.
    pub fn delta<T: Real>(self, m: Degree) -> T {
        let m = T::from_index(m.get());
        if self.0 == 2 {
            return m.sqrt().recip();
        }
        m.powf(-self.order::<T>())
    }

    /// `y^(1/alpha)`; `sqrt(y)` when `alpha = 2`.
    pub fn root<T: Real>(self, y: T) -> T {
        if y == T::zero() {
            return T::zero();
        }
        if self.0 == 2 {
            return y.sqrt();
        }
        y.powf(T::from_index(self.0 as u64).recip())
    }

    /// `{2, ..., hi}`.
    pub fn range(hi: u32) -> Result<Vec<Self>> {
        (2..=hi).map(Self::new).collect()
    }
}

impl TryFrom<u32> for SmoothingExponent {
    type Error = Error;

    fn try_from(a: u32) -> Result<Self> {
        Self::new(a)
    }
}

impl From<SmoothingExponent> for u32 {
    fn from(a: SmoothingExponent) -> u32 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMethod {
    Analytic,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusEstimate<T> {
    pub delta: T,
    pub value: T,
    pub method: ModulusMethod,
    pub grid_n: Option<usize>,
}

/// `omega(g, delta)`: the exact modulus when `g` carries one, otherwise the
/// grid estimate from [`grid_modulus`].
pub fn modulus<T: Real>(g: &TestFunction<T>, delta: T, grid_n: usize) -> Result<ModulusEstimate<T>> {
    check_delta(delta)?;
    if let Some(value) = g.analytic_modulus(delta) {
        return Ok(ModulusEstimate {
            delta,
            value,
            method: ModulusMethod::Analytic,
            grid_n: None,
        });
    }
    grid_modulus(g, delta, grid_n)
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta <= T::one()) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1], got {delta}")));
    }
    Ok(())
}

/// Largest `|g(y_i) - g(y_j)|` over grid pairs with `|y_i - y_j| <= delta`.
///
/// Only pairs that genuinely satisfy the distance constraint are compared,
/// so the estimate never exceeds the true modulus. A monotone deque keeps the
/// running window maximum and minimum.
pub fn grid_modulus<T: Real>(g: &TestFunction<T>, delta: T, grid_n: usize) -> Result<ModulusEstimate<T>> {
    check_delta(delta)?;
    if grid_n < 16 {
        return Err(Error::InvalidArgument(format!("modulus grid needs >= 16 points, got {grid_n}")));
    }
    let steps = T::from_index((grid_n - 1) as u64);
    let mut window = (delta * steps).floor().to_usize().unwrap_or(grid_n - 1).min(grid_n - 1);
    while window > 0 && T::from_index(window as u64) / steps > delta {
        window -= 1;
    }
    while window + 1 < grid_n && T::from_index((window + 1) as u64) / steps <= delta {
        window += 1;
    }
    let values: Vec<T> = (0..grid_n).map(|i| g.eval(grid_point(i, grid_n))).collect();
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best = T::zero();
    for (j, &v) in values.iter().enumerate() {
        while hi.back().is_some_and(|&k| values[k] <= v) {
            hi.pop_back();
        }
        hi.push_back(j);
        while lo.back().is_some_and(|&k| values[k] >= v) {
            lo.pop_back();
        }
        lo.push_back(j);
        let start = j.saturating_sub(window);
        while hi.front().is_some_and(|&k| k < start) {
            hi.pop_front();
        }
        while lo.front().is_some_and(|&k| k < start) {
            lo.pop_front();
        }
        let spread = values[hi[0]] - values[lo[0]];
        if spread > best {
            best = spread;
        }
    }
    Ok(ModulusEstimate {
        delta,
        value: best,
        method: ModulusMethod::Grid,
        grid_n: Some(grid_n),
    })
}

fn check_closed<T: Real>(y: T) -> Result<()> {
    if !(y >= T::zero() && y <= T::one()) {
        return Err(Error::OutOfDomain {
            y: y.as_f64(),
            domain: "[0,1]",
        });
    }
    Ok(())
}

/// `1 + 8 (1-y) y^(1/alpha)`.
pub fn bound_prefactor<T: Real>(alpha: SmoothingExponent, y: T) -> T {
    T::one() + T::lit(8.0) * (T::one() - y) * alpha.root(y)
}

/// `(1 + 8 (1-y) y^(1/alpha)) omega(g; m^-(1 - 1/alpha))`, for `m >= 4`.
pub fn theorem_bound<T: Real>(
    g: &TestFunction<T>,
    m: Degree,
    alpha: SmoothingExponent,
    y: T,
    grid_n: usize,
) -> Result<T> {
    m.require_theorem_range()?;
    check_closed(y)?;
    let omega = modulus(g, alpha.delta::<T>(m), grid_n)?;
    Ok(bound_prefactor(alpha, y) * omega.value)
}

/// `8 (1-y) y^(1/alpha) m^-(1 - 1/alpha)`, the bound on `E_m(y)`, for `m >= 4`.
pub fn distance_transform_bound<T: Real>(m: Degree, alpha: SmoothingExponent, y: T) -> Result<T> {
    m.require_theorem_range()?;
    check_closed(y)?;
    Ok(T::lit(8.0) * (T::one() - y) * alpha.root(y) * alpha.delta::<T>(m))
}

/// Exponent in `alphas` minimizing [`theorem_bound`]; ties go to the smaller exponent.
pub fn best_alpha_bound<T: Real>(
    g: &TestFunction<T>,
    m: Degree,
    y: T,
    alphas: &[SmoothingExponent],
    grid_n: usize,
) -> Result<(SmoothingExponent, T)> {
    let mut sorted = alphas.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<(SmoothingExponent, T)> = None;
    for alpha in sorted {
        let b = theorem_bound(g, m, alpha, y, grid_n)?;
        if best.is_none_or(|(_, cur)| b < cur) {
            best = Some((alpha, b));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("alpha set is empty".into()))
}

/// Least-squares slope of `ln(error)` against `ln(m)`.
pub fn rate_fit<T: Real>(points: &[(u64, T)]) -> Result<T> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(m, e)) = points.iter().find(|(m, e)| *m == 0 || !(*e > T::zero())) {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs m > 0 and positive errors, got ({m}, {e})"
        )));
    }
    let mut ms: Vec<u64> = points.iter().map(|p| p.0).collect();
    ms.sort_unstable();
    if ms.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("rate fit needs distinct m values".into()));
    }
    let n = T::from_index(points.len() as u64);
    let xs: Vec<T> = points.iter().map(|p| T::from_index(p.0).ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.1.ln()).collect();
    let mean_x = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let mean_y = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (sxy, sxx) = xs.iter().zip(&ys).fold((T::zero(), T::zero()), |(sxy, sxx), (&x, &y)| {
        let dx = x - mean_x;
        (sxy + dx * (y - mean_y), sxx + dx * dx)
    });
    Ok(sxy / sxx)
}

/// One evaluated instance of the approximation bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport<T> {
    pub g_name: String,
    pub m: Degree,
    pub alpha: SmoothingExponent,
    pub y: T,
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
    pub pass: bool,
}

impl<T: Real> BoundReport<T> {
    /// Relative slack admitted by `pass`.
    pub const SLACK: f64 = 1e-10;

    pub fn new(g_name: impl Into<String>, m: Degree, alpha: SmoothingExponent, y: T, lhs: T, rhs: T) -> Self {
        let margin = rhs - lhs;
        let pass = margin >= -T::lit(Self::SLACK) * rhs.max(T::one());
        Self {
            g_name: g_name.into(),
            m,
            alpha,
            y,
            lhs,
            rhs,
            margin,
            pass,
        }
    }
}
