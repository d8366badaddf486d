//! Evaluation of the max-product MKZ operator `Z_m(g)(y)`, the classical
//! MKZ operator `M_m(g; y)` and the distance transform `E_m(y) = Z_m(phi_y)(y)`.

mod function;

pub use function::{
    builtin, DistanceFunction, FunctionSource, PiecewiseLinear, ScalarFn, TestFunction, BUILTIN_NAMES,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{
    certify_truncation, interval_index, log_normalized_weight, node, step_down, step_up, Degree, Reduction,
    DEFAULT_INDEX_CAP,
};
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Operator value with the truncation it was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult<T> {
    pub value: T,
    pub r_max_used: u64,
    pub tail_bound: T,
}

impl<T: Real> EvalResult<T> {
    fn exact(value: T) -> Self {
        Self {
            value,
            r_max_used: 0,
            tail_bound: T::zero(),
        }
    }
}

/// Sampling nodes of the classical operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeConvention {
    /// `r / (m + r + 1)`
    #[default]
    MkzClassic,
    /// `r / (m + r)`
    CheneySharma,
}

impl NodeConvention {
    #[inline]
    pub fn node<T: Real>(self, m: Degree, r: u64) -> T {
        match self {
            Self::MkzClassic => T::from_index(r) / T::from_index(m.get() + r + 1),
            Self::CheneySharma => node(m, r),
        }
    }
}

impl std::str::FromStr for NodeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mkz_classic" | "mkz-classic" => Ok(Self::MkzClassic),
            "cheney_sharma" | "cheney-sharma" => Ok(Self::CheneySharma),
            other => Err(Error::InvalidArgument(format!("unknown node convention {other:?}"))),
        }
    }
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
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

/// Ratio of maxima `max_r z_r g(r/(m+r)) / max_r z_r` for `y` in `(0,1)`.
///
/// Weights are propagated from the dominant index `s` outwards with the
/// exact term ratios, so `z_s` is represented by exactly one.
fn max_product_interior<T: Real>(
    m: Degree,
    y: T,
    tol: T,
    sup_g: T,
    g: impl Fn(T) -> T,
) -> Result<EvalResult<T>> {
    let cert = certify_truncation(m, y, sup_g, tol, Reduction::Max, DEFAULT_INDEX_CAP)?;
    let s = interval_index(m, y)?;
    let mut den = T::one();
    let mut num = g(node(m, s));
    let mut w = T::one();
    for r in s + 1..=cert.r_max {
        w = w * step_up(m, r - 1, y);
        den = den.max(w);
        num = num.max(w * g(node(m, r)));
    }
    w = T::one();
    for r in (cert.r_min..s).rev() {
        w = w * step_down(m, r + 1, y);
        den = den.max(w);
        num = num.max(w * g(node(m, r)));
    }
    Ok(EvalResult {
        value: num / den,
        r_max_used: cert.r_max,
        tail_bound: cert.tail_bound,
    })
}

/// `Z_m^(M)(g)(y)` on `[0,1]`, with `Z(g)(0) = g(0)` and `Z(g)(1) = g(1)`.
///
/// Terms omitted by the truncation satisfy `z_r sup_g < tol z_s`, so the
/// returned value is within `tail_bound < tol` of the infinite reduction.
pub fn eval_max_product_mkz<T: Real>(g: &TestFunction<T>, m: Degree, y: T, tol: T) -> Result<EvalResult<T>> {
    check_closed(y)?;
    check_tol(tol)?;
    if y == T::zero() || y == T::one() {
        return Ok(EvalResult::exact(g.eval(y)));
    }
    max_product_interior(m, y, tol, g.sup_bound(), |t| g.eval(t))
}

/// `E_m(y) = Z_m^(M)(phi_y)(y) = max_r M_{r,m,s}(y)`; zero at both endpoints.
pub fn eval_distance_transform<T: Real>(m: Degree, y: T, tol: T) -> Result<EvalResult<T>> {
    check_closed(y)?;
    check_tol(tol)?;
    if y == T::zero() || y == T::one() {
        return Ok(EvalResult::exact(T::zero()));
    }
    max_product_interior(m, y, tol, T::one(), |t| (t - y).abs())
}

/// Truncated classical weights `C(m+r,r) y^r (1-y)^(m+1)` for `r` in `r_min..=r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalWeights<T> {
    pub r_min: u64,
    pub weights: Vec<T>,
    pub tail_bound: T,
}

impl<T: Real> ClassicalWeights<T> {
    /// Weights are anchored at the mode `s` in the log domain and extended
    /// with `w_{r+1} = w_r y (m+r+1)/(r+1)`; starting from `w_0 = (1-y)^(m+1)`
    /// underflows for large `m` near `y = 1`.
    ///
    /// The omitted probability mass is certified below `mass_tol`.
    pub fn compute(m: Degree, y: T, mass_tol: T) -> Result<Self> {
        if !(y >= T::zero() && y < T::one()) {
            return Err(Error::OutOfDomain {
                y: y.as_f64(),
                domain: "[0,1)",
            });
        }
        check_tol(mass_tol)?;
        if y == T::zero() {
            return Ok(Self {
                r_min: 0,
                weights: vec![T::one()],
                tail_bound: T::zero(),
            });
        }
        let cert = certify_truncation(m, y, T::one(), mass_tol, Reduction::Sum, DEFAULT_INDEX_CAP)?;
        let s = interval_index(m, y)?;
        let len = (cert.r_max - cert.r_min + 1) as usize;
        let mut weights = vec![T::zero(); len];
        let at = |r: u64| (r - cert.r_min) as usize;
        let mut w = log_normalized_weight(m, s, y).exp();
        weights[at(s)] = w;
        for r in s + 1..=cert.r_max {
            w = w * step_up(m, r - 1, y);
            weights[at(r)] = w;
        }
        w = weights[at(s)];
        for r in (cert.r_min..s).rev() {
            w = w * step_down(m, r + 1, y);
            weights[at(r)] = w;
        }
        Ok(Self {
            r_min: cert.r_min,
            weights,
            tail_bound: cert.tail_bound,
        })
    }

    pub fn r_max(&self) -> u64 {
        self.r_min + self.weights.len() as u64 - 1
    }

    /// Ascending-`r` compensated sum of the retained weights.
    pub fn sum(&self) -> T {
        let mut acc = CompensatedSum::default();
        for &w in &self.weights {
            acc.add(w);
        }
        acc.value()
    }
}

/// `M_m(g; y) = sum_r C(m+r,r) y^r (1-y)^(m+1) g(node_r)` for `y` in `[0,1)`.
pub fn eval_classical_mkz<T: Real>(
    g: &TestFunction<T>,
    m: Degree,
    y: T,
    tol: T,
    nodes: NodeConvention,
) -> Result<EvalResult<T>> {
    check_tol(tol)?;
    let weights = ClassicalWeights::compute(m, y, tol / g.sup_bound().max(T::one()))?;
    let mut acc = CompensatedSum::default();
    for (i, &w) in weights.weights.iter().enumerate() {
        let r = weights.r_min + i as u64;
        acc.add(w * g.eval(nodes.node(m, r)));
    }
    Ok(EvalResult {
        value: acc.value(),
        r_max_used: weights.r_max(),
        tail_bound: weights.tail_bound * g.sup_bound(),
    })
}

/// `i`-th point of the uniform `n`-point grid on `[0,1]`.
#[inline]
pub fn grid_point<T: Real>(i: usize, n: usize) -> T {
    if i + 1 == n {
        return T::one();
    }
    T::from_index(i as u64) / T::from_index((n - 1) as u64)
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {grid_n}")));
    }
    Ok(())
}

fn argmax<T: Real>(errors: Vec<(T, T)>) -> (T, T) {
    errors
        .into_iter()
        .fold((T::neg_infinity(), T::zero()), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// `max_i |Z_m(g)(y_i) - g(y_i)|` over the `grid_n`-point uniform grid on
/// `[0,1]`, with the first maximizer.
pub fn sup_error<T: Real>(g: &TestFunction<T>, m: Degree, grid_n: usize, tol: T) -> Result<(T, T)> {
    check_grid(grid_n)?;
    let errors = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let y = grid_point::<T>(i, grid_n);
            let z = eval_max_product_mkz(g, m, y, tol)?;
            Ok(((z.value - g.eval(y)).abs(), y))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax(errors))
}

/// Classical counterpart of [`sup_error`] over the grid points in `[0,1)`.
pub fn sup_error_classical<T: Real>(
    g: &TestFunction<T>,
    m: Degree,
    grid_n: usize,
    tol: T,
    nodes: NodeConvention,
) -> Result<(T, T)> {
    check_grid(grid_n)?;
    let errors = (0..grid_n - 1)
        .into_par_iter()
        .map(|i| {
            let y = grid_point::<T>(i, grid_n);
            let v = eval_classical_mkz(g, m, y, tol, nodes)?;
            Ok(((v.value - g.eval(y)).abs(), y))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax(errors))
}
