//! Nonnegative continuous functions on `[0,1]` fed to the operators.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Where a [`TestFunction`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSource {
    Builtin,
    PiecewiseLinearFile,
    Composite,
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["e0", "identity", "sqrt", "tent", "sinpi"];

/// A named nonnegative continuous function on `[0,1]`, optionally carrying
/// its exact modulus of continuity.
#[derive(Clone)]
pub struct TestFunction<T> {
    name: String,
    eval: ScalarFn<T>,
    sup_bound: T,
    analytic_modulus: Option<ScalarFn<T>>,
    source: FunctionSource,
}

impl<T> fmt::Debug for TestFunction<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound)
            .field("analytic_modulus", &self.analytic_modulus.is_some())
            .field("source", &self.source)
            .finish()
    }
}

impl<T: Real> TestFunction<T> {
    pub fn new(
        name: impl Into<String>,
        sup_bound: T,
        source: FunctionSource,
        eval: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            sup_bound,
            analytic_modulus: None,
            source,
        }
    }

    /// Attaches an exact modulus `delta -> omega(g, delta)`.
    pub fn with_modulus(mut self, modulus: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.analytic_modulus = Some(Arc::new(modulus));
        self
    }

    pub fn without_modulus(mut self) -> Self {
        self.analytic_modulus = None;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn eval(&self, y: T) -> T {
        (self.eval)(y)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sup_bound(&self) -> T {
        self.sup_bound
    }

    pub fn source(&self) -> FunctionSource {
        self.source
    }

    pub fn has_analytic_modulus(&self) -> bool {
        self.analytic_modulus.is_some()
    }

    pub fn analytic_modulus(&self, delta: T) -> Option<T> {
        self.analytic_modulus.as_ref().map(|w| w(delta))
    }

    /// Constant function `c >= 0`.
    pub fn constant(c: T) -> Self {
        Self::new(format!("const({c})"), c, FunctionSource::Builtin, move |_| c).with_modulus(|_| T::zero())
    }

    /// `c * g` for `c >= 0`.
    pub fn scaled(&self, c: T) -> Self {
        let g = self.eval.clone();
        let mut out = Self::new(
            format!("{}*{}", c, self.name),
            c * self.sup_bound,
            FunctionSource::Composite,
            move |y| c * g(y),
        );
        if let Some(w) = self.analytic_modulus.clone() {
            out = out.with_modulus(move |d| c * w(d));
        }
        out
    }

    /// `g + h`.
    pub fn sum(&self, other: &Self) -> Self {
        let (g, h) = (self.eval.clone(), other.eval.clone());
        Self::new(
            format!("({}+{})", self.name, other.name),
            self.sup_bound + other.sup_bound,
            FunctionSource::Composite,
            move |y| g(y) + h(y),
        )
    }

    /// `a g ∨ b h` for `a, b >= 0`.
    pub fn max_combination(a: T, g: &Self, b: T, h: &Self) -> Self {
        let (ge, he) = (g.eval.clone(), h.eval.clone());
        Self::new(
            format!("({a}*{} v {b}*{})", g.name, h.name),
            (a * g.sup_bound).max(b * h.sup_bound),
            FunctionSource::Composite,
            move |y| (a * ge(y)).max(b * he(y)),
        )
    }

    /// `|g - h|`.
    pub fn abs_diff(&self, other: &Self) -> Self {
        let (g, h) = (self.eval.clone(), other.eval.clone());
        Self::new(
            format!("|{}-{}|", self.name, other.name),
            self.sup_bound.max(other.sup_bound),
            FunctionSource::Composite,
            move |y| (g(y) - h(y)).abs(),
        )
    }
}

/// `phi_y(t) = |t - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceFunction<T> {
    pub anchor: T,
}

impl<T: Real> DistanceFunction<T> {
    pub fn new(anchor: T) -> Result<Self> {
        if !(anchor >= T::zero() && anchor <= T::one()) {
            return Err(Error::OutOfDomain {
                y: anchor.as_f64(),
                domain: "[0,1]",
            });
        }
        Ok(Self { anchor })
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        (t - self.anchor).abs()
    }

    pub fn to_test_function(&self) -> TestFunction<T> {
        let y = self.anchor;
        TestFunction::new(format!("phi({y})"), T::one(), FunctionSource::Composite, move |t| (t - y).abs())
            .with_modulus(|d| d.min(T::one()))
    }
}

/// Builtin registry.
///
/// `sinpi` deliberately carries no analytic modulus; it is used for
/// diagnostics only.
pub fn builtin<T: Real>(name: &str) -> Option<TestFunction<T>> {
    let one = T::one();
    let half = T::lit(0.5);
    let f = match name {
        "e0" => TestFunction::new("e0", one, FunctionSource::Builtin, move |_| one).with_modulus(|_| T::zero()),
        "identity" => {
            TestFunction::new("identity", one, FunctionSource::Builtin, |y| y).with_modulus(move |d| d.min(one))
        }
        "sqrt" => TestFunction::new("sqrt", one, FunctionSource::Builtin, |y: T| y.max(T::zero()).sqrt())
            .with_modulus(move |d: T| d.min(one).sqrt()),
        "tent" => TestFunction::new("tent", half, FunctionSource::Builtin, move |y: T| y.min(one - y))
            .with_modulus(move |d| d.min(half)),
        "sinpi" => TestFunction::new("sinpi", one, FunctionSource::Builtin, |y: T| {
            (T::PI() * y).sin().max(T::zero())
        }),
        _ => return None,
    };
    Some(f)
}

/// Continuous piecewise-linear function given by knots `0 = y_0 < ... < y_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        let bad = |msg: String| Err(Error::FunctionFile(msg));
        if knots.len() != values.len() {
            return bad(format!("{} knots but {} values", knots.len(), values.len()));
        }
        if knots.len() < 2 {
            return bad("need at least two knots".into());
        }
        if knots[0] != T::zero() {
            return bad(format!("first knot must be 0, got {}", knots[0]));
        }
        if knots[knots.len() - 1] != T::one() {
            return bad(format!("last knot must be 1, got {}", knots[knots.len() - 1]));
        }
        if let Some(w) = knots.windows(2).position(|w| !(w[0] < w[1])) {
            return bad(format!("knots not strictly increasing at index {}", w + 1));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
            return bad(format!("value at knot {i} must be finite and >= 0"));
        }
        Ok(Self { knots, values })
    }

    /// Parses the two-column `y g(y)` text format. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::FunctionFile(format!(
                    "line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |tok: &str| {
                tok.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::FunctionFile(format!("line {}: {tok:?}: {e}", lineno + 1)))
            };
            knots.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        Self::new(knots, values)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::FunctionFile(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn eval(&self, y: T) -> T {
        let y = y.max(T::zero()).min(T::one());
        let k = self.knots.partition_point(|&t| t <= y);
        if k >= self.knots.len() {
            return self.values[self.values.len() - 1];
        }
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        let t = (y - x0) / (x1 - x0);
        v0 + t * (v1 - v0)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn into_test_function(self, name: impl Into<String>) -> TestFunction<T> {
        let sup = self.sup();
        TestFunction::new(name, sup, FunctionSource::PiecewiseLinearFile, move |y| self.eval(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_evaluate() {
        let id: TestFunction<f64> = builtin("identity").unwrap();
        assert_eq!(id.eval(0.3), 0.3);
        assert_eq!(id.analytic_modulus(0.25), Some(0.25));
        let e0: TestFunction<f64> = builtin("e0").unwrap();
        assert_eq!(e0.analytic_modulus(0.4), Some(0.0));
        let tent: TestFunction<f64> = builtin("tent").unwrap();
        assert_eq!(tent.eval(0.8), 0.19999999999999996);
        assert_eq!(tent.analytic_modulus(0.7), Some(0.5));
        let sinpi: TestFunction<f64> = builtin("sinpi").unwrap();
        assert!(!sinpi.has_analytic_modulus());
        assert!(builtin::<f64>("nope").is_none());
        for name in BUILTIN_NAMES {
            assert!(builtin::<f32>(name).is_some());
        }
    }

    #[test]
    fn combinators() {
        let id: TestFunction<f64> = builtin("identity").unwrap();
        let e0: TestFunction<f64> = builtin("e0").unwrap();
        assert_eq!(id.sum(&e0).eval(0.25), 1.25);
        assert_eq!(id.scaled(3.0).eval(0.5), 1.5);
        assert_eq!(id.scaled(3.0).analytic_modulus(0.1), Some(0.30000000000000004));
        assert_eq!(TestFunction::max_combination(2.0, &id, 0.5, &e0).eval(0.2), 0.5);
        assert_eq!(id.abs_diff(&e0).eval(0.25), 0.75);
    }

    #[test]
    fn piecewise_linear_parses_and_interpolates() {
        let pl = PiecewiseLinear::<f64>::parse("# knots\n0 0\n0.5 1\n\n1 0.5\n").unwrap();
        assert_eq!(pl.eval(0.25), 0.5);
        assert_eq!(pl.eval(0.75), 0.75);
        assert_eq!(pl.eval(1.0), 0.5);
        assert_eq!(pl.eval(0.0), 0.0);
        assert_eq!(pl.sup(), 1.0);
        let f = pl.into_test_function("file");
        assert_eq!(f.source(), FunctionSource::PiecewiseLinearFile);
    }

    #[test]
    fn piecewise_linear_rejects_bad_files() {
        for text in [
            "0.1 0\n1 1\n",
            "0 0\n0.9 1\n",
            "0 0\n0.5 1\n0.5 2\n1 0\n",
            "0 0\n1 -1\n",
            "0 0 0\n1 1\n",
            "0 x\n1 1\n",
            "0 0\n",
        ] {
            assert!(PiecewiseLinear::<f64>::parse(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn distance_function() {
        let phi = DistanceFunction::<f64>::new(0.3).unwrap();
        assert_eq!(phi.eval(0.3), 0.0);
        assert!((phi.to_test_function().eval(0.1) - 0.2).abs() < 1e-16);
        assert!(DistanceFunction::new(1.5).is_err());
    }
}
