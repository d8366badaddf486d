//! Brute-force numerical verification of the localization lemmas, the
//! operator axioms and the approximation bound.
//!
//! Every check is a sweep over independent cases. Sweeps run in parallel
//! but partial tallies are merged in a fixed key order, so reports are
//! reproducible bit for bit. Failures are data: they are counted and up to
//! [`WITNESS_CAP`] of them are kept as witnesses.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{distance_transform_bound, theorem_bound, BoundReport, SmoothingExponent};
use crate::basis::{interval_bounds, interval_index, log_basis_weight, node, Degree};
use crate::error::{Error, Result};
use crate::operators::{
    builtin, eval_distance_transform, eval_max_product_mkz, grid_point, PiecewiseLinear, TestFunction,
};

/// Maximum number of failing witnesses kept per report.
pub const WITNESS_CAP: usize = 100;

/// Half-width of the band around a hypothesis boundary inside which
/// cases are skipped rather than asserted.
pub const HYPOTHESIS_GUARD: f64 = 1e-9;

/// Scope note attached to weighted-distance monotonicity reports.
pub const LEMMA_4_3_NOTE: &str = "branch (ii) is checked for 1 <= r <= s-1 only: the stated range r in {0..s} \
     admits r = s, where the hypothesis fails, and r = 0, where M_{r-1} does not exist";

/// Scope note attached to axiom reports.
pub const AXIOMS_NOTE: &str =
    "the monotonicity premise g <= h is established on the evaluation grid only; \
     pointwise-ordered pairs (g, g v h) and (h, g v h) are always checked";

/// Parameters of a lemma or bound sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub m_values: Vec<Degree>,
    pub s_max: u64,
    pub r_max: u64,
    pub y_per_interval: usize,
    pub alphas: Vec<SmoothingExponent>,
    pub tol: f64,
}

impl Default for SweepSpec {
    /// `m in 1..=64`, `s, r <= 300`, 5 interior points per interval,
    /// `alpha in {2,3,4,5}`, tolerance `1e-10`.
    fn default() -> Self {
        Self {
            m_values: (1..=64).map(|m| Degree::new(m).unwrap()).collect(),
            s_max: 300,
            r_max: 300,
            y_per_interval: 5,
            alphas: SmoothingExponent::range(5).unwrap(),
            tol: 1e-10,
        }
    }
}

impl SweepSpec {
    /// `m in {4, 8, ..., 256}`, `alpha in {2, ..., 8}`.
    pub fn theorem_default() -> Self {
        Self {
            m_values: (1..=64).map(|k| Degree::new(4 * k).unwrap()).collect(),
            alphas: SmoothingExponent::range(8).unwrap(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one m".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one alpha".into()));
        }
        if self.y_per_interval == 0 {
            return Err(Error::InvalidArgument("y_per_interval must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Fails unless every `m` satisfies the `m >= 4` hypothesis.
    pub fn require_theorem_range(&self) -> Result<()> {
        self.m_values.iter().try_for_each(|m| m.require_theorem_range().map(|_| ()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub parameters: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    fn new(parameters: &[(&str, f64)], lhs: f64, rhs: f64) -> Self {
        Self {
            parameters: parameters.iter().map(|&(k, v)| (k.to_owned(), v)).collect(),
            lhs,
            rhs,
        }
    }
}

/// Outcome of one verification sweep. `worst_margin` is the smallest
/// `rhs - lhs` seen (positive when the inequality holds strictly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub cases_total: u64,
    pub cases_failed: u64,
    pub worst_margin: f64,
    pub witnesses: Vec<Witness>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.cases_failed == 0
    }

    /// Concatenates `parts` in order under a new name.
    pub fn combine(check_name: &str, parts: impl IntoIterator<Item = VerificationReport>) -> Self {
        let tally = parts.into_iter().fold(Tally::default(), |acc, r| {
            acc.merge(Tally {
                total: r.cases_total,
                failed: r.cases_failed,
                worst: r.worst_margin,
                witnesses: r.witnesses,
            })
        });
        tally.finish(check_name)
    }

    /// Adds `key = value` to every witness.
    pub fn tag_witnesses(&mut self, key: &str, value: f64) {
        for w in &mut self.witnesses {
            w.parameters.insert(key.to_owned(), value);
        }
    }
}

#[derive(Debug, Clone)]
struct Tally {
    total: u64,
    failed: u64,
    worst: f64,
    witnesses: Vec<Witness>,
}

impl Default for Tally {
    fn default() -> Self {
        Self {
            total: 0,
            failed: 0,
            worst: f64::INFINITY,
            witnesses: Vec::new(),
        }
    }
}

impl Tally {
    /// Records `lhs <= rhs + tol` style cases; `ok` carries the verdict.
    fn case(&mut self, ok: bool, lhs: f64, rhs: f64, params: impl FnOnce() -> Vec<(&'static str, f64)>) {
        self.total += 1;
        let margin = rhs - lhs;
        if margin < self.worst {
            self.worst = margin;
        }
        if !ok {
            self.failed += 1;
            if self.witnesses.len() < WITNESS_CAP {
                self.witnesses.push(Witness::new(&params(), lhs, rhs));
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        self.failed += other.failed;
        self.worst = self.worst.min(other.worst);
        let room = WITNESS_CAP.saturating_sub(self.witnesses.len());
        self.witnesses.extend(other.witnesses.into_iter().take(room));
        self
    }

    fn finish(self, name: &str) -> VerificationReport {
        VerificationReport {
            check_name: name.to_owned(),
            cases_total: self.total,
            cases_failed: self.failed,
            worst_margin: self.worst,
            witnesses: self.witnesses,
        }
    }
}

fn merge_all(parts: Vec<Tally>) -> Tally {
    parts.into_iter().fold(Tally::default(), Tally::merge)
}

/// `n` interior points of `[s/(m+s), (s+1)/(m+s+1)]`, equally spaced.
pub fn interval_samples(m: Degree, s: u64, n: usize) -> Vec<f64> {
    let (lo, hi) = interval_bounds::<f64>(m, s);
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

/// `ln z_{m,r}(y)` for `r` in `0..=upto`.
fn log_weights(m: Degree, y: f64, upto: u64) -> Vec<f64> {
    (0..=upto).map(|r| log_basis_weight(m, r, y).unwrap()).collect()
}

fn interval_pairs(spec: &SweepSpec, min_m: u64) -> Vec<(Degree, u64)> {
    spec.m_values
        .iter()
        .filter(|m| m.get() >= min_m)
        .flat_map(|&m| (0..=spec.s_max).map(move |s| (m, s)))
        .collect()
}

/// Weight dominance: `z_{m,r}(y) / z_{m,s}(y) <= 1` on the `s`-th interval.
pub fn check_lemma_4_1(spec: &SweepSpec) -> Result<VerificationReport> {
    spec.validate()?;
    let parts = interval_pairs(spec, 1)
        .into_par_iter()
        .map(|(m, s)| {
            let mut tally = Tally::default();
            for y in interval_samples(m, s, spec.y_per_interval) {
                let lz = log_weights(m, y, spec.r_max);
                let lzs = log_basis_weight(m, s, y).unwrap();
                for (r, &l) in lz.iter().enumerate() {
                    let ratio = if r as u64 == s { 1.0 } else { (l - lzs).exp() };
                    tally.case(ratio <= 1.0 + spec.tol, ratio, 1.0, || {
                        vec![("m", m.get() as f64), ("s", s as f64), ("y", y), ("r", r as f64)]
                    });
                }
            }
            tally
        })
        .collect();
    Ok(merge_all(parts).finish("lemma_4_1"))
}

/// Localization: the maximal weight on the `s`-th interval is `z_{m,s}`.
///
/// Interior samples require the brute-force argmax and [`interval_index`]
/// to both equal `s`; `lhs` is the largest competing ratio `z_r/z_s`,
/// which must stay below one. At the left endpoint `s/(m+s)` (for
/// `s >= 1`) a tie with `z_{s-1}` is expected and accepted within `tol`.
pub fn check_lemma_4_2(spec: &SweepSpec) -> Result<VerificationReport> {
    spec.validate()?;
    let parts = interval_pairs(spec, 1)
        .into_par_iter()
        .map(|(m, s)| {
            let mut tally = Tally::default();
            let upto = spec.r_max.max(s + 1);
            let scan = |y: f64| {
                let lz = log_weights(m, y, upto);
                let lzs = lz[s as usize];
                let (mut argmax, mut best) = (0u64, f64::NEG_INFINITY);
                let mut rival = f64::NEG_INFINITY;
                for (r, &l) in lz.iter().enumerate() {
                    if l > best {
                        best = l;
                        argmax = r as u64;
                    }
                    if r as u64 != s && l > rival {
                        rival = l;
                    }
                }
                (argmax, (rival - lzs).exp(), (best - lzs).exp())
            };
            for y in interval_samples(m, s, spec.y_per_interval) {
                let (argmax, rival, _) = scan(y);
                let located = interval_index(m, y).unwrap();
                let ok = argmax == s && located == s && rival < 1.0;
                tally.case(ok, rival, 1.0, || {
                    vec![
                        ("m", m.get() as f64),
                        ("s", s as f64),
                        ("y", y),
                        ("argmax", argmax as f64),
                        ("interval_index", located as f64),
                    ]
                });
            }
            if s >= 1 {
                let (lo, _) = interval_bounds::<f64>(m, s);
                let (argmax, _, top) = scan(lo);
                tally.case(top <= 1.0 + spec.tol, top, 1.0, || {
                    vec![("m", m.get() as f64), ("s", s as f64), ("y", lo), ("argmax", argmax as f64)]
                });
            }
            tally
        })
        .collect();
    Ok(merge_all(parts).finish("lemma_4_2"))
}

/// `phi(r) = r - (r + 1 + (s+1)^2/m)^(1/alpha)`; hypothesis (i) reads `s <= phi(r)`.
pub fn threshold_upper(m: Degree, alpha: SmoothingExponent, s: u64, r: u64) -> f64 {
    let s1 = (s + 1) as f64;
    r as f64 - alpha.root((r + 1) as f64 + s1 * s1 / m.get() as f64)
}

/// `r + (r + s^2/m)^(1/alpha)`; hypothesis (ii) reads `s >= ` this value.
pub fn threshold_lower(m: Degree, alpha: SmoothingExponent, s: u64, r: u64) -> f64 {
    let sf = s as f64;
    r as f64 + alpha.root(r as f64 + sf * sf / m.get() as f64)
}

/// Monotonicity of `M_{r,m,s}(y)` in `r` away from `s`.
///
/// (i) for `r >= s+1` with `s <= phi(r)`: `M_r >= M_{r+1} - tol`;
/// (ii) for `1 <= r <= s-1` with `s >= r + (r + s^2/m)^(1/alpha)`:
/// `M_r >= M_{r-1} - tol`. Degrees below 4 are skipped, as are cases
/// within [`HYPOTHESIS_GUARD`] of a hypothesis boundary.
pub fn check_lemma_4_3(spec: &SweepSpec) -> Result<VerificationReport> {
    spec.validate()?;
    let parts = interval_pairs(spec, Degree::THEOREM_MIN)
        .into_par_iter()
        .map(|(m, s)| {
            let mut tally = Tally::default();
            let sf = s as f64;
            for y in interval_samples(m, s, spec.y_per_interval) {
                let lz = log_weights(m, y, spec.r_max + 1);
                let lzs = log_basis_weight(m, s, y).unwrap();
                let dist: Vec<f64> = lz
                    .iter()
                    .enumerate()
                    .map(|(r, &l)| {
                        let ratio = if r as u64 == s { 1.0 } else { (l - lzs).exp() };
                        ratio * (node::<f64>(m, r as u64) - y).abs()
                    })
                    .collect();
                for &alpha in &spec.alphas {
                    for r in s + 1..=spec.r_max {
                        let phi = threshold_upper(m, alpha, s, r);
                        if (sf - phi).abs() < HYPOTHESIS_GUARD || sf > phi {
                            continue;
                        }
                        let (here, next) = (dist[r as usize], dist[r as usize + 1]);
                        tally.case(here >= next - spec.tol, next, here, || {
                            vec![
                                ("m", m.get() as f64),
                                ("alpha", alpha.get() as f64),
                                ("s", sf),
                                ("y", y),
                                ("r", r as f64),
                                ("branch", 1.0),
                            ]
                        });
                    }
                    for r in 1..s.min(spec.r_max + 1) {
                        let th = threshold_lower(m, alpha, s, r);
                        if (sf - th).abs() < HYPOTHESIS_GUARD || sf < th {
                            continue;
                        }
                        let (here, prev) = (dist[r as usize], dist[r as usize - 1]);
                        tally.case(here >= prev - spec.tol, prev, here, || {
                            vec![
                                ("m", m.get() as f64),
                                ("alpha", alpha.get() as f64),
                                ("s", sf),
                                ("y", y),
                                ("r", r as f64),
                                ("branch", 2.0),
                            ]
                        });
                    }
                }
            }
            tally
        })
        .collect();
    Ok(merge_all(parts).finish("lemma_4_3"))
}

/// `E_m(y) <= 8 (1-y) y^(1/alpha) m^-(1-1/alpha)` on the `grid_n`-point grid.
pub fn check_distance_bound(spec: &SweepSpec, grid_n: usize) -> Result<VerificationReport> {
    spec.validate()?;
    spec.require_theorem_range()?;
    let eval_tol = (spec.tol * 1e-3).min(1e-13);
    let parts = spec
        .m_values
        .par_iter()
        .map(|&m| {
            let mut tally = Tally::default();
            for i in 0..grid_n {
                let y = grid_point::<f64>(i, grid_n);
                let e = eval_distance_transform(m, y, eval_tol)?.value;
                for &alpha in &spec.alphas {
                    let rhs = distance_transform_bound(m, alpha, y)?;
                    tally.case(e <= rhs + spec.tol, e, rhs, || {
                        vec![("m", m.get() as f64), ("alpha", alpha.get() as f64), ("y", y)]
                    });
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all(parts).finish("distance_bound"))
}

const PSEUDO_LINEAR_COEFFS: [(f64, f64); 5] = [(2.0, 0.0), (0.5, 1.5), (1.0, 1.0), (3.0, 0.25), (0.0, 0.7)];
const HOMOGENEITY_COEFFS: [f64; 3] = [0.5, 2.0, 7.5];

/// Property codes in axiom witnesses.
pub mod axiom {
    pub const MONOTONE: f64 = 1.0;
    pub const SUBLINEAR: f64 = 2.0;
    pub const PSEUDO_LINEAR: f64 = 3.0;
    pub const HOMOGENEOUS: f64 = 4.0;
    pub const CONSTANTS: f64 = 5.0;
    pub const LIPSCHITZ: f64 = 6.0;
}

/// Operator axioms on the `grid_n`-point grid: monotonicity, sublinearity,
/// pseudo-linearity, positive homogeneity, `Z(e0) = e0` and
/// `|Z(g) - Z(h)| <= Z(|g - h|)`.
pub fn check_axioms(
    g: &TestFunction<f64>,
    h: &TestFunction<f64>,
    m: Degree,
    grid_n: usize,
    tol: f64,
) -> Result<VerificationReport> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {grid_n}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let eval_tol = (tol * 1e-3).min(1e-13);
    let grid: Vec<f64> = (0..grid_n).map(|i| grid_point(i, grid_n)).collect();
    let ordered_on_grid = grid.iter().all(|&y| g.eval(y) <= h.eval(y));
    let upper = TestFunction::max_combination(1.0, g, 1.0, h);
    let sum = g.sum(h);
    let diff = g.abs_diff(h);
    let e0: TestFunction<f64> = builtin("e0").expect("e0 is builtin");
    let combos: Vec<_> = PSEUDO_LINEAR_COEFFS
        .iter()
        .map(|&(a, b)| (a, b, TestFunction::max_combination(a, g, b, h)))
        .collect();
    let scaled: Vec<_> = HOMOGENEITY_COEFFS.iter().map(|&c| (c, g.scaled(c))).collect();

    let parts = grid
        .par_iter()
        .map(|&y| {
            let z = |f: &TestFunction<f64>| eval_max_product_mkz(f, m, y, eval_tol).map(|r| r.value);
            let mut tally = Tally::default();
            let params = |code: f64| move || vec![("m", m.get() as f64), ("y", y), ("property", code)];
            let (zg, zh) = (z(g)?, z(h)?);
            let zu = z(&upper)?;
            if ordered_on_grid {
                tally.case(zg <= zh + tol, zg, zh, params(axiom::MONOTONE));
            }
            tally.case(zg <= zu + tol, zg, zu, params(axiom::MONOTONE));
            tally.case(zh <= zu + tol, zh, zu, params(axiom::MONOTONE));

            let zs = z(&sum)?;
            tally.case(zs <= zg + zh + tol, zs, zg + zh, params(axiom::SUBLINEAR));

            for (a, b, combo) in &combos {
                let lhs = z(combo)?;
                let rhs = (a * zg).max(b * zh);
                tally.case((lhs - rhs).abs() <= tol, (lhs - rhs).abs(), 0.0, params(axiom::PSEUDO_LINEAR));
            }
            for (c, cg) in &scaled {
                let lhs = z(cg)?;
                let rhs = c * zg;
                tally.case((lhs - rhs).abs() <= tol, (lhs - rhs).abs(), 0.0, params(axiom::HOMOGENEOUS));
            }
            let ze = z(&e0)?;
            tally.case((ze - 1.0).abs() <= tol, (ze - 1.0).abs(), 0.0, params(axiom::CONSTANTS));

            let zd = z(&diff)?;
            tally.case((zg - zh).abs() <= zd + tol, (zg - zh).abs(), zd, params(axiom::LIPSCHITZ));
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all(parts).finish("axioms"))
}

/// Pointwise modulus estimate for the max-product operator:
/// `|Z(g)(y) - g(y)| <= (1 + E_m(y)/delta_m) omega(g, delta_m)`
/// with `delta_m = m^-(1 - 1/alpha)`.
pub fn check_corollary_2_2(
    g: &TestFunction<f64>,
    m: Degree,
    alpha: SmoothingExponent,
    grid_n: usize,
    tol: f64,
) -> Result<VerificationReport> {
    m.require_theorem_range()?;
    let delta = alpha.delta::<f64>(m);
    let omega = g.analytic_modulus(delta).ok_or_else(|| {
        Error::Hypothesis(format!(
            "{} has no analytic modulus; a grid estimate would under-certify",
            g.name()
        ))
    })?;
    let eval_tol = (tol * 1e-3).min(1e-13);
    let parts = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let y = grid_point::<f64>(i, grid_n);
            let lhs = (eval_max_product_mkz(g, m, y, eval_tol)?.value - g.eval(y)).abs();
            let e = eval_distance_transform(m, y, eval_tol)?.value;
            let rhs = (1.0 + e / delta) * omega;
            let mut tally = Tally::default();
            tally.case(lhs <= rhs + tol, lhs, rhs, || {
                vec![("m", m.get() as f64), ("alpha", alpha.get() as f64), ("y", y)]
            });
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all(parts).finish("corollary_2_2"))
}

/// [`check_corollary_2_2`] over every `(m, alpha)` of `spec`, sharing the
/// operator and distance-transform evaluations across exponents.
pub fn check_corollary_2_2_sweep(g: &TestFunction<f64>, spec: &SweepSpec, grid_n: usize) -> Result<VerificationReport> {
    spec.validate()?;
    spec.require_theorem_range()?;
    if !g.has_analytic_modulus() {
        return Err(Error::Hypothesis(format!(
            "{} has no analytic modulus; a grid estimate would under-certify",
            g.name()
        )));
    }
    let eval_tol = (spec.tol * 1e-3).min(1e-13);
    let parts = spec
        .m_values
        .par_iter()
        .map(|&m| {
            let mut tally = Tally::default();
            let scales: Vec<(SmoothingExponent, f64, f64)> = spec
                .alphas
                .iter()
                .map(|&a| {
                    let delta = a.delta::<f64>(m);
                    (a, delta, g.analytic_modulus(delta).expect("checked above"))
                })
                .collect();
            for i in 0..grid_n {
                let y = grid_point::<f64>(i, grid_n);
                let lhs = (eval_max_product_mkz(g, m, y, eval_tol)?.value - g.eval(y)).abs();
                let e = eval_distance_transform(m, y, eval_tol)?.value;
                for &(alpha, delta, omega) in &scales {
                    let rhs = (1.0 + e / delta) * omega;
                    tally.case(lhs <= rhs + spec.tol, lhs, rhs, || {
                        vec![("m", m.get() as f64), ("alpha", alpha.get() as f64), ("y", y)]
                    });
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all(parts).finish(&format!("corollary_2_2/{}", g.name())))
}

/// Approximation bound at every `(m, alpha, grid y)`.
pub fn check_theorem_5_1(
    g: &TestFunction<f64>,
    spec: &SweepSpec,
    grid_n: usize,
) -> Result<Vec<BoundReport<f64>>> {
    spec.validate()?;
    spec.require_theorem_range()?;
    if !g.has_analytic_modulus() {
        return Err(Error::Hypothesis(format!(
            "{} has no analytic modulus; a grid estimate would under-certify",
            g.name()
        )));
    }
    let eval_tol = (spec.tol * 1e-3).min(1e-13);
    let per_m = spec
        .m_values
        .par_iter()
        .map(|&m| {
            let mut out = Vec::with_capacity(grid_n * spec.alphas.len());
            for i in 0..grid_n {
                let y = grid_point::<f64>(i, grid_n);
                let lhs = (eval_max_product_mkz(g, m, y, eval_tol)?.value - g.eval(y)).abs();
                for &alpha in &spec.alphas {
                    let rhs = theorem_bound(g, m, alpha, y, grid_n)?;
                    out.push(BoundReport::new(g.name(), m, alpha, y, lhs, rhs));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_m.into_iter().flatten().collect())
}

/// Folds bound reports into a [`VerificationReport`].
pub fn summarize_bound_reports(check_name: &str, reports: &[BoundReport<f64>]) -> VerificationReport {
    let mut tally = Tally::default();
    for r in reports {
        tally.case(r.pass, r.lhs, r.rhs, || {
            vec![("m", r.m.get() as f64), ("alpha", r.alpha.get() as f64), ("y", r.y)]
        });
    }
    tally.finish(check_name)
}

/// Random continuous piecewise-linear function with 2 to 8 interior knots
/// and values in `[0,1]`.
pub fn random_piecewise_linear(rng: &mut impl Rng) -> PiecewiseLinear<f64> {
    let interior = rng.gen_range(2..=8);
    let mut knots: Vec<f64> = (0..interior).map(|_| rng.gen_range(0.01..0.99)).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.insert(0, 0.0);
    knots.push(1.0);
    let values = (0..knots.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    PiecewiseLinear::new(knots, values).expect("generated knots are valid")
}

/// `count` seeded pairs of random piecewise-linear functions.
pub fn seeded_pairs(seed: u64, count: usize) -> Vec<(TestFunction<f64>, TestFunction<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let g = random_piecewise_linear(&mut rng).into_test_function(format!("pl{i}_g"));
            let h = random_piecewise_linear(&mut rng).into_test_function(format!("pl{i}_h"));
            (g, h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(m: u64) -> Degree {
        Degree::new(m).unwrap()
    }

    fn a(alpha: u32) -> SmoothingExponent {
        SmoothingExponent::new(alpha).unwrap()
    }

    fn small_spec(ms: &[u64], s_max: u64, r_max: u64, alphas: &[u32]) -> SweepSpec {
        SweepSpec {
            m_values: ms.iter().map(|&m| deg(m)).collect(),
            s_max,
            r_max,
            y_per_interval: 5,
            alphas: alphas.iter().map(|&x| a(x)).collect(),
            tol: 1e-10,
        }
    }

    #[test]
    fn lemma_4_1_small_sweep_passes() {
        let report = check_lemma_4_1(&small_spec(&[1, 4, 9], 40, 60, &[2])).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.cases_total, 3 * 41 * 5 * 61);
        // r = s attains the bound exactly
        assert_eq!(report.worst_margin, 0.0);
    }

    #[test]
    fn lemma_4_1_example_value() {
        // m_{3,4,0}(0.1) = C(7,3) 0.001 = 0.035
        let v: f64 = crate::basis::weight_ratio(deg(4), 3, 0, 0.1).unwrap();
        assert!((v - 0.035).abs() < 1e-14);
    }

    #[test]
    fn lemma_4_2_small_sweep_passes() {
        let report = check_lemma_4_2(&small_spec(&[1, 4, 13], 30, 40, &[2])).unwrap();
        assert!(report.passed(), "{report:?}");
        // interior samples plus one endpoint sample per s >= 1
        assert_eq!(report.cases_total, 3 * (31 * 5 + 30));
    }

    #[test]
    fn lemma_4_2_hand_checked_scan() {
        // (r+1) 0.25^r: 1, 0.5, 0.1875
        let m = deg(1);
        let w: Vec<f64> = (0..3).map(|r| log_basis_weight::<f64>(m, r, 0.25).unwrap().exp()).collect();
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15 && (w[2] - 0.1875).abs() < 1e-15);
        assert_eq!(interval_index(deg(4), 0.52).unwrap(), 4);
    }

    #[test]
    fn lemma_4_3_thresholds() {
        // 5 - sqrt(6 + 1/4) = 2.5
        assert!((threshold_upper(deg(4), a(2), 0, 5) - 2.5).abs() < 1e-15);
        // 2 + (2 + 100/4)^(1/3) = 5
        assert!((threshold_lower(deg(4), a(3), 10, 2) - 5.0).abs() < 1e-12);
        // r = s: s >= s + (s + s^2/m)^(1/alpha) never holds for s >= 1
        for s in 1..50 {
            assert!(threshold_lower(deg(7), a(3), s, s) > s as f64);
        }
    }

    #[test]
    fn lemma_4_3_examples_hold_pointwise() {
        use crate::basis::weighted_distance;
        let m = deg(4);
        for y in interval_samples(m, 0, 5) {
            let here: f64 = weighted_distance(m, 5, 0, y).unwrap();
            let next: f64 = weighted_distance(m, 6, 0, y).unwrap();
            assert!(here >= next - 1e-10);
        }
        for y in interval_samples(m, 10, 5) {
            let here: f64 = weighted_distance(m, 2, 10, y).unwrap();
            let prev: f64 = weighted_distance(m, 1, 10, y).unwrap();
            assert!(here >= prev - 1e-10);
        }
    }

    #[test]
    fn lemma_4_3_alpha_two_passes() {
        let report = check_lemma_4_3(&small_spec(&[4, 5, 16], 60, 80, &[2])).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.cases_total > 0);
    }

    #[test]
    fn lemma_4_3_alpha_three_has_counterexamples() {
        // m = 4, s = 7, alpha = 3 violates both branches
        let report = check_lemma_4_3(&small_spec(&[4], 7, 20, &[3])).unwrap();
        assert!(report.cases_failed > 0);
        let w = &report.witnesses[0];
        assert!(w.lhs > w.rhs + 1e-10);
    }

    #[test]
    fn lemma_4_3_skips_small_degrees() {
        let report = check_lemma_4_3(&small_spec(&[1, 2, 3], 10, 10, &[2])).unwrap();
        assert_eq!(report.cases_total, 0);
    }

    #[test]
    fn witness_cap_applies() {
        let report = check_lemma_4_3(&small_spec(&[4, 5, 6], 200, 220, &[5])).unwrap();
        assert!(report.cases_failed as usize > WITNESS_CAP);
        assert_eq!(report.witnesses.len(), WITNESS_CAP);
    }

    #[test]
    fn axioms_identity_and_reflection() {
        let g: TestFunction<f64> = builtin("identity").unwrap();
        let h = TestFunction::new("1-t", 1.0, crate::operators::FunctionSource::Composite, |t: f64| 1.0 - t);
        let report = check_axioms(&g, &h, deg(8), 129, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn axioms_ordered_pair() {
        let g: TestFunction<f64> = builtin("sqrt").unwrap();
        let h = g.sum(&TestFunction::constant(0.3));
        let report = check_axioms(&g, &h, deg(16), 65, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");
        // ordered on the grid: three monotonicity cases per point
        let per_point = 3 + 1 + PSEUDO_LINEAR_COEFFS.len() + HOMOGENEITY_COEFFS.len() + 2;
        assert_eq!(report.cases_total as usize, 65 * per_point);
    }

    #[test]
    fn corollary_examples() {
        let e0: TestFunction<f64> = builtin("e0").unwrap();
        let r = check_corollary_2_2(&e0, deg(4), a(2), 65, 1e-10).unwrap();
        assert!(r.passed());
        assert_eq!(r.worst_margin, 0.0);
        let id: TestFunction<f64> = builtin("identity").unwrap();
        let r = check_corollary_2_2(&id, deg(4), a(2), 257, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
        let sinpi: TestFunction<f64> = builtin("sinpi").unwrap();
        assert!(check_corollary_2_2(&sinpi, deg(4), a(2), 65, 1e-10).is_err());
        assert!(check_corollary_2_2(&id, deg(3), a(2), 65, 1e-10).is_err());
    }

    #[test]
    fn corollary_sweep_matches_single_checks() {
        let spec = small_spec(&[4, 9], 0, 0, &[2, 5]);
        let g: TestFunction<f64> = builtin("sqrt").unwrap();
        let sweep = check_corollary_2_2_sweep(&g, &spec, 65).unwrap();
        let singles: Vec<_> = [4, 9]
            .iter()
            .flat_map(|&m| [2, 5].map(|al| check_corollary_2_2(&g, deg(m), a(al), 65, 1e-10).unwrap()))
            .collect();
        assert_eq!(sweep.cases_total, singles.iter().map(|r| r.cases_total).sum::<u64>());
        let worst = singles.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
        assert_eq!(sweep.worst_margin, worst);
        assert!(sweep.passed());
    }

    #[test]
    fn theorem_examples() {
        let spec = small_spec(&[4, 8], 0, 0, &[2, 3]);
        let e0: TestFunction<f64> = builtin("e0").unwrap();
        let reports = check_theorem_5_1(&e0, &spec, 33).unwrap();
        assert_eq!(reports.len(), 2 * 2 * 33);
        assert!(reports.iter().all(|r| r.pass && r.lhs == 0.0 && r.rhs == 0.0));

        let id: TestFunction<f64> = builtin("identity").unwrap();
        let reports = check_theorem_5_1(&id, &small_spec(&[4], 0, 0, &[2]), 3).unwrap();
        let mid = &reports[1];
        assert_eq!(mid.y, 0.5);
        assert!((mid.rhs - (0.5 + 2f64.sqrt())).abs() < 1e-12);
        assert!(mid.pass);

        let sinpi: TestFunction<f64> = builtin("sinpi").unwrap();
        assert!(check_theorem_5_1(&sinpi, &spec, 33).is_err());
        assert!(check_theorem_5_1(&id, &small_spec(&[3], 0, 0, &[2]), 33).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = small_spec(&[4, 7], 25, 40, &[2, 4]);
        let a = check_lemma_4_3(&spec).unwrap();
        let b = check_lemma_4_3(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.worst_margin.to_bits(), b.worst_margin.to_bits());
    }

    #[test]
    fn report_json_fields() {
        let report = check_lemma_4_1(&small_spec(&[2], 2, 3, &[2])).unwrap();
        let v = serde_json::to_value(&report).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["cases_failed", "cases_total", "check_name", "witnesses", "worst_margin"]);
    }

    #[test]
    fn seeded_pairs_are_reproducible() {
        let p = seeded_pairs(7, 3);
        let q = seeded_pairs(7, 3);
        for ((g1, h1), (g2, h2)) in p.iter().zip(&q) {
            for y in [0.0, 0.13, 0.5, 0.77, 1.0] {
                assert_eq!(g1.eval(y), g2.eval(y));
                assert_eq!(h1.eval(y), h2.eval(y));
            }
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec::default();
        assert!(spec.validate().is_ok());
        assert!(spec.require_theorem_range().is_err());
        assert!(SweepSpec::theorem_default().require_theorem_range().is_ok());
        spec.alphas.clear();
        assert!(check_lemma_4_1(&spec).is_err());
    }
}
