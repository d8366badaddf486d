//! Independent oracles: exact rational arithmetic and naive untruncated sums.

use mkz_core::analysis::grid_modulus;
use mkz_core::special::ln_binomial;
use mkz_core::*;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn deg(m: u64) -> Degree {
    Degree::new(m).unwrap()
}

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

fn dyadic(num: i64, log2_den: u32) -> (BigRational, f64) {
    let den = 1i64 << log2_den;
    (BigRational::new(BigInt::from(num), BigInt::from(den)), num as f64 / den as f64)
}

fn rpow(x: &BigRational, n: u64) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, _| acc * x)
}

/// Exact `z_{m,r}(y)`.
fn z_exact(m: u64, r: u64, y: &BigRational) -> BigRational {
    BigRational::from_integer(BigInt::from(binomial(m + r, r))) * rpow(y, r)
}

#[test]
fn ln_binomial_matches_exact_integers() {
    for n in (0..=1000u64).step_by(7) {
        for k in [0, 1, 2, 5, 15, 16, 17, n / 3, n / 2, n.saturating_sub(1), n] {
            if k > n {
                continue;
            }
            let exact = binomial(n, k).to_f64().unwrap().ln();
            let got: f64 = ln_binomial(n, k);
            assert!(
                (got - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                "n={n} k={k}: {got} vs {exact}"
            );
        }
    }
}

#[test]
fn log_basis_weight_matches_exact_rationals() {
    for m in 1..=30u64 {
        for r in 0..=(60 - m) {
            for (num, p) in [(1, 3), (3, 2), (5, 3), (1, 1), (7, 4), (255, 8)] {
                let (yq, y) = dyadic(num, p);
                let exact = z_exact(m, r, &yq).to_f64().unwrap();
                let got = log_basis_weight::<f64>(deg(m), r, y).unwrap().exp();
                assert!(
                    (got - exact).abs() <= 1e-13 * exact,
                    "m={m} r={r} y={y}: {got} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn interval_index_matches_exact_floor() {
    // s = floor(m y / (1 - y)) for y = p/q: floor(m p / (q - p))
    for m in 1..=80u64 {
        for p in 0..1024u64 {
            let y = p as f64 / 1024.0;
            let exact = m * p / (1024 - p);
            assert_eq!(interval_index(deg(m), y).unwrap(), exact, "m={m} y={y}");
        }
    }
}

#[test]
fn interval_index_at_rounded_endpoints() {
    for m in 1..=64u64 {
        for s in 0..=300u64 {
            let (lo, hi) = interval_bounds::<f64>(deg(m), s);
            assert_eq!(interval_index(deg(m), lo).unwrap(), s);
            let below_hi = f64::from_bits(hi.to_bits() - 1);
            assert_eq!(interval_index(deg(m), below_hi).unwrap(), s);
        }
    }
}

/// Exact `max_r z_r g(r/(m+r)) / max_r z_r` over `r <= r_cap`.
fn max_product_exact(m: u64, y: &BigRational, g: impl Fn(&BigRational) -> BigRational, r_cap: u64) -> BigRational {
    let mut num = BigRational::zero();
    let mut den = BigRational::zero();
    for r in 0..=r_cap {
        let z = z_exact(m, r, y);
        let node = BigRational::new(BigInt::from(r), BigInt::from(m + r));
        let t = &z * g(&node);
        if t > num {
            num = t;
        }
        if z > den {
            den = z;
        }
    }
    num / den
}

#[test]
fn max_product_matches_exact_rationals() {
    let tent_q = |t: &BigRational| {
        let one_minus = BigRational::one() - t;
        if *t < one_minus {
            t.clone()
        } else {
            one_minus
        }
    };
    let tent: TestFunction<f64> = builtin("tent").unwrap();
    let sq_q = |t: &BigRational| t * t;
    let sq = TestFunction::new("t^2", 1.0, FunctionSource::Composite, |t: f64| t * t);
    for m in [1u64, 2, 4, 7, 12] {
        for (num, p) in [(1, 4), (1, 1), (3, 2), (5, 3), (11, 4)] {
            let (yq, y) = dyadic(num, p);
            // z_r / z_s < 1e-30 well before r = 400 for y <= 0.75 and m <= 12
            let exact = max_product_exact(m, &yq, tent_q, 400).to_f64().unwrap();
            let got = eval_max_product_mkz(&tent, deg(m), y, 1e-15).unwrap().value;
            assert!((got - exact).abs() <= 1e-15, "tent m={m} y={y}: {got} vs {exact}");
            let exact = max_product_exact(m, &yq, sq_q, 400).to_f64().unwrap();
            let got = eval_max_product_mkz(&sq, deg(m), y, 1e-15).unwrap().value;
            assert!((got - exact).abs() <= 1e-15, "t^2 m={m} y={y}: {got} vs {exact}");
        }
    }
}

/// Untruncated max-product oracle: forward recurrence from `r = 0` with
/// running rescaling, over a fixed generous range.
fn max_product_naive(m: u64, y: f64, g: impl Fn(f64) -> f64, r_end: u64) -> f64 {
    let mut w = 1.0f64;
    let (mut num, mut den) = (g(0.0), 1.0f64);
    for r in 0..r_end {
        w *= y * (m + r + 1) as f64 / (r + 1) as f64;
        if w > 1e200 {
            w *= 1e-200;
            num *= 1e-200;
            den *= 1e-200;
        }
        num = num.max(w * g((r + 1) as f64 / (m + r + 1) as f64));
        den = den.max(w);
    }
    num / den
}

#[test]
fn max_product_matches_naive_recurrence() {
    let fns: Vec<TestFunction<f64>> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    for m in [1u64, 3, 8, 33, 64, 128] {
        for i in 1..40 {
            let y = i as f64 / 40.0 * 0.95;
            for g in &fns {
                let naive = max_product_naive(m, y, |t| g.eval(t), 20_000);
                let got = eval_max_product_mkz(g, deg(m), y, 1e-14).unwrap().value;
                assert!((got - naive).abs() <= 1e-12, "{} m={m} y={y}: {got} vs {naive}", g.name());
            }
            let naive = max_product_naive(m, y, |t| (t - y).abs(), 20_000);
            let got = eval_distance_transform(deg(m), y, 1e-14).unwrap().value;
            assert!((got - naive).abs() <= 1e-12, "E m={m} y={y}");
        }
    }
}

#[test]
fn distance_transform_small_case_by_hand() {
    // m = 4, y = 0.52: s = 4 and the r = 5 term is 0.936 |5/9 - 0.52|
    let e = eval_distance_transform(deg(4), 0.52, 1e-15).unwrap().value;
    let naive = max_product_naive(4, 0.52, |t| (t - 0.52f64).abs(), 5000);
    assert!((e - naive).abs() < 1e-15);
    let bound = 8.0 * 0.48 * 0.52f64.sqrt() / 2.0;
    assert!(e <= bound);
}

#[test]
fn classical_matches_exact_partial_sums() {
    // R-term partial sum plus a rigorous tail bracket, all in exact arithmetic
    for m in [1u64, 2, 5, 9] {
        for (num, p) in [(1, 3), (1, 1), (5, 3)] {
            let (yq, y) = dyadic(num, p);
            let one = BigRational::one();
            let w0 = rpow(&(&one - &yq), m + 1);
            let mut mass = BigRational::zero();
            let mut first_moment = BigRational::zero();
            for r in 0..=300u64 {
                let w = &w0 * z_exact(m, r, &yq);
                first_moment += &w * BigRational::new(BigInt::from(r), BigInt::from(m + r));
                mass += w;
            }
            let missing = (&one - &mass).to_f64().unwrap();
            assert!((0.0..1e-20).contains(&missing));
            let id: TestFunction<f64> = builtin("identity").unwrap();
            let got = eval_classical_mkz(&id, deg(m), y, 1e-15, NodeConvention::CheneySharma)
                .unwrap()
                .value;
            let exact = first_moment.to_f64().unwrap();
            assert!((got - exact).abs() <= 1e-13, "m={m} y={y}: {got} vs {exact}");
            assert!((exact - y).abs() <= 1e-13);
            let e0: TestFunction<f64> = builtin("e0").unwrap();
            let got = eval_classical_mkz(&e0, deg(m), y, 1e-15, NodeConvention::MkzClassic).unwrap().value;
            assert!((got - 1.0).abs() <= 1e-13);
        }
    }
}

#[test]
fn classical_weights_match_exact_rationals() {
    for m in [3u64, 10, 40] {
        let (yq, y) = dyadic(3, 3);
        let w0 = rpow(&(BigRational::one() - &yq), m + 1);
        let w = ClassicalWeights::<f64>::compute(deg(m), y, 1e-14).unwrap();
        for (i, &got) in w.weights.iter().enumerate() {
            let r = w.r_min + i as u64;
            let exact = (&w0 * z_exact(m, r, &yq)).to_f64().unwrap();
            assert!((got - exact).abs() <= 1e-12 * exact + 1e-300, "m={m} r={r}");
        }
    }
}

#[test]
fn sinpi_modulus_by_dense_grid() {
    // the two-sided pair [0, delta] attains sin(pi delta) for delta <= 1/2;
    // 2 sin(pi delta / 2) overestimates it
    let sinpi: TestFunction<f64> = builtin("sinpi").unwrap();
    assert!(!sinpi.has_analytic_modulus());
    for delta in [0.01, 0.05, 0.125, 0.3, 0.5] {
        let est = grid_modulus(&sinpi, delta, 200_001).unwrap().value;
        let exact = (std::f64::consts::PI * delta).sin();
        assert!(est <= exact + 1e-15 && exact - est < 1e-9, "delta={delta}: {est} vs {exact}");
        let claimed = 2.0 * (std::f64::consts::PI * delta / 2.0).sin();
        assert!(claimed > est + 1e-6);
    }
    for delta in [0.6, 0.9] {
        let est = grid_modulus(&sinpi, delta, 20_001).unwrap().value;
        assert!((est - 1.0).abs() < 1e-12);
    }
}

#[test]
fn grid_modulus_matches_quadratic_scan() {
    let knots = vec![0.0, 0.13, 0.4, 0.41, 0.77, 1.0];
    let values = vec![0.2, 0.9, 0.1, 0.6, 0.55, 0.0];
    let g = PiecewiseLinear::new(knots, values).unwrap().into_test_function("pl");
    let n = 513;
    let ys: Vec<f64> = (0..n).map(|i| grid_point(i, n)).collect();
    for delta in [0.002, 0.01, 0.1, 0.37, 1.0] {
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i..n {
                if ys[j] - ys[i] <= delta {
                    best = best.max((g.eval(ys[i]) - g.eval(ys[j])).abs());
                }
            }
        }
        assert_eq!(grid_modulus(&g, delta, n).unwrap().value, best, "delta={delta}");
    }
}

#[test]
fn f32_tracks_f64() {
    for name in ["identity", "sqrt", "tent"] {
        let g64: TestFunction<f64> = builtin(name).unwrap();
        let g32: TestFunction<f32> = builtin(name).unwrap();
        for m in [4u64, 16, 64] {
            for i in 1..20 {
                let y = i as f64 / 20.0;
                let a = eval_max_product_mkz(&g64, deg(m), y, 1e-12).unwrap().value;
                let b = eval_max_product_mkz(&g32, deg(m), y as f32, 1e-6).unwrap().value;
                assert!((a - b as f64).abs() < 1e-4, "{name} m={m} y={y}");
            }
        }
    }
}
