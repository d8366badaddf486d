//! Log-factorials and log-binomials for integer arguments.
//!
//! Small arguments come from a table; larger ones use the Stirling series
//! with terms through `n^-9`, which is accurate to a few ulps for `n >= 16`.

use crate::scalar::Real;

const LN_FACTORIAL_TABLE: [f64; 16] = [
    0.0,
    0.0,
    std::f64::consts::LN_2,
    1.791_759_469_228_055_000_8,
    3.178_053_830_347_945_619_6,
    4.787_491_742_782_045_994_2,
    6.579_251_212_010_100_995_1,
    8.525_161_361_065_414_300_2,
    10.604_602_902_745_250_228,
    12.801_827_480_081_469_611,
    15.104_412_573_075_515_295,
    17.502_307_845_873_885_839,
    19.987_214_495_661_886_15,
    22.552_163_853_123_422_886,
    25.191_221_182_738_681_5,
    27.899_271_383_840_891_566,
];

const TABLE_LEN: u64 = LN_FACTORIAL_TABLE.len() as u64;

/// Stirling correction `ln(n!) - (n ln n - n + ln(2 pi n)/2)` for `n >= 16`.
fn stirling_correction<T: Real>(x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    // 1/(12n) - 1/(360n^3) + 1/(1260n^5) - 1/(1680n^7) + 1/(1188n^9)
    inv * (T::lit(1.0 / 12.0)
        - inv2
            * (T::lit(1.0 / 360.0)
                - inv2
                    * (T::lit(1.0 / 1260.0)
                        - inv2 * (T::lit(1.0 / 1680.0) - inv2 * T::lit(1.0 / 1188.0)))))
}

/// `ln(n!)`.
pub fn ln_factorial<T: Real>(n: u64) -> T {
    if n < TABLE_LEN {
        return T::lit(LN_FACTORIAL_TABLE[n as usize]);
    }
    let x = T::from_index(n);
    x * x.ln() - x + T::lit(0.5) * (T::TAU() * x).ln() + stirling_correction(x)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
///
/// Avoids differencing three large log-factorials: a short product when the
/// smaller of `k`, `n - k` is below 16, otherwise the Stirling expansion
/// written in relative-entropy form.
pub fn ln_binomial<T: Real>(n: u64, k: u64) -> T {
    if k > n {
        return T::neg_infinity();
    }
    let small = k.min(n - k);
    if small == 0 {
        return T::zero();
    }
    if small < TABLE_LEN {
        let base = n - small;
        let mut acc = T::zero();
        for j in 1..=small {
            acc = acc + T::from_index(base + j).ln();
        }
        return acc - T::lit(LN_FACTORIAL_TABLE[small as usize]);
    }
    let big = n - small;
    let nf = T::from_index(n);
    let sf = T::from_index(small);
    let bf = T::from_index(big);
    let frac = sf / nf;
    let main = sf * (nf / sf).ln() - bf * (-frac).ln_1p();
    let half_log = T::lit(0.5) * (nf / (T::TAU() * sf * bf)).ln();
    main + half_log + stirling_correction(nf) - stirling_correction(sf) - stirling_correction(bf)
}

/// `ln(n!) - (n ln n - n + ln(2 pi n)/2)` for `n >= 1`.
fn stirling_error<T: Real>(n: u64) -> T {
    if n < TABLE_LEN {
        let x = T::from_index(n);
        return T::lit(LN_FACTORIAL_TABLE[n as usize]) - (x * x.ln() - x + T::lit(0.5) * (T::TAU() * x).ln());
    }
    stirling_correction(T::from_index(n))
}

/// `x ln(x/mu) + mu - x` without cancellation when `x` is close to `mu`.
fn deviance<T: Real>(x: T, mu: T) -> T {
    let diff = x - mu;
    if diff.abs() < T::lit(0.1) * (x + mu) {
        let v = diff / (x + mu);
        let v2 = v * v;
        let mut sum = diff * v;
        let mut term = T::lit(2.0) * x * v;
        for j in 1..200 {
            term = term * v2;
            let next = sum + term / T::from_index(2 * j + 1);
            if next == sum {
                break;
            }
            sum = next;
        }
        return sum;
    }
    x * (x / mu).ln() + mu - x
}

/// `ln[C(n,k) p^k (1-p)^(n-k)]` for `p` in `(0,1)`.
///
/// Saddle-point form: Stirling remainders plus two deviance terms, so the
/// result keeps full relative accuracy when the pmf is near its mode even
/// for large `n`.
pub fn ln_binomial_pmf<T: Real>(k: u64, n: u64, p: T) -> T {
    if k > n {
        return T::neg_infinity();
    }
    let q = T::one() - p;
    if k == 0 {
        return T::from_index(n) * (-p).ln_1p();
    }
    if k == n {
        return T::from_index(n) * p.ln();
    }
    let (nf, kf, rest) = (T::from_index(n), T::from_index(k), T::from_index(n - k));
    let lc = stirling_error::<T>(n) - stirling_error::<T>(k) - stirling_error::<T>(n - k)
        - deviance(kf, nf * p)
        - deviance(rest, nf * q);
    lc + T::lit(0.5) * (nf / (T::TAU() * kf * rest)).ln()
}
