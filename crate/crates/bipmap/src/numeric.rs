//! Special functions and exact-arithmetic helpers.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const BERNOULLI_2K: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// Hurwitz zeta `sum_{k>=0} (k+a)^{-s}` for real `s > 1`, `a > 0`.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0);
    let n = 12usize;
    let mut sum = 0.0;
    for k in 0..n {
        sum += (k as f64 + a).powf(-s);
    }
    let x = n as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Euler-Maclaurin correction terms
    let mut rising = s;
    let mut fact = 2.0;
    let mut xpow = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI_2K.iter().enumerate() {
        sum += b / fact * rising * xpow;
        let k = 2 * j as u32 + 2;
        rising *= (s + k as f64 - 1.0) * (s + k as f64);
        fact *= (k + 1) as f64 * (k + 2) as f64;
        xpow /= x * x;
    }
    sum
}

pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// `sum_{k>=1} t^k k^{-s}` for `0 <= t < 1`, or `t == 1` with `s > 1`.
pub fn polylog(s: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        if s > 1.0 {
            return Ok(zeta(s));
        }
        return Ok(f64::INFINITY);
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Numerics(format!("polylog argument {t} outside [0,1]")));
    }
    let mut sum = 0.0;
    let mut tk = 1.0;
    for k in 1..50_000_000u64 {
        tk *= t;
        let term = tk * (k as f64).powf(-s);
        sum += term;
        if term < 1e-18 * sum && (k as f64) * (1.0 - t) > 1.0 {
            return Ok(sum);
        }
    }
    Err(Error::Numerics(format!("polylog({s}, {t}) did not converge")))
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of bridges of length `r`: `C(2r-1, r-1)`.
pub fn bridge_count(r: u64) -> BigUint {
    if r == 0 {
        return BigUint::one();
    }
    binomial(2 * r - 1, r - 1)
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact rational with the shortest decimal expansion that round-trips to `x`.
pub fn decimal_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Config(format!("non-finite number {x}")));
    }
    let text = format!("{x}");
    let (neg, body) = match text.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, text.as_str()),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| Error::Config(text.clone()))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, den);
    Ok(if neg { -r } else { r })
}

/// Parse `"3"`, `"2/7"` or a decimal literal.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| Error::Config(format!("bad rational {s}")))?;
        let b: BigInt = b.trim().parse().map_err(|_| Error::Config(format!("bad rational {s}")))?;
        if b.is_zero() {
            return Err(Error::Config(format!("zero denominator in {s}")));
        }
        return Ok(BigRational::new(a, b));
    }
    let x: f64 = s.parse().map_err(|_| Error::Config(format!("bad number {s}")))?;
    decimal_rational(x)
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0) - pi * pi / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - pi.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(3.0) - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_matches_partial_sums() {
        // zeta(s, a+1) = zeta(s, a) - a^{-s}
        for &s in &[1.3, 2.0, 3.7] {
            for &a in &[0.5, 1.0, 7.0] {
                let lhs = hurwitz_zeta(s, a + 1.0);
                let rhs = hurwitz_zeta(s, a) - a.powf(-s);
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn polylog_small_cases() {
        // Li_1(t) = -ln(1-t), Li_0(t) = t/(1-t)
        assert!((polylog(1.0, 0.5).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!((polylog(0.0, 0.25).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn binomials_and_bridges() {
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        let counts: Vec<u64> = (1..=6).map(|r| bridge_count(r).try_into().unwrap()).collect();
        assert_eq!(counts, vec![1, 3, 10, 35, 126, 462]);
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(decimal_rational(0.1).unwrap(), rat(1, 10));
        assert_eq!(decimal_rational(-2.5).unwrap(), rat(-5, 2));
        assert_eq!(parse_rational("2/6").unwrap(), rat(1, 3));
        assert_eq!(parse_rational("3").unwrap(), rat(3, 1));
    }
}
