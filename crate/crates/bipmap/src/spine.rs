//! Auxiliary one-dimensional processes: the modified Galton-Watson process
//! `Y_n` with `pi_i = 2^{-i-1}`, the separating-spine index `L_R`, and
//! decoration sizes via first passage of the Lukasiewicz path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::laws::LawSet;
use crate::rng::RngStream;

/// Default step cap for first-passage simulations.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `Y_n`: one individual at generation 0 with `NegBin(2, 1/2)` children,
/// later generations `Geom(1/2)`. Stops early on extinction.
pub fn sample_yn(n: u32, rng: &mut RngStream) -> u64 {
    if n == 0 {
        return 1;
    }
    let mut y = rng.geometric(0.5) + rng.geometric(0.5);
    for _ in 1..n {
        if y == 0 {
            break;
        }
        y = (0..y).map(|_| rng.geometric(0.5)).sum();
    }
    y
}

/// `(P(Y_n = 0), E(Y_n))` in closed form.
pub fn yn_exact(n: u32) -> (BigRational, BigRational) {
    if n == 0 {
        return (BigRational::zero(), BigRational::one());
    }
    let p = r(n as i64, n as i64 + 1);
    (&p * &p, r(2, 1))
}

/// Whether a fresh copy of the `Y` process survives to generation `n`.
fn survives(n: u32, rng: &mut RngStream) -> bool {
    sample_yn(n, rng) > 0
}

/// `L_R`: the first spine index `j < floor(R/2)` whose outgrowth tree
/// reaches level `R - j`, or `floor(R/2)` if none does.
pub fn sample_lr(r_: u32, rng: &mut RngStream) -> u32 {
    let half = r_ / 2;
    for j in 0..half {
        if survives(r_ - j, rng) {
            return j;
        }
    }
    half
}

/// `P(L_R = k)` in closed form.
pub fn lr_exact(r_: u32, k: u32) -> BigRational {
    let half = r_ / 2;
    let d = (r_ as i64 + 1) * (r_ as i64 + 1);
    if k < half {
        r(2 * r_ as i64 - 2 * k as i64 + 1, d)
    } else if k == half {
        let a = r(r_ as i64 - half as i64 + 1, r_ as i64 + 1);
        &a * &a
    } else {
        BigRational::zero()
    }
}

/// Total progeny of a Galton-Watson tree with offspring law `xi`, as the
/// first time the path `sum (xi_j - 1)` hits `-1`.
pub fn gw_total_progeny(laws: &LawSet, rng: &mut RngStream, cap: u64) -> Result<u64> {
    let mut height: i64 = 0;
    let mut k = 0u64;
    while height > -1 {
        if k >= cap {
            return Err(Error::Capacity(format!("first passage not reached within {cap} steps")));
        }
        height += laws.xi(rng) as i64 - 1;
        k += 1;
    }
    Ok(k)
}

/// Size of a decoration. `bad` composes the spine of geometric length with
/// `tilde xi` outgrowths per spine vertex.
pub fn sample_decoration_size(laws: &LawSet, bad: bool, rng: &mut RngStream, cap: u64) -> Result<u64> {
    let kappa = laws.laws.kappa;
    if kappa >= 1.0 {
        return Err(Error::Invalid("decoration sizes need kappa < 1".into()));
    }
    let mut total = gw_total_progeny(laws, rng, cap)?;
    if bad && kappa > 0.0 {
        let len = rng.geometric(1.0 - kappa);
        for _ in 0..len {
            let m = laws.tilde(rng);
            for _ in 0..m {
                total += gw_total_progeny(laws, rng, cap)?;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(x) = 1/(2-x)` iterated from 0, then `P(Y_n = 0) = f'(f_{n-1}(0))`.
    fn p0_by_iteration(n: u32) -> BigRational {
        let two = r(2, 1);
        let mut x = BigRational::zero();
        for _ in 1..n {
            x = (&two - &x).recip();
        }
        let d = &two - &x;
        (&d * &d).recip()
    }

    #[test]
    fn yn_closed_form_matches_iteration() {
        for n in 1..30 {
            assert_eq!(yn_exact(n).0, p0_by_iteration(n), "n = {n}");
        }
        assert_eq!(yn_exact(1).0, r(1, 4));
    }

    #[test]
    fn lr_sums_to_one() {
        for rr in 1..=20 {
            let s: BigRational = (0..=rr / 2).map(|k| lr_exact(rr, k)).sum();
            assert_eq!(s, BigRational::one(), "R = {rr}");
        }
        assert_eq!(lr_exact(4, 0), r(9, 25));
    }

    #[test]
    fn lr_product_form() {
        // P(L_R = k) = P(Y_{R-k} > 0) prod_{j<k} P(Y_{R-j} = 0)
        for rr in 1..=16u32 {
            for k in 0..=rr / 2 {
                let mut p = BigRational::one();
                for j in 0..k {
                    p *= p0_by_iteration(rr - j);
                }
                if k < rr / 2 {
                    p *= BigRational::one() - p0_by_iteration(rr - k);
                }
                assert_eq!(lr_exact(rr, k), p, "R = {rr}, k = {k}");
            }
        }
    }

    #[test]
    fn decoration_size_degenerate() {
        let laws = crate::laws::offspring_laws(&crate::weights::FaceWeights::Superexponential { c: 1.0 })
            .unwrap()
            .sampler()
            .unwrap();
        let mut rng = RngStream::new(1, 1);
        for _ in 0..100 {
            assert_eq!(sample_decoration_size(&laws, false, &mut rng, 10).unwrap(), 1);
        }
    }
}
