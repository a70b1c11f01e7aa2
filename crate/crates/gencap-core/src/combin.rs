//! Exact and log-domain binomial coefficients.
//!
//! Counts are kept in exact integer arithmetic wherever they fit in a
//! `u128`; beyond that the log-domain form via `lgamma` is used, which is
//! all the sampling estimators ever need.

use crate::error::{Error, Result};

/// Exact binomial coefficient C(n, k), or an overflow error if the value
/// does not fit in a `u128`.
pub fn choose_exact(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k {
        // result * (n - k + i) is always divisible by i at this point.
        result = result
            .checked_mul((n - k + i) as u128)
            .ok_or(Error::Overflow("choose_exact"))?
            / i as u128;
    }
    Ok(result)
}

/// ln C(n, k) via log-gamma, valid for any n that fits in an f64.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// ln of an exact count when it fits, falling back to log-gamma.
pub fn ln_choose_best(n: u64, k: u64) -> f64 {
    match choose_exact(n, k) {
        Ok(0) => f64::NEG_INFINITY,
        Ok(c) => libm::log(c as f64),
        Err(_) => ln_choose(n, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(choose_exact(0, 0).unwrap(), 1);
        assert_eq!(choose_exact(10, 4).unwrap(), 210);
        assert_eq!(choose_exact(5, 6).unwrap(), 0);
        assert_eq!(choose_exact(64, 32).unwrap(), 1832624140942590534);
    }

    #[test]
    fn pascal_identity_exact() {
        for n in 1..=64u64 {
            for k in 1..n {
                let lhs = choose_exact(n, k).unwrap();
                let rhs = choose_exact(n - 1, k - 1).unwrap() + choose_exact(n - 1, k).unwrap();
                assert_eq!(lhs, rhs, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn ln_choose_matches_exact() {
        for n in [10u64, 64, 200, 10_000] {
            for k in [0u64, 1, 4, 7] {
                if k > n {
                    continue;
                }
                let exact = choose_exact(n, k).unwrap() as f64;
                let rel = (ln_choose(n, k) - exact.ln()).abs();
                assert!(rel < 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn overflow_detected() {
        assert!(matches!(choose_exact(1000, 500), Err(Error::Overflow(_))));
        // log-domain form still finite there
        assert!(ln_choose(1000, 500).is_finite());
        assert!(ln_choose_best(1000, 500).is_finite());
    }
}
