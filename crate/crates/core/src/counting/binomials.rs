//! Exact binomial coefficients, a log-gamma evaluation of `ln C(a, b)`,
//! and checkers for the three binomial inequalities used throughout the
//! counting estimates.

use super::CountingError;
use crate::rational::Rational;
use num::bigint::{BigInt, BigUint};
use num::{One, Signed, ToPrimitive, Zero};
use std::sync::OnceLock;

const TABLE_ROWS: usize = 128;

fn pascal() -> &'static Vec<Vec<BigUint>> {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(TABLE_ROWS);
        for n in 0..TABLE_ROWS {
            let mut row = vec![BigUint::one(); n + 1];
            for k in 1..n {
                row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// `C(a, b)` exactly; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    if (a as usize) < TABLE_ROWS {
        return pascal()[a as usize][b as usize].clone();
    }
    num::integer::binomial(BigUint::from(a), BigUint::from(b))
}

/// `ln C(a, b)` via log-gamma; relative accuracy well below 1e-9 for
/// `a <= 10^6`.
pub fn log_choose(a: u64, b: u64) -> Result<f64, CountingError> {
    if b > a {
        return Err(CountingError::DomainError { a, b });
    }
    let lg = |x: u64| libm::lgamma(x as f64 + 1.0);
    Ok(lg(a) - lg(b) - lg(a - b))
}

/// `C(x*a, b) <= C(a, b) * x^b` for rational `x` in `(0, 1]` with `x*a`
/// integral; verified by cross-multiplying with `x = p/q`:
/// `C(xa, b) * q^b <= C(a, b) * p^b`.
pub fn check_scaled_binomial(a: u64, b: u64, x: &Rational) -> Result<bool, CountingError> {
    if !x.is_positive() || *x > Rational::one() {
        return Err(CountingError::BadScalingFactor);
    }
    let xa = x * Rational::from_integer(BigInt::from(a));
    if !xa.is_integer() {
        return Err(CountingError::BadScalingFactor);
    }
    let xa = xa
        .to_integer()
        .to_u64()
        .ok_or(CountingError::BadScalingFactor)?;
    let p = x.numer().to_biguint().expect("positive");
    let q = x.denom().to_biguint().expect("positive");
    let lhs = binomial(xa, b) * q.pow(b as u32);
    let rhs = binomial(a, b) * p.pow(b as u32);
    Ok(lhs <= rhs)
}

/// `C(a, b - c) * C(a, c) <= 4^b * C(a, b)` for `c <= b <= a`.
pub fn check_binomial_splitting(a: u64, b: u64, c: u64) -> Result<bool, CountingError> {
    if c > b || b > a {
        return Err(CountingError::DomainError { a, b });
    }
    let lhs = binomial(a, b - c) * binomial(a, c);
    let rhs = BigUint::from(4u32).pow(b as u32) * binomial(a, b);
    Ok(lhs <= rhs)
}

/// `C(a, b) * C(c, d) <= C(a + c, b + d)`.
pub fn check_binomial_merging(a: u64, b: u64, c: u64, d: u64) -> bool {
    binomial(a, b) * binomial(c, d) <= binomial(a + c, b + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn binomial_basics() {
        assert_eq!(binomial(4, 2), 6u32.into());
        assert_eq!(binomial(0, 0), 1u32.into());
        assert_eq!(binomial(3, 5), 0u32.into());
        assert_eq!(binomial(200, 3), 1_313_400u32.into());
    }

    #[test]
    fn log_choose_values() {
        assert_eq!(log_choose(10, 0).unwrap(), 0.0);
        assert!((log_choose(4, 2).unwrap() - 6f64.ln()).abs() < 1e-12);
        assert!(matches!(
            log_choose(3, 5),
            Err(CountingError::DomainError { a: 3, b: 5 })
        ));
        // Agreement with the exact value at a large argument.
        let exact = binomial(1_000_000, 3);
        let exact_ln = exact.to_f64().unwrap().ln();
        let approx = log_choose(1_000_000, 3).unwrap();
        assert!(((approx - exact_ln) / exact_ln).abs() < 1e-9);
    }

    #[test]
    fn scaled_binomial_examples() {
        assert!(check_scaled_binomial(8, 3, &rat(1, 2)).unwrap());
        assert!(check_scaled_binomial(60, 60, &rat(1, 4)).unwrap());
        assert!(check_scaled_binomial(12, 0, &rat(3, 4)).unwrap());
        assert!(matches!(
            check_scaled_binomial(7, 2, &rat(1, 2)),
            Err(CountingError::BadScalingFactor)
        ));
        assert!(matches!(
            check_scaled_binomial(8, 2, &rat(3, 2)),
            Err(CountingError::BadScalingFactor)
        ));
    }

    #[test]
    fn splitting_and_merging_examples() {
        assert!(check_binomial_splitting(10, 6, 2).unwrap());
        assert!(check_binomial_merging(10, 4, 12, 5));
        assert!(check_binomial_merging(10, 11, 4, 2));
    }
}
