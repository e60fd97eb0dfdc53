//! Exact rational values and strict `p/q` parsing.
//!
//! Every comparison that decides a verdict goes through [`Rational`], never
//! floating point. Decimal literals are rejected at the parsing boundary so
//! a verdict can never silently depend on a binary-float conversion.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("decimal notation rejected; write an exact fraction such as \"1/2\"")]
    DecimalRejected,
    #[error("invalid rational literal {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `"p"` or `"p/q"` with optional sign; anything resembling a decimal
/// or scientific literal is an error.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(RationalParseError::Empty);
    }
    if t.contains(['.', 'e', 'E']) {
        return Err(RationalParseError::DecimalRejected);
    }
    let mut parts = t.splitn(2, '/');
    let num_s = parts.next().unwrap_or("");
    let num = BigInt::from_str(num_s.trim())
        .map_err(|_| RationalParseError::Invalid(t.to_string()))?;
    let den = match parts.next() {
        None => BigInt::one(),
        Some(d) => {
            let d = BigInt::from_str(d.trim())
                .map_err(|_| RationalParseError::Invalid(t.to_string()))?;
            if d.is_zero() {
                return Err(RationalParseError::ZeroDenominator(t.to_string()));
            }
            d
        }
    };
    Ok(Rational::new(num, den))
}

/// Convenience constructor for literals in code and tests.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_from_usize(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Smallest integer `>= r`, clamped at zero for negative values.
pub fn ceil_nonneg_u64(r: &Rational) -> u64 {
    let c = r.ceil().to_integer();
    if c.is_negative() {
        0
    } else {
        c.to_u64().unwrap_or(u64::MAX)
    }
}

/// Largest integer `<= r`, saturating at `u64::MAX`; negative values map to
/// `None` (an unsatisfiable upper bound for unsigned counts).
pub fn floor_u64(r: &Rational) -> Option<u64> {
    let f = r.floor().to_integer();
    if f.is_negative() {
        None
    } else {
        Some(f.to_u64().unwrap_or(u64::MAX))
    }
}

/// Serde-friendly wrapper carrying the strict string form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl Rat {
    pub fn as_rational(&self) -> &Rational {
        &self.0
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rat {
    type Err = RationalParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Rat)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map(Rat).map_err(serde::de::Error::custom)
    }
}
