//! Exact rational parsing and the dissipation parameter.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumberError {
    #[error("`{0}` is not a decimal or p/q rational")]
    Syntax(String),
    #[error("`{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("dissipation {0} outside [0, 1]")]
    DissipationRange(String),
    #[error("`{0}` does not fit in 64-bit numerator/denominator")]
    Overflow(String),
}

/// Parses `12`, `-0.25`, `.5`, or `3/40` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, NumberError> {
    let s = text.trim();
    let bad = || NumberError::Syntax(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(NumberError::ZeroDenominator(text.to_string()));
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = num::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Exact conversion of a finite double (used when a caller hands over f64).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Sand blown away by each topple, `p/q` with `0 <= p/q <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Dissipation(Ratio<i64>);

impl Dissipation {
    pub fn new(numer: i64, denom: i64) -> Result<Self, NumberError> {
        if denom == 0 {
            return Err(NumberError::ZeroDenominator(format!("{numer}/{denom}")));
        }
        let r = Ratio::new(numer, denom);
        if r.is_negative() || r > Ratio::one() {
            return Err(NumberError::DissipationRange(r.to_string()));
        }
        Ok(Dissipation(r))
    }

    pub fn zero() -> Self {
        Dissipation(Ratio::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    /// Always positive; the reduced denominator.
    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn as_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(self.numer().into(), self.denom().into())
    }
}

impl FromStr for Dissipation {
    type Err = NumberError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r = parse_rational(s)?;
        let overflow = || NumberError::Overflow(s.to_string());
        let numer = r.numer().to_i64().ok_or_else(overflow)?;
        let denom = r.denom().to_i64().ok_or_else(overflow)?;
        Dissipation::new(numer, denom)
    }
}

impl TryFrom<String> for Dissipation {
    type Error = NumberError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Dissipation> for String {
    fn from(d: Dissipation) -> String {
        d.to_string()
    }
}

impl fmt::Display for Dissipation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}
