//! Exact rationals and their text form.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Always `num/den`, including integers (`2/1`).
pub fn fmt(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `num/den` or a bare integer.
pub fn parse(text: &str) -> Result<Rational> {
    let bad = || Error::InvalidModel(format!("'{text}' is not a rational number"));
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => text
            .parse::<BigInt>()
            .map(Rational::from_integer)
            .map_err(|_| bad()),
    }
}

/// Lossy conversion for statistics; exact values stay rational everywhere else.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
