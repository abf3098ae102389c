//! Numbers that stay exact (big rationals) for as long as the operations allow,
//! degrading to `f64` once a transcendental operation is involved.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponents larger than this are evaluated approximately.
const MAX_EXACT_EXPONENT: u32 = 4096;

#[derive(Debug, Clone)]
pub enum Number {
    Exact(BigRational),
    Real(f64),
}

impl Number {
    pub fn int(n: i64) -> Self {
        Number::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Number::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Number::Exact(BigRational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Number::Exact(q) => Some(q),
            Number::Real(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(q) => rational_to_f64(q),
            Number::Real(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(q) => q.is_zero(),
            Number::Real(x) => *x == 0.0,
        }
    }

    pub fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a + b),
            _ => Number::Real(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a - b),
            _ => Number::Real(self.to_f64() - other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a * b),
            _ => Number::Real(self.to_f64() * other.to_f64()),
        }
    }

    pub fn div(&self, other: &Number) -> Result<Number> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a / b),
            _ => Number::Real(self.to_f64() / other.to_f64()),
        })
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Exact(a) => Number::Exact(-a),
            Number::Real(x) => Number::Real(-x),
        }
    }

    pub fn abs(&self) -> Number {
        match self {
            Number::Exact(a) => Number::Exact(a.abs()),
            Number::Real(x) => Number::Real(x.abs()),
        }
    }

    pub fn min(&self, other: &Number) -> Number {
        if self.cmp_num(other) == Ordering::Greater {
            other.clone()
        } else {
            self.clone()
        }
    }

    pub fn max(&self, other: &Number) -> Number {
        if self.cmp_num(other) == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        }
    }

    pub fn exp(&self) -> Number {
        if let Number::Exact(q) = self {
            if q.is_zero() {
                return Number::one();
            }
        }
        Number::Real(self.to_f64().exp())
    }

    /// `base ^ exponent`; exact when the base is exact and the exponent is a
    /// small integer.
    pub fn pow(&self, exponent: &Number) -> Result<Number> {
        if let (Number::Exact(b), Number::Exact(e)) = (self, exponent) {
            if e.is_integer() {
                if let Some(k) = e.to_integer().abs().to_u32() {
                    if k <= MAX_EXACT_EXPONENT {
                        if e.is_negative() && b.is_zero() {
                            return Err(Error::DivisionByZero);
                        }
                        let p = num::pow(b.clone(), k as usize);
                        return Ok(Number::Exact(if e.is_negative() { p.recip() } else { p }));
                    }
                }
            }
        }
        let r = self.to_f64().powf(exponent.to_f64());
        if r.is_nan() {
            return Err(Error::Eval(format!(
                "power({}, {}) is undefined",
                self, exponent
            )));
        }
        Ok(Number::Real(r))
    }

    /// Normal density `N(x; mean, variance)`.
    pub fn gauss(x: &Number, mean: &Number, variance: &Number) -> Result<Number> {
        let v = variance.to_f64();
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::Eval(format!(
                "gauss variance must be positive, got {}",
                variance
            )));
        }
        Ok(Number::Real(gauss_pdf(x.to_f64(), mean.to_f64(), v)))
    }

    pub fn cmp_num(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }

    pub fn num_eq(&self, other: &Number) -> bool {
        self.cmp_num(other) == Ordering::Equal
    }
}

impl From<BigRational> for Number {
    fn from(q: BigRational) -> Self {
        Number::Exact(q)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Real(x)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(q) => write!(f, "{}", format_rational(q)),
            Number::Real(x) => write!(f, "{}", x),
        }
    }
}

pub fn gauss_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_i64(), q.denom().to_i64()) {
        if n.unsigned_abs() < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite double into a rational.
pub fn f64_to_rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// True when the decimal expansion of `q` terminates.
pub fn is_terminating(q: &BigRational) -> bool {
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
    }
    while (&d % &five).is_zero() {
        d /= &five;
    }
    d.is_one()
}

/// Integers print bare, terminating fractions as decimals and everything else
/// as `n/d`. The output re-lexes to the same literal.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    if is_terminating(q) {
        let neg = q.is_negative();
        let a = q.abs();
        let int = a.trunc().to_integer();
        let mut frac = a.fract();
        let mut digits = String::new();
        let ten = BigRational::from_integer(BigInt::from(10));
        while !frac.is_zero() {
            frac *= &ten;
            let dgt = frac.trunc().to_integer();
            digits.push_str(&dgt.to_string());
            frac = frac.fract();
        }
        return format!("{}{}.{}", if neg { "-" } else { "" }, int, digits);
    }
    format!("{}/{}", q.numer(), q.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_exact() {
        let third = Number::Exact(rational(1, 3));
        let s = third.add(&third).add(&third);
        assert!(s.is_exact());
        assert!(s.num_eq(&Number::one()));
        let p = Number::Exact(rational(2, 3)).pow(&Number::int(-2)).unwrap();
        assert!(p.num_eq(&Number::Exact(rational(9, 4))));
    }

    #[test]
    fn transcendental_degrades_to_real() {
        assert!(!Number::int(1).exp().is_exact());
        assert!(Number::zero().exp().is_exact());
        let g = Number::gauss(&Number::int(0), &Number::int(0), &Number::int(4)).unwrap();
        assert!((g.to_f64() - 1.0 / (8.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!(Number::gauss(&Number::int(0), &Number::int(0), &Number::int(0)).is_err());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(matches!(
            Number::one().div(&Number::zero()),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&rational(1, 10)), "0.1");
        assert_eq!(format_rational(&rational(-5, 4)), "-1.25");
        assert_eq!(format_rational(&rational(1, 3)), "1/3");
        assert_eq!(format_rational(&rational(-7, 1)), "-7");
    }
}
