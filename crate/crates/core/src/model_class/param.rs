//! Exact rational parameter values in [0, 1].

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An exact parameter value in [0, 1], stored as a reduced rational so that
/// equality and ordering are exact. Dyadic values (denominator a power of
/// two) additionally expose their binary-expansion length.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Parameter(BigRational);

impl Parameter {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(Error::invalid(format!("parameter {value} outside [0,1]")));
        }
        Ok(Parameter(value))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom <= 0 {
            return Err(Error::invalid(format!("denominator must be positive: {denom}")));
        }
        Parameter::new(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Self {
        Parameter(BigRational::zero())
    }

    pub fn one() -> Self {
        Parameter(BigRational::one())
    }

    pub fn half() -> Self {
        Parameter(BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    /// Parses "p/q", a binary fraction "0.β…b" (e.g. "0.0011b"), or "0"/"1".
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |m: &str| Error::invalid(format!("cannot parse parameter {s:?}: {m}"));
        if let Some(stripped) = s.strip_suffix(['b', 'B']) {
            let Some(bits) = stripped.strip_prefix("0.") else {
                return Err(bad("binary form must look like 0.β…b"));
            };
            if bits.is_empty() || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(bad("binary digits must be 0/1"));
            }
            let mut numer = BigInt::zero();
            for b in bits.bytes() {
                numer = &numer * 2 + (b - b'0');
            }
            let denom = BigInt::one() << bits.len();
            return Parameter::new(BigRational::new(numer, denom));
        }
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim()).map_err(|e| bad(&e.to_string()))?;
            let q = BigInt::from_str(q.trim()).map_err(|e| bad(&e.to_string()))?;
            if !q.is_positive() {
                return Err(bad("denominator must be positive"));
            }
            return Parameter::new(BigRational::new(p, q));
        }
        match s {
            "0" => Ok(Parameter::zero()),
            "1" => Ok(Parameter::one()),
            _ => Err(bad("expected p/q, 0.β…b, 0, or 1")),
        }
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_interior(&self) -> bool {
        !self.is_zero() && !self.is_one()
    }

    /// 1 − θ, exact.
    pub fn complement(&self) -> Parameter {
        Parameter(BigRational::one() - &self.0)
    }

    pub fn to_f64(&self) -> f64 {
        big_ratio_to_f64(&self.0)
    }

    /// (1 − θ) as f64, computed from the exact complement.
    pub fn complement_f64(&self) -> f64 {
        big_ratio_to_f64(&(BigRational::one() - &self.0))
    }

    /// Denominator is a power of two (0 and 1 count as dyadic).
    pub fn is_dyadic(&self) -> bool {
        let d = self.0.denom();
        (d & (d - BigInt::one())).is_zero()
    }

    /// Binary-expansion length l(θ) = position of the final 1-bit of
    /// θ = 0.β₁…β_{l−1}1. Defined for dyadic θ strictly inside (0, 1).
    pub fn dyadic_len(&self) -> Option<u32> {
        if !self.is_interior() || !self.is_dyadic() {
            return None;
        }
        Some((self.0.denom().bits() - 1) as u32)
    }

    /// Binary form "0.β…b" for dyadic θ in (0,1); "0" / "1" at the ends.
    pub fn to_binary_string(&self) -> Option<String> {
        if self.is_zero() {
            return Some("0".to_string());
        }
        if self.is_one() {
            return Some("1".to_string());
        }
        let l = self.dyadic_len()? as usize;
        let m = self.0.numer();
        let digits = format!("{:0>l$}", m.to_str_radix(2));
        Some(format!("0.{digits}b"))
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Precise BigRational → f64 for nonnegative ratios: scale the numerator so
/// the integer quotient carries ~63 bits, divide exactly, then rescale.
/// Accurate to ~1 ulp even when numerator/denominator exceed f64 range.
pub(crate) fn big_ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    debug_assert!(!r.is_negative());
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = 63 - (nb - db);
    if shift <= 0 {
        // quotient already ≥ 2^63: safe to convert directly
        return r.numer().to_f64().unwrap_or(f64::INFINITY)
            / r.denom().to_f64().unwrap_or(f64::INFINITY);
    }
    let q = (r.numer() << shift) / r.denom();
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    // 2^(−shift) splits into two factors to stay inside the f64 exponent range
    if shift > 1000 {
        qf * 2f64.powi(-1000) * 2f64.powi(-(shift as i32 - 1000))
    } else {
        qf * 2f64.powi(-(shift as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(Parameter::parse("3/16").unwrap(), Parameter::from_ratio(3, 16).unwrap());
        assert_eq!(Parameter::parse("0.0011b").unwrap(), Parameter::from_ratio(3, 16).unwrap());
        assert_eq!(Parameter::parse("0").unwrap(), Parameter::zero());
        assert_eq!(Parameter::parse("1").unwrap(), Parameter::one());
        assert_eq!(Parameter::parse("6/32").unwrap(), Parameter::from_ratio(3, 16).unwrap());
        assert!(Parameter::parse("5/4").is_err());
        assert!(Parameter::parse("-1/4").is_err());
        assert!(Parameter::parse("0.012b").is_err());
        assert!(Parameter::parse("x").is_err());
    }

    #[test]
    fn binary_round_trip() {
        for (num, den, s) in [(1i64, 2i64, "0.1b"), (3, 16, "0.0011b"), (11, 32, "0.01011b")] {
            let p = Parameter::from_ratio(num, den).unwrap();
            assert_eq!(p.to_binary_string().unwrap(), s);
            assert_eq!(Parameter::parse(s).unwrap(), p);
        }
    }

    #[test]
    fn dyadic_length() {
        assert_eq!(Parameter::from_ratio(1, 2).unwrap().dyadic_len(), Some(1));
        assert_eq!(Parameter::from_ratio(3, 16).unwrap().dyadic_len(), Some(4));
        assert_eq!(Parameter::from_ratio(1, 3).unwrap().dyadic_len(), None);
        assert_eq!(Parameter::zero().dyadic_len(), None);
        assert!(Parameter::from_ratio(1, 3).unwrap().is_dyadic() == false);
        assert!(Parameter::zero().is_dyadic());
    }

    #[test]
    fn f64_conversion_is_precise() {
        let p = Parameter::from_ratio(1, 3).unwrap();
        assert!((p.to_f64() - 1.0 / 3.0).abs() < 1e-16);
        // tiny dyadic far below f64::EPSILON-scale numerators
        let tiny = Parameter::new(BigRational::new(BigInt::one(), BigInt::one() << 200)).unwrap();
        assert_eq!(tiny.to_f64(), 2f64.powi(-200));
        let near_one = tiny.complement();
        assert_eq!(near_one.complement_f64(), 2f64.powi(-200));
    }
}
