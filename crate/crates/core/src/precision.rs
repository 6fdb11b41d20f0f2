//! Arithmetic back-ends for the hitting-time solver: exact rationals and
//! fixed-precision binary floats.

use std::cell::RefCell;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::RateProfile;

/// Significant digits used when printing exact rationals as decimals.
pub const RATIONAL_DIGITS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PrecisionMode {
    ExactRational,
    BigFloat { bits: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub mode: PrecisionMode,
    pub series_rel_tol: f64,
    pub max_terms: u64,
}

impl PrecisionConfig {
    pub fn big_float(bits: usize) -> Self {
        Self {
            mode: PrecisionMode::BigFloat { bits },
            series_rel_tol: 1e-30,
            max_terms: 50_000_000,
        }
    }

    pub fn exact() -> Self {
        Self {
            mode: PrecisionMode::ExactRational,
            series_rel_tol: 1e-40,
            max_terms: 100_000,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.series_rel_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let PrecisionMode::BigFloat { bits } = self.mode {
            if bits < 64 {
                return Err(Error::Validation(format!("big-float precision {bits} < 64 bits")));
            }
        }
        if self.series_rel_tol.is_nan() || self.series_rel_tol <= 0.0 {
            return Err(Error::Validation("series tolerance must be positive".into()));
        }
        if self.max_terms == 0 {
            return Err(Error::Validation("max_terms must be positive".into()));
        }
        Ok(())
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self::big_float(256)
    }
}

/// A value produced by the solver in either arithmetic.
#[derive(Clone, Debug)]
pub enum Number {
    Rational(BigRational),
    Float(BigFloat),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(f) => f.to_string().parse().unwrap_or(f64::NAN),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn as_float(&self) -> Option<&BigFloat> {
        match self {
            Number::Float(f) => Some(f),
            Number::Rational(_) => None,
        }
    }
}

/// Decimal rendering: floats at their full binary precision, rationals to
/// [`RATIONAL_DIGITS`] significant digits.
impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Float(x) => write!(f, "{x}"),
            Number::Rational(r) => f.write_str(&rational_to_decimal(r, RATIONAL_DIGITS)),
        }
    }
}

/// Scientific notation with `digits` significant digits, truncated.
pub fn rational_to_decimal(r: &BigRational, digits: usize) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let (num, den) = (r.numer().abs(), r.denom().clone());
    // exponent estimate from digit counts, then correct by one
    let mut exp = num.to_string().len() as i64 - den.to_string().len() as i64;
    let ten = BigInt::from(10);
    let scaled = |e: i64| -> BigInt {
        let shift = digits as i64 - 1 - e;
        if shift >= 0 {
            (&num * num_traits::pow(ten.clone(), shift as usize)).div_floor(&den)
        } else {
            num.div_floor(&(&den * num_traits::pow(ten.clone(), (-shift) as usize)))
        }
    };
    let mut m = scaled(exp);
    let lower = num_traits::pow(ten.clone(), digits - 1);
    if m < lower {
        exp -= 1;
        m = scaled(exp);
    } else if m >= &lower * &ten {
        exp += 1;
        m = scaled(exp);
    }
    let s = m.to_string();
    let (head, tail) = s.split_at(1);
    format!("{sign}{head}.{tail}e{exp}")
}

/// Arithmetic used by the solver. Implementations are cheap to construct and
/// not shared across threads.
pub(crate) trait Kernel {
    type Num: Clone;

    fn from_ratio(&self, r: &BigRational) -> Self::Num;
    fn from_u64(&self, v: u64) -> Self::Num;
    fn add(&self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn sub(&self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn mul(&self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn div(&self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn le(&self, a: &Self::Num, b: &Self::Num) -> bool;
    fn is_zero(&self, a: &Self::Num) -> bool;
    fn to_f64(&self, a: &Self::Num) -> f64;
    /// `ln(1 + n)`
    fn ln_1p(&self, n: u64) -> Result<Self::Num>;
    fn wrap(&self, a: Self::Num) -> Number;
    fn unwrap(&self, a: &Number) -> Result<Self::Num>;
    /// Unit roundoff; zero for exact arithmetic.
    fn unit_roundoff(&self) -> f64;

    fn zero(&self) -> Self::Num {
        self.from_u64(0)
    }

    fn profile_value(&self, p: &RateProfile, n: u64) -> Result<Self::Num> {
        if let Some(r) = p.value_exact(n)? {
            return Ok(self.from_ratio(&r));
        }
        match p {
            RateProfile::LogOverN(k) => {
                let num = self.mul(&self.from_ratio(k.exact()), &self.ln_1p(n)?);
                Ok(self.div(&num, &self.from_u64(n)))
            }
            RateProfile::Combined { scale, between, within } => {
                let b = self.mul(&self.from_ratio(scale.exact()), &self.profile_value(between, n)?);
                Ok(self.add(&b, &self.profile_value(within, n)?))
            }
            _ => unreachable!("rational families are handled above"),
        }
    }

    /// Upper bound on `sup_{j ≥ m} γ(j)`.
    fn profile_tail_sup(&self, p: &RateProfile, m: u64) -> Result<Self::Num> {
        if let Some(r) = p.tail_supremum_exact(m) {
            return Ok(self.from_ratio(&r));
        }
        match p {
            RateProfile::LogOverN(_) => self.profile_value(p, m.max(1)),
            RateProfile::Combined { scale, between, within } => {
                let b = self.mul(&self.from_ratio(scale.exact()), &self.profile_tail_sup(between, m)?);
                Ok(self.add(&b, &self.profile_tail_sup(within, m)?))
            }
            _ => unreachable!("rational families are handled above"),
        }
    }
}

pub(crate) struct ExactKernel;

impl Kernel for ExactKernel {
    type Num = BigRational;

    fn from_ratio(&self, r: &BigRational) -> BigRational {
        r.clone()
    }
    fn from_u64(&self, v: u64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn div(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a / b
    }
    fn le(&self, a: &BigRational, b: &BigRational) -> bool {
        a <= b
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn to_f64(&self, a: &BigRational) -> f64 {
        a.to_f64().unwrap_or(f64::NAN)
    }
    fn ln_1p(&self, _n: u64) -> Result<BigRational> {
        Err(Error::Domain(
            "logarithmic profiles take irrational values; use big-float precision".into(),
        ))
    }
    fn wrap(&self, a: BigRational) -> Number {
        Number::Rational(a)
    }
    fn unwrap(&self, a: &Number) -> Result<BigRational> {
        a.as_rational()
            .cloned()
            .ok_or_else(|| Error::Domain("expected an exact rational value".into()))
    }
    fn unit_roundoff(&self) -> f64 {
        0.0
    }
}

pub(crate) struct FloatKernel {
    bits: usize,
    rm: RoundingMode,
    consts: RefCell<Consts>,
}

impl FloatKernel {
    pub(crate) fn new(bits: usize) -> Result<Self> {
        let consts = Consts::new().map_err(|e| Error::Domain(format!("big-float constants: {e:?}")))?;
        Ok(Self {
            bits,
            rm: RoundingMode::ToEven,
            consts: RefCell::new(consts),
        })
    }

    fn check(&self, v: BigFloat) -> BigFloat {
        debug_assert!(!v.is_nan(), "big-float arithmetic produced NaN");
        v
    }

    fn parse_int(&self, i: &BigInt) -> BigFloat {
        if let Some(v) = i.to_i64() {
            return BigFloat::from_i64(v, self.bits);
        }
        BigFloat::parse(&i.to_string(), Radix::Dec, self.bits, self.rm, &mut self.consts.borrow_mut())
    }
}

impl Kernel for FloatKernel {
    type Num = BigFloat;

    fn from_ratio(&self, r: &BigRational) -> BigFloat {
        let n = self.parse_int(r.numer());
        let d = self.parse_int(r.denom());
        self.check(n.div(&d, self.bits, self.rm))
    }
    fn from_u64(&self, v: u64) -> BigFloat {
        BigFloat::from_u64(v, self.bits)
    }
    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.check(a.add(b, self.bits, self.rm))
    }
    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.check(a.sub(b, self.bits, self.rm))
    }
    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.check(a.mul(b, self.bits, self.rm))
    }
    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.check(a.div(b, self.bits, self.rm))
    }
    fn le(&self, a: &BigFloat, b: &BigFloat) -> bool {
        matches!(a.cmp(b), Some(c) if c <= 0)
    }
    fn is_zero(&self, a: &BigFloat) -> bool {
        a.is_zero()
    }
    fn to_f64(&self, a: &BigFloat) -> f64 {
        a.to_string().parse().unwrap_or(f64::NAN)
    }
    fn ln_1p(&self, n: u64) -> Result<BigFloat> {
        let x = BigFloat::from_u64(n + 1, self.bits);
        Ok(self.check(x.ln(self.bits, self.rm, &mut self.consts.borrow_mut())))
    }
    fn wrap(&self, a: BigFloat) -> Number {
        Number::Float(a)
    }
    fn unwrap(&self, a: &Number) -> Result<BigFloat> {
        match a {
            Number::Float(f) => {
                let mut f = f.clone();
                f.set_precision(self.bits, self.rm)
                    .map_err(|e| Error::Domain(format!("precision change failed: {e:?}")))?;
                Ok(f)
            }
            Number::Rational(r) => Ok(self.from_ratio(r)),
        }
    }
    fn unit_roundoff(&self) -> f64 {
        // precision is rounded up to whole 64-bit words
        let effective = self.bits.div_ceil(64) * 64;
        2f64.powi(-(effective as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn decimal_rendering_of_rationals() {
        assert_eq!(rational_to_decimal(&ratio(1, 3), 5), "3.3333e-1");
        assert_eq!(rational_to_decimal(&ratio(2047, 11), 6), "1.86090e2");
        assert_eq!(rational_to_decimal(&ratio(-1, 8), 3), "-1.25e-1");
        assert_eq!(rational_to_decimal(&ratio(100, 1), 2), "1.0e2");
        assert_eq!(rational_to_decimal(&ratio(999, 1000), 2), "9.9e-1");
        assert_eq!(rational_to_decimal(&BigRational::zero(), 4), "0");
    }

    #[test]
    fn float_kernel_roundtrip() {
        let k = FloatKernel::new(128).unwrap();
        let third = k.from_ratio(&ratio(1, 3));
        assert!((k.to_f64(&third) - 1.0 / 3.0).abs() < 1e-16);
        let ln2 = k.ln_1p(1).unwrap();
        assert!((k.to_f64(&ln2) - 2f64.ln()).abs() < 1e-16);
        assert!(k.le(&third, &k.from_u64(1)));
        assert!(!k.le(&k.from_u64(1), &third));
    }

    #[test]
    fn exact_kernel_rejects_logs() {
        assert!(ExactKernel.ln_1p(3).is_err());
        let p: RateProfile = "logn:1".parse().unwrap();
        assert!(ExactKernel.profile_value(&p, 2).is_err());
    }

    #[test]
    fn precision_validation() {
        assert!(PrecisionConfig::big_float(32).validate().is_err());
        assert!(PrecisionConfig::big_float(128).validate().is_ok());
        assert!(PrecisionConfig::exact().with_tolerance(0.0).validate().is_err());
    }
}
