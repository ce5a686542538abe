//! Extended-precision reals and outward-rounded error bounds.
//!
//! [`BigReal`] carries every computed quantity. It is a binary floating-point
//! number with a working precision derived from a decimal digit count
//! [`Precision`]; each arithmetic operation rounds to nearest, so its relative
//! error is at most [`Precision::unit_roundoff`].
//!
//! [`ErrBound`] carries every *uncertainty*. It only ever holds nonnegative
//! upper bounds, and each of its operations rounds upward, so a bound that was
//! valid before an operation stays valid after it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use dashu_float::round::mode::HalfEven;
use dashu_float::{DBig, FBig};
use dashu_int::ops::{BitTest, UnsignedAbs};
use dashu_int::{IBig, UBig};
use thiserror::Error;

type Float = FBig<HalfEven, 2>;

const GUARD_BITS: usize = 8;
const LOG2_10: f64 = std::f64::consts::LOG2_10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("precision must be between 1 and 10000 decimal digits, got {0}")]
    InvalidPrecision(u32),
    #[error("cannot parse {0:?} as a decimal number")]
    Parse(String),
}

/// Working precision, in significant decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision(u32);

impl Precision {
    pub const MIN_DIGITS: u32 = 1;
    pub const MAX_DIGITS: u32 = 10_000;
    pub const DEFAULT: Precision = Precision(30);
    /// Smallest precision; bounds converted at it are still exact (53 bits).
    pub const MIN: Precision = Precision(1);

    pub fn new(digits: u32) -> Result<Self, NumericsError> {
        if (Self::MIN_DIGITS..=Self::MAX_DIGITS).contains(&digits) {
            Ok(Precision(digits))
        } else {
            Err(NumericsError::InvalidPrecision(digits))
        }
    }

    pub fn digits(self) -> u32 {
        self.0
    }

    /// Binary significand width used for every [`BigReal`] at this precision.
    pub fn bits(self) -> usize {
        (f64::from(self.0) * LOG2_10).ceil() as usize + GUARD_BITS
    }

    /// Upper bound on the relative error of one rounded operation.
    pub fn unit_roundoff(self) -> ErrBound {
        ErrBound::pow2(1 - self.bits() as i64)
    }

    /// The per-operation accuracy contract, `10^(2-P)`.
    pub fn contract_tolerance(self) -> ErrBound {
        ErrBound::pow10(2 - i64::from(self.0))
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Extended-precision real number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BigReal(Float);

impl BigReal {
    fn wrap(x: Float, bits: usize) -> Self {
        BigReal(x.with_precision(bits).value())
    }

    pub fn zero(p: Precision) -> Self {
        Self::wrap(Float::ZERO, p.bits())
    }

    pub fn one(p: Precision) -> Self {
        Self::wrap(Float::ONE, p.bits())
    }

    pub fn from_i64(v: i64, p: Precision) -> Self {
        Self::wrap(Float::from(v), p.bits())
    }

    pub fn from_u64(v: u64, p: Precision) -> Self {
        Self::wrap(Float::from(v), p.bits())
    }

    pub fn from_ibig(v: IBig, p: Precision) -> Self {
        Self::wrap(Float::from(v), p.bits())
    }

    pub fn from_ubig(v: UBig, p: Precision) -> Self {
        Self::wrap(Float::from(v), p.bits())
    }

    /// `num / den`, rounded once.
    pub fn ratio(num: impl Into<IBig>, den: impl Into<IBig>, p: Precision) -> Self {
        Self::from_ibig(num.into(), p) / Self::from_ibig(den.into(), p)
    }

    /// `10^k`, rounded once (exact for small nonnegative `k`).
    pub fn pow10(k: i64, p: Precision) -> Self {
        let mag = UBig::from(10u8).pow(k.unsigned_abs() as usize);
        if k >= 0 {
            Self::from_ubig(mag, p)
        } else {
            Self::one(p) / Self::from_ubig(mag, p)
        }
    }

    /// Natural logarithm of 10.
    pub fn ln10(p: Precision) -> Self {
        Self::from_u64(10, p).ln()
    }

    /// `pi` by Machin's formula `16 atan(1/5) - 4 atan(1/239)`.
    pub fn pi(p: Precision) -> Self {
        let guard = Precision(p.digits() + 10);
        let atan_inv = |x: u64| {
            let x2 = x * x;
            let mut power = Self::one(guard).div_u64(x);
            let mut sum = Self::zero(guard);
            let eps = Self::pow10(-i64::from(guard.digits()), guard);
            let mut k = 0u64;
            while power > eps {
                let term = power.div_u64(2 * k + 1);
                if k.is_multiple_of(2) {
                    sum += term;
                } else {
                    sum -= &term;
                }
                power = power.div_u64(x2);
                k += 1;
            }
            sum
        };
        let pi = atan_inv(5).mul_u64(16) - atan_inv(239).mul_u64(4);
        Self::wrap(pi.0, p.bits())
    }

    /// `H_m = 1 + 1/2 + ... + 1/m`, accumulated as an exact rational and
    /// rounded once.
    pub fn harmonic(m: u64, p: Precision) -> Self {
        assert!(m >= 1, "harmonic number needs m >= 1");
        let (mut num, mut den) = (UBig::ZERO, UBig::ONE);
        for t in 1..=m {
            let t = UBig::from(t);
            num = num * &t + &den;
            den *= t;
            let g = dashu_int::ops::Gcd::gcd(&num, &den);
            num /= &g;
            den /= &g;
        }
        Self::from_ubig(num, p) / Self::from_ubig(den, p)
    }

    pub fn ln(&self) -> Self {
        BigReal(self.0.ln())
    }

    pub fn exp(&self) -> Self {
        BigReal(self.0.exp())
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        *self.0.repr().significand() == IBig::ZERO
    }

    pub fn is_negative(&self) -> bool {
        self.0.repr().significand() < &IBig::ZERO
    }

    pub fn is_positive(&self) -> bool {
        self.0.repr().significand() > &IBig::ZERO
    }

    /// Binary significand width this value was rounded to.
    pub fn bits(&self) -> usize {
        self.0.precision()
    }

    pub fn mul_u64(&self, k: u64) -> Self {
        BigReal(&self.0 * Float::from(k))
    }

    pub fn div_u64(&self, k: u64) -> Self {
        BigReal(&self.0 / Float::from(k))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    /// Rigorous upper bound on `|self|`.
    pub fn magnitude(&self) -> ErrBound {
        let repr = self.0.repr();
        ErrBound::from_parts_up(repr.significand().unsigned_abs(), repr.exponent() as i64)
    }

    /// Exact conversion of a bound into a real at precision `p` (or 53 bits,
    /// whichever is wider, so no rounding occurs).
    pub fn from_bound(b: ErrBound, p: Precision) -> Self {
        let bits = p.bits().max(53);
        if b.is_zero() {
            return Self::wrap(Float::ZERO, bits);
        }
        let m = (b.mant * (1u64 << 52) as f64) as u64;
        let x = Float::from_parts(IBig::from(m), (b.exp - 52) as isize);
        Self::wrap(x, bits)
    }

    /// Parses a decimal literal such as `1e-20` or `22.92`.
    pub fn parse(s: &str, p: Precision) -> Result<Self, NumericsError> {
        let dec = DBig::from_str(s.trim()).map_err(|_| NumericsError::Parse(s.to_string()))?;
        let (sig, exp10) = dec.into_repr().into_parts();
        let sig = Self::from_ibig(sig, p);
        Ok(if exp10 >= 0 {
            sig * Self::pow10(exp10 as i64, p)
        } else {
            sig / Self::pow10(-(exp10 as i64), p)
        })
    }

    /// Decimal rendering with exactly `digits` significant digits (rounded to
    /// nearest). Moderate magnitudes print in positional notation, others in
    /// scientific notation.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        self.render(digits, false, false)
    }

    /// Scientific rendering with exactly `digits` significant digits.
    pub fn to_scientific_string(&self, digits: usize) -> String {
        self.render(digits, true, false)
    }

    fn render(&self, digits: usize, force_sci: bool, round_up: bool) -> String {
        let digits = digits.max(1);
        let repr = self.0.repr();
        let sig = repr.significand();
        if *sig == IBig::ZERO {
            return if force_sci || digits == 1 {
                "0".to_string()
            } else {
                format!("0.{}", "0".repeat(digits - 1))
            };
        }
        let negative = *sig < IBig::ZERO;
        let (body, lead) = decimal_digits(&sig.unsigned_abs(), repr.exponent() as i64, digits, round_up);
        layout(negative, &body, lead, force_sci)
    }
}

/// Rounds `sig * 2^exp2` to `digits` significant decimal digits. Returns the
/// digit string and the decimal exponent of its leading digit.
fn decimal_digits(sig: &UBig, exp2: i64, digits: usize, round_up: bool) -> (String, i64) {
    let top = sig.bit_len() as i64 - 1 + exp2;
    let mut lead = (top as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let ten = UBig::from(10u8);
    let low = ten.pow(digits - 1);
    let high = ten.pow(digits);
    loop {
        // scaled = sig * 2^exp2 * 10^shift, with shift chosen so it has `digits` digits
        let shift = digits as i64 - 1 - lead;
        let mut num = sig.clone();
        let mut den = UBig::ONE;
        if exp2 >= 0 {
            num <<= exp2 as usize;
        } else {
            den <<= (-exp2) as usize;
        }
        if shift >= 0 {
            num *= ten.pow(shift as usize);
        } else {
            den *= ten.pow((-shift) as usize);
        }
        let (q, r) = (&num / &den, &num % &den);
        let twice = &r << 1;
        let n = if r == UBig::ZERO {
            q
        } else if round_up || twice > den || (twice == den && q.bit(0)) {
            q + UBig::ONE
        } else {
            q
        };
        if n >= high {
            // estimate one short, or rounding carried (9.996 -> 10.00)
            lead += 1;
            continue;
        }
        if n < low {
            lead -= 1;
            continue;
        }
        return (n.to_string(), lead);
    }
}

fn layout(negative: bool, body: &str, lead: i64, force_sci: bool) -> String {
    let sign = if negative { "-" } else { "" };
    let last = body.len() as i64 - 1;
    if !force_sci && (-6..=24).contains(&lead) {
        if lead >= last {
            format!("{sign}{body}{}", "0".repeat((lead - last) as usize))
        } else if lead >= 0 {
            let split = (lead + 1) as usize;
            format!("{sign}{}.{}", &body[..split], &body[split..])
        } else {
            format!("{sign}0.{}{body}", "0".repeat((-lead - 1) as usize))
        }
    } else {
        let (head, tail) = body.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{lead}")
        } else {
            format!("{sign}{head}.{tail}e{lead}")
        }
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.bits().saturating_sub(GUARD_BITS)) as f64 / LOG2_10).floor().max(1.0) as usize;
        f.write_str(&self.to_scientific_string(digits))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.bits().saturating_sub(GUARD_BITS)) as f64 / LOG2_10).floor().max(1.0) as usize;
        f.write_str(&self.to_decimal_string(digits))
    }
}

macro_rules! forward_binop {
    ($Trait:ident, $method:ident, $op:tt) => {
        impl $Trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                BigReal(&self.0 $op &rhs.0)
            }
        }
        impl $Trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                BigReal(self.0 $op rhs.0)
            }
        }
        impl $Trait<&BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                BigReal(self.0 $op &rhs.0)
            }
        }
        impl $Trait<BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                BigReal(&self.0 $op rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);
forward_binop!(Div, div, /);

impl AddAssign<&BigReal> for BigReal {
    fn add_assign(&mut self, rhs: &BigReal) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<BigReal> for BigReal {
    fn add_assign(&mut self, rhs: BigReal) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&BigReal> for BigReal {
    fn sub_assign(&mut self, rhs: &BigReal) {
        self.0 -= &rhs.0;
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0.clone())
    }
}

/// Nonnegative upper bound, stored as `mant * 2^exp` with `mant` in `[1, 2)`
/// (or zero). All arithmetic rounds toward `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrBound {
    mant: f64,
    exp: i64,
}

const MANT_MASK: u64 = (1 << 52) - 1;

impl ErrBound {
    pub const ZERO: ErrBound = ErrBound { mant: 0.0, exp: 0 };
    pub const ONE: ErrBound = ErrBound { mant: 1.0, exp: 0 };

    fn normalize(m: f64, e: i64) -> Self {
        debug_assert!(m >= 0.0 && m.is_finite());
        if m == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = if m < f64::MIN_POSITIVE { (m * 2f64.powi(64), e - 64) } else { (m, e) };
        let bits = m.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        ErrBound {
            mant: f64::from_bits((bits & MANT_MASK) | (1023u64 << 52)),
            exp: e + biased - 1023,
        }
    }

    /// Exact bound for a nonnegative finite `x`.
    pub fn from_f64(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "bound must be finite and nonnegative, got {x}");
        Self::normalize(x, 0)
    }

    pub fn pow2(k: i64) -> Self {
        ErrBound { mant: 1.0, exp: k }
    }

    pub fn from_u64(n: u64) -> Self {
        Self::from_parts_up(UBig::from(n), 0)
    }

    pub fn from_ubig(n: &UBig) -> Self {
        Self::from_parts_up(n.clone(), 0)
    }

    /// Upper bound on `sig * 2^exp`.
    fn from_parts_up(sig: UBig, exp: i64) -> Self {
        Self::from_parts(sig, exp, true)
    }

    fn from_parts(sig: UBig, exp: i64, up: bool) -> Self {
        if sig == UBig::ZERO {
            return Self::ZERO;
        }
        let len = sig.bit_len();
        if len <= 53 {
            let m: u64 = sig.try_into().expect("fits in 53 bits");
            return Self::normalize(m as f64, exp);
        }
        let shift = len - 53;
        let top: u64 = (&sig >> shift).try_into().expect("fits in 53 bits");
        let m = if up { top + 1 } else { top };
        Self::normalize(m as f64, exp + shift as i64)
    }

    /// Upper bound on `10^k`.
    pub fn pow10(k: i64) -> Self {
        let mag = UBig::from(10u8).pow(k.unsigned_abs() as usize);
        if k >= 0 {
            Self::from_parts_up(mag, 0)
        } else {
            Self::from_parts(mag, 0, false).recip()
        }
    }

    /// Upper bound on `1 / self`; `self` must be nonzero and is treated as a
    /// lower bound of the quantity being inverted.
    pub fn recip(self) -> Self {
        assert!(!self.is_zero(), "reciprocal of a zero bound");
        Self::normalize((1.0 / self.mant).next_up(), -self.exp)
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn scale_pow2(self, k: i64) -> Self {
        if self.is_zero() {
            self
        } else {
            ErrBound { mant: self.mant, exp: self.exp + k }
        }
    }

    pub fn mul_u64(self, k: u64) -> Self {
        self * Self::from_u64(k)
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Lossy conversion for display and heuristics (saturates to `inf`/`0`).
    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.exp > 1100 {
            return f64::INFINITY;
        }
        if self.exp < -1100 {
            return 0.0;
        }
        self.mant * 2f64.powi(self.exp as i32)
    }

    /// Approximate `log10`, usable even far outside the f64 range.
    pub fn log10(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mant.log10() + self.exp as f64 * std::f64::consts::LOG10_2
        }
    }

    pub fn to_big(self, p: Precision) -> BigReal {
        BigReal::from_bound(self, p)
    }

    /// `true` when the bound is at most `x`.
    pub fn le_big(self, x: &BigReal) -> bool {
        let bits = x.bits().max(53);
        let me = BigReal::from_bound(self, Precision::MIN);
        let me = BigReal::wrap(me.0, bits);
        me <= *x
    }

    /// Scientific rendering rounded upward to `digits` significant digits.
    pub fn to_string_up(self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        BigReal::from_bound(self, Precision::MIN).render(digits, true, true)
    }
}

impl PartialOrd for ErrBound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.exp.cmp(&other.exp).then(self.mant.total_cmp(&other.mant)),
        })
    }
}

impl Add for ErrBound {
    type Output = ErrBound;
    fn add(self, rhs: ErrBound) -> ErrBound {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let diff = hi.exp - lo.exp;
        if diff > 60 {
            // lo < 2^-59 * hi, below half an ulp of hi's mantissa
            return Self::normalize(hi.mant.next_up(), hi.exp);
        }
        let m = hi.mant + lo.mant * 2f64.powi(-(diff as i32));
        Self::normalize(m.next_up(), hi.exp)
    }
}

impl AddAssign for ErrBound {
    fn add_assign(&mut self, rhs: ErrBound) {
        *self = *self + rhs;
    }
}

impl Mul for ErrBound {
    type Output = ErrBound;
    fn mul(self, rhs: ErrBound) -> ErrBound {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::normalize((self.mant * rhs.mant).next_up(), self.exp + rhs.exp)
    }
}

impl std::iter::Sum for ErrBound {
    fn sum<I: Iterator<Item = ErrBound>>(iter: I) -> Self {
        iter.fold(ErrBound::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for ErrBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_up(3))
    }
}

/// A value with a rigorous bound on its absolute error.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: BigReal,
    pub uncertainty: ErrBound,
}

impl Estimate {
    pub fn exact(value: BigReal) -> Self {
        Estimate { value, uncertainty: ErrBound::ZERO }
    }

    pub fn lower(&self) -> BigReal {
        &self.value - self.uncertainty.to_big(Precision::MIN)
    }

    pub fn upper(&self) -> BigReal {
        &self.value + self.uncertainty.to_big(Precision::MIN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p30() -> Precision {
        Precision::new(30).unwrap()
    }

    #[test]
    fn ln10_digits() {
        let x = BigReal::ln10(p30());
        assert_eq!(x.to_decimal_string(30), "2.30258509299404568401799145468");
        assert_eq!(x.mul_u64(10).to_decimal_string(30), "23.0258509299404568401799145468");
    }

    #[test]
    fn pi_digits() {
        assert_eq!(BigReal::pi(p30()).to_decimal_string(30), "3.14159265358979323846264338328");
    }

    #[test]
    fn harmonic_small_values() {
        let p = p30();
        assert_eq!(BigReal::harmonic(1, p), BigReal::one(p));
        let h8 = BigReal::harmonic(8, p);
        let diff = (&h8 - BigReal::ratio(761, 280, p)).abs();
        assert!(diff.magnitude().le_big(&BigReal::pow10(-29, p)));
        let h9 = BigReal::harmonic(9, p);
        assert!(h9.to_decimal_string(15).starts_with("2.82896825396825"));
    }

    #[test]
    fn decimal_formatting() {
        let p = p30();
        assert_eq!(BigReal::from_i64(100, p).to_decimal_string(5), "100.00");
        assert_eq!(BigReal::ratio(1, 8, p).to_decimal_string(3), "0.125");
        assert_eq!(BigReal::ratio(-1, 3, p).to_decimal_string(4), "-0.3333");
        assert_eq!(BigReal::pow10(-30, p).to_decimal_string(2), "1.0e-30");
        assert_eq!(BigReal::zero(p).to_decimal_string(3), "0.00");
        assert_eq!(BigReal::from_i64(12345, p).to_scientific_string(3), "1.23e4");
    }

    #[test]
    fn parse_scientific() {
        let p = p30();
        let x = BigReal::parse("1e-20", p).unwrap();
        assert_eq!(x.to_scientific_string(5), "1.0000e-20");
        assert_eq!(BigReal::parse("22.5", p).unwrap(), BigReal::ratio(45, 2, p));
        assert!(BigReal::parse("abc", p).is_err());
    }

    #[test]
    fn bound_rounds_upward() {
        let tenth = ErrBound::pow10(-1);
        assert!(tenth.to_f64() >= 0.1);
        let sum: ErrBound = std::iter::repeat_n(tenth, 10).sum();
        assert!(sum >= ErrBound::ONE);
        let tiny = ErrBound::pow10(-5000);
        assert!((tiny.log10() + 5000.0).abs() < 1e-9);
        assert!(ErrBound::ONE + tiny > ErrBound::ONE);
        assert_eq!(ErrBound::from_u64(3).to_string_up(3), "3.00e0");
        assert_eq!(ErrBound::pow10(-1).to_string_up(2), "1.1e-1");
    }

    #[test]
    fn magnitude_bounds_value() {
        let p = p30();
        let x = BigReal::ratio(-2, 3, p);
        let m = x.magnitude();
        assert!(m.to_big(p) >= x.abs());
        let slack = BigReal::ratio(2, 3, p) * (BigReal::one(p) + BigReal::pow10(-15, p));
        assert!(m.le_big(&slack));
    }

    #[test]
    fn rejects_bad_precision() {
        assert!(Precision::new(0).is_err());
        assert!(Precision::new(30).is_ok());
    }
}
