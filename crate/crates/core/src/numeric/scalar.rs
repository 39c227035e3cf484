use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field arithmetic shared by the floating and exact backends.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_ratio(q: &BigRational) -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(v)))
    }

    fn powi(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }
}

/// A floating scalar with a square root and a known working precision.
pub trait Real: Scalar {
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    /// Unit roundoff of the representation, as an `f64`.
    fn epsilon() -> f64;
}

impl Scalar for f64 {
    fn from_ratio(q: &BigRational) -> Self {
        ratio_to_f64(q)
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn powi(&self, exp: u32) -> Self {
        f64::powi(*self, exp as i32)
    }
}

impl Real for f64 {
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
}

impl Scalar for BigRational {
    fn from_ratio(q: &BigRational) -> Self {
        q.clone()
    }
    fn from_f64(v: f64) -> Self {
        rational_from_f64(v)
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn powi(&self, exp: u32) -> Self {
        num_traits::pow(self.clone(), exp as usize)
    }
}

/// Exact binary value of a finite double.
pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap_or_else(|| panic!("non-finite value {v} has no rational form"))
}

/// Correctly scaled conversion that survives numerators and denominators
/// beyond the `f64` range.
pub fn ratio_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift > 0 {
        q / BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        q * BigRational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let approx = scaled.numer().to_f64().unwrap_or(0.0) / scaled.denom().to_f64().unwrap_or(1.0);
    let half = shift / 2;
    approx * 2f64.powi(half as i32) * 2f64.powi((shift - half) as i32)
}

/// Parses `p/q`, an integer, or a decimal literal (with optional exponent) into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(i) = t.parse::<BigInt>() {
        return Some(BigRational::from_integer(i));
    }
    parse_decimal(t)
}

fn parse_decimal(t: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().ok()?),
        None => (t, 0),
    };
    let negative = mantissa.starts_with('-');
    let body = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(digits);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// `p/q` with `q` omitted when it is one.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_abs(q: &BigRational) -> BigRational {
    q.abs()
}
