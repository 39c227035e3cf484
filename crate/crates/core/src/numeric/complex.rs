use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::scalar::{format_rational, parse_rational, ratio_to_f64};

/// Exact element of Q(i).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ComplexRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl ComplexRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        ComplexRational { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        ComplexRational { re, im: BigRational::zero() }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::real(BigRational::from_integer(v.into()))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Self::real(BigRational::new(p.into(), q.into()))
    }

    pub fn i() -> Self {
        ComplexRational { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::real(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexRational { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplies by `i^k`.
    pub fn mul_i_pow(self, k: u8) -> Self {
        match k % 4 {
            0 => self,
            1 => ComplexRational { re: -self.im, im: self.re },
            2 => ComplexRational { re: -self.re, im: -self.im },
            _ => ComplexRational { re: self.im, im: -self.re },
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        ComplexRational { re: &self.re * s, im: &self.im * s }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }

    /// Two whitespace separated rationals, real part first.
    pub fn parse(re: &str, im: &str) -> Option<Self> {
        Some(ComplexRational { re: parse_rational(re)?, im: parse_rational(im)? })
    }
}

impl fmt::Display for ComplexRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", format_rational(&self.re), format_rational(&self.im))
    }
}

impl Add for ComplexRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ComplexRational { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl AddAssign<&ComplexRational> for ComplexRational {
    fn add_assign(&mut self, rhs: &ComplexRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl Sub for ComplexRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ComplexRational { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Neg for ComplexRational {
    type Output = Self;
    fn neg(self) -> Self {
        ComplexRational { re: -self.re, im: -self.im }
    }
}

impl<'a> Mul<&'a ComplexRational> for &'a ComplexRational {
    type Output = ComplexRational;
    fn mul(self, rhs: &'a ComplexRational) -> ComplexRational {
        if self.im.is_zero() && rhs.im.is_zero() {
            return ComplexRational::real(&self.re * &rhs.re);
        }
        ComplexRational { re: &self.re * &rhs.re - &self.im * &rhs.im, im: &self.re * &rhs.im + &self.im * &rhs.re }
    }
}

impl Mul for ComplexRational {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}
