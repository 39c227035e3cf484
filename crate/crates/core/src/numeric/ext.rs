use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_base::{Abs, SquareRoot};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::scalar::{Real, Scalar};

type Float = FBig<HalfEven, 2>;

/// Binary floating point with a `BITS`-bit significand.
#[derive(Clone, PartialEq)]
pub struct Ext<const BITS: usize>(Float);

pub type Ext128 = Ext<128>;
pub type Ext256 = Ext<256>;
pub type Ext512 = Ext<512>;

impl<const BITS: usize> Ext<BITS> {
    fn wrap(v: Float) -> Self {
        Ext(v.with_precision(BITS).value())
    }

    pub fn inner(&self) -> &FBig<HalfEven, 2> {
        &self.0
    }

    pub fn precision_bits() -> usize {
        BITS
    }
}

fn ibig(v: &num_bigint::BigInt) -> IBig {
    IBig::from_str(&v.to_string()).expect("decimal integer always parses")
}

impl<const BITS: usize> fmt::Debug for Ext<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ext<{BITS}>({:e})", self.to_f64())
    }
}

impl<const BITS: usize> fmt::Display for Ext<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0.to_decimal().value(), f)
    }
}

impl<const BITS: usize> PartialOrd for Ext<BITS> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.0.cmp(&other.0))
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident) => {
        impl<const BITS: usize> $tr for Ext<BITS> {
            type Output = Self;
            fn $f(self, rhs: Self) -> Self {
                Ext::wrap($tr::$f(self.0, rhs.0))
            }
        }
        impl<'a, const BITS: usize> $tr<&'a Ext<BITS>> for &'a Ext<BITS> {
            type Output = Ext<BITS>;
            fn $f(self, rhs: &'a Ext<BITS>) -> Ext<BITS> {
                Ext::wrap($tr::$f(&self.0, &rhs.0))
            }
        }
    };
}
binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl<const BITS: usize> Neg for Ext<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        Ext(-self.0)
    }
}

impl<const BITS: usize> Zero for Ext<BITS> {
    fn zero() -> Self {
        Ext::wrap(Float::ZERO)
    }
    fn is_zero(&self) -> bool {
        self.0 == Float::ZERO
    }
}

impl<const BITS: usize> One for Ext<BITS> {
    fn one() -> Self {
        Ext::wrap(Float::ONE)
    }
}

impl<const BITS: usize> Scalar for Ext<BITS> {
    fn from_ratio(q: &BigRational) -> Self {
        let n = Float::from(ibig(q.numer())).with_precision(BITS).value();
        let d = Float::from(ibig(q.denom())).with_precision(BITS).value();
        Ext::wrap(n / d)
    }
    fn from_f64(v: f64) -> Self {
        Ext::wrap(Float::try_from(v).expect("finite f64"))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
}

impl<const BITS: usize> Real for Ext<BITS> {
    fn sqrt(&self) -> Self {
        Ext::wrap(self.0.sqrt())
    }
    fn abs(&self) -> Self {
        Ext(self.0.clone().abs())
    }
    fn epsilon() -> f64 {
        2f64.powi(1 - BITS as i32)
    }
}
