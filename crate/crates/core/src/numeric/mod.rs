//! Arithmetic backends and dense linear algebra.

pub mod complex;
pub mod ext;
pub mod linalg;
pub mod scalar;

pub use complex::ComplexRational;
pub use ext::{Ext, Ext128, Ext256, Ext512};
pub use scalar::{format_rational, parse_rational, ratio_to_f64, rational_from_f64, Real, Scalar};
