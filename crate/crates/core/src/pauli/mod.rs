//! Exact Pauli-string algebra and normalised traces.

mod build;
mod expr;
mod string;

pub use build::{build_operator, symbolic_scalar_product, SymbolicSystem};
pub use expr::{PauliExpression, DEFAULT_TERM_CAP};
pub use string::{Letter, PauliString, MAX_SITES};
