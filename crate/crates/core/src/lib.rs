pub mod ansatz;
pub mod bound;
pub mod dense;
pub mod descriptor;
pub mod ed;
pub mod error;
pub mod extrapolation;
pub mod gaussian;
pub mod model;
pub mod numeric;
pub mod pauli;
pub mod poly;
pub mod regen;
pub mod tables;

pub use descriptor::Quantity;
pub use error::{Error, Result};
pub use model::{CouplingSet, EpsilonTable, FieldStrength, Moments, Normalization};
