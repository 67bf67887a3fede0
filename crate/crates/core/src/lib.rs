//! Truncated models of the operators, Grassmannian orbits and exact
//! functionals used to study strong `n`-supercyclicity.
//!
//! Numerical layers work in `f64` on ℓ² truncations. Polynomial identities and
//! the `Φ_δ` forms are exact rationals; weight products are high-precision floats.

pub mod construction;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grassmann;
pub mod operators;
pub mod space;

pub use construction::{AdmissibleSource, ConstructionParams, IndexScheme, Polynomial};
pub use error::{Error, Result};
pub use grassmann::Subspace;
pub use operators::{OperatorSpec, SpectrumDescription};
pub use space::{DirectSumVector, Field, Scalar, Vector};
