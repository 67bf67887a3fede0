//! Fixtures shared by the benchmarks.

use grassdyn::construction::Construction;
use grassdyn::dynamics::sample_target;
use grassdyn::grassmann::Subspace;
use grassdyn::{AdmissibleSource, ConstructionParams, Field, IndexScheme, OperatorSpec};

/// A seeded real `n`-plane in `dim` coordinates.
pub fn plane(dim: usize, n: usize, seed: u64) -> Subspace {
    sample_target(dim, n, 0..dim, Field::Real, seed, 0).expect("valid plane")
}

/// `2B` on `dim` coordinates.
pub fn two_b(dim: usize) -> OperatorSpec {
    OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(dim))
}

pub fn construction(p: u32, scheme: IndexScheme) -> Construction {
    Construction::new(ConstructionParams::new(p, scheme, AdmissibleSource::Triangular)).expect("valid instance")
}
