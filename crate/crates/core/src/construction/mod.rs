//! Perturbed forward shifts whose orbit of `e_0` runs through a prescribed
//! sequence of polynomials, and the tuple enumeration that feeds them.

mod direct_sum;
mod enumeration;
pub mod hp;
mod model;
mod params;
mod polynomial;
mod sequence;

pub use direct_sum::{
    block_constructions, build_direct_sum, direct_sum_norm_bound, repetition_consistency, scripted_repetitions,
    shared_triangular, RepetitionRecord,
};
pub use enumeration::{q_coordinates, q_index, rational_grid, ClassicSequence, Location, SEnumeration, TupleEnumeration};
pub use model::{
    build_operator, check_f_bound, epsilon_f, orbit_vector_coords, verify_construction, ClosureRecord,
    Construction, ConstructionCertificate, FBoundRecord, HpOperator, HpVector, DEFAULT_CLOSURE_CAP,
    DEFAULT_ORBIT_CAP,
};
pub use params::{
    controlled_by, derive_control_sequence, index_b, max_index, weight, AdmissibleSource, ConstructionParams,
    ControlSpec, IndexScheme, CONTROL_SATURATION, DEFAULT_C,
};
pub use polynomial::{model_product, rational, Polynomial};
pub use sequence::{admissible_for_p, verify_claim, AdmissibleSequence};

/// Memoised coordinates of `T^i e_0`.
pub type ChangeOfBasis = Construction;

/// `S^i_r`, padded with zeros to `i + 1` components.
pub fn enumerate_s(i: u64, r: u64) -> error::Result<Vec<Polynomial>> {
    Ok(sequence::shared_enumeration().s(i, r)?.as_ref().clone())
}

/// `Q_n` under the default derived caps.
pub fn q_sequence(n: u64) -> error::Result<Vec<Polynomial>> {
    Ok(sequence::shared_enumeration().q(n)?.as_ref().clone())
}

use crate::error;
