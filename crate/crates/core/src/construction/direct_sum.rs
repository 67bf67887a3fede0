//! ℓ² sums of the perturbed shifts over `p = 2..=p_max`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hp::{self, RM};
use super::model::{add_to, Construction, HpVector};
use super::params::{AdmissibleSource, ConstructionParams, IndexScheme};
use super::polynomial::Polynomial;
use super::sequence::{shared_enumeration, AdmissibleSequence};
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::space::{DirectSumVector, Scalar, Vector};

/// One block per `p`, all under the `pow5` scheme.
pub fn block_constructions(p_max: u32, source: &AdmissibleSource) -> Result<Vec<Construction>> {
    if p_max < 2 {
        return Err(Error::InvalidParameter(format!("p_max = {p_max} but p_max >= 2 is required")));
    }
    (2..=p_max)
        .map(|p| {
            let params = ConstructionParams::new(p, IndexScheme::Pow5, source.clone());
            params.validate()?;
            let seq = match source {
                AdmissibleSource::Triangular => AdmissibleSequence::from_enumeration(p, shared_enumeration()),
                _ => AdmissibleSequence::new(&params)?,
            };
            Ok(Construction::with_sequence(params, seq))
        })
        .collect()
}

/// The truncated sum `⊕ T_p` and the vector whose block `p` is `e_0 / p`.
pub fn build_direct_sum(
    p_max: u32,
    n_per_block: usize,
    source: &AdmissibleSource,
) -> Result<(OperatorSpec, DirectSumVector)> {
    let blocks = block_constructions(p_max, source)?;
    let ops = blocks.iter().map(|c| c.build_operator(n_per_block)).collect::<Result<Vec<_>>>()?;
    let vector = DirectSumVector::new(
        (2..=p_max)
            .map(|p| Vector::from_pairs(n_per_block, [(0, Scalar::new(1.0 / p as f64, 0.0))]))
            .collect::<Result<_>>()?,
    );
    Ok((OperatorSpec::direct_sum(ops), vector))
}

/// `4 sup ‖F_p‖ + 2`, with `F_p` the unweighted forward shift and unit
/// unconditional constants.
pub fn direct_sum_norm_bound(n_per_block: usize) -> f64 {
    let f = OperatorSpec::forward_shift(n_per_block).operator_norm_estimate(200);
    4.0 * f + 2.0
}

/// One repetition block of the scripted sequence and the resulting distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub n: u64,
    pub lambda: u64,
    pub repeats: u64,
    pub b_n: u64,
    /// `‖λ⁻¹ T^{b_n} x − P(T) x‖₂` for `x = ⊕ e_0 / p`.
    pub error: f64,
    /// The same distance when only `e_{b_n}` survives in each block.
    pub predicted: f64,
}

/// `Q_n = (λP, …, λP)` with `λ = m = n`, zero elsewhere, for the given `n`.
pub fn scripted_repetitions(poly: &Polynomial, indices: &[u64]) -> Vec<Vec<Polynomial>> {
    let top = indices.iter().copied().max().unwrap_or(0) as usize;
    let mut qs = vec![Vec::new(); top + 1];
    for &n in indices {
        let lambda = num_rational::BigRational::from_integer(n.into());
        qs[n as usize] = vec![poly.scale(&lambda); n as usize];
    }
    qs
}

/// Compares `λ⁻¹ T^{b_n}(⊕ e_0/p)` with `P(T)(⊕ e_0/p)` at each scripted index.
///
/// `T^{b_n}` is obtained by iterating the truncated operator, not from the
/// recursion. Needs `λ_n = m_n >= p_max - 1` so every block carries `λP`.
pub fn repetition_consistency(p_max: u32, poly: &Polynomial, indices: &[u64]) -> Result<Vec<RepetitionRecord>> {
    let source = AdmissibleSource::ScriptedQ(scripted_repetitions(poly, indices));
    let blocks = block_constructions(p_max, &source)?;
    let mut out = Vec::new();
    for &n in indices {
        let b = blocks[0].b(n);
        let mut sq = 0.0f64;
        let mut predicted = 0.0f64;
        for (k, block) in blocks.iter().enumerate() {
            let p = k as u64 + 2;
            let prec = block.precision();
            let (iterate, ip) = block.iterate_from_e0(b)?;
            let scale = hp::one(ip).div(&hp::from_u64(n * p, ip), ip, RM);
            let target = block.poly_apply(poly)?;
            let mut diff = HpVector::new();
            for (&i, v) in &iterate {
                add_to(&mut diff, i, &v.mul(&scale, prec, RM), prec);
            }
            let inv_p = hp::one(prec).div(&hp::from_u64(p, prec), prec, RM);
            for (&i, v) in &target {
                add_to(&mut diff, i, &v.mul(&inv_p, prec, RM).neg(), prec);
            }
            let e = hp::to_f64(&hp::l2(diff.values(), prec));
            sq += e * e;
            predicted += 1.0 / (p * p) as f64;
        }
        out.push(RepetitionRecord {
            n,
            lambda: n,
            repeats: n,
            b_n: b,
            error: sq.sqrt(),
            predicted: predicted.sqrt() / n as f64,
        });
    }
    Ok(out)
}

/// Shared handle so callers can build blocks without re-walking the enumeration.
pub fn shared_triangular() -> Arc<super::enumeration::SEnumeration> {
    shared_enumeration()
}

#[cfg(test)]
mod tests {
    use super::super::polynomial::rational;
    use super::*;

    #[test]
    fn single_block_vector() {
        let (op, x) = build_direct_sum(2, 8, &AdmissibleSource::Triangular).unwrap();
        assert_eq!(op.block_dims(), vec![8]);
        assert_eq!(x.blocks().len(), 1);
        assert_eq!(x.blocks()[0].get(0), Scalar::new(0.5, 0.0));
    }

    #[test]
    fn sum_acts_blockwise() {
        let (op, x) = build_direct_sum(4, 30, &AdmissibleSource::Triangular).unwrap();
        let whole = op.apply_direct_sum(&x).unwrap().image;
        let OperatorSpec::DirectSum(blocks) = &op else { panic!() };
        for (b, (blk, xb)) in blocks.iter().zip(x.blocks()).enumerate() {
            let alone = blk.apply(xb).unwrap().image;
            assert!(alone.distance(&whole.blocks()[b]).unwrap() < 1e-15);
        }
    }

    #[test]
    fn norm_within_bound() {
        let (op, _) = build_direct_sum(4, 40, &AdmissibleSource::Triangular).unwrap();
        assert!(op.operator_norm_estimate(200) <= direct_sum_norm_bound(40));
    }

    #[test]
    fn repetition_error_shrinks() {
        let p = Polynomial::from_coeffs([rational(1, 1), rational(1, 2)]);
        let recs = repetition_consistency(4, &p, &[3, 4]).unwrap();
        for r in &recs {
            assert!((r.error - r.predicted).abs() < 1e-9, "{r:?}");
        }
        assert!(recs[1].error < recs[0].error);
    }
}
