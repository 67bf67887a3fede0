//! Probe for `(⊕T)^k(π_n^{-1}(U)) ∩ V ≠ ∅`.
//!
//! Subspaces are sampled in the ball `U` and every basis of one of them is an
//! element of `π_n^{-1}(U)`. For each sampled frame `F` and iterate `k` the
//! probe tries two mixings `A`: a random Gaussian one and the least-squares
//! fit of `T^k F A` to the centre of `V`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{apply_to_frame, grassmann_distance, span_of_columns, Subspace};
use crate::operators::OperatorSpec;
use crate::space::{gaussian_scalar, seeded_rng, Field, Scalar, Vector};

/// Subspaces sampled in the `U` ball per probe; the first is its centre.
pub const TRANSITIVITY_SAMPLES: usize = 8;

const SAMPLE_RETRIES: usize = 64;

/// Smallest singular value, relative to the largest, of an accepted mixing.
const MIXING_CONDITION: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitivityHit {
    pub k: usize,
    pub sample: usize,
    pub least_squares: bool,
    /// Gap distance of the sampled span to the centre of `U`.
    pub u_distance: f64,
    /// `max_i ‖T^k x_i − v_i‖₂`, recomputed by direct iteration.
    pub v_distance: f64,
    pub tuple: Vec<Vector>,
}

fn sample_in_ball(
    center: &Subspace,
    radius: f64,
    field: Field,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(Subspace, f64)> {
    let f = center.frame();
    for _ in 0..SAMPLE_RETRIES {
        let noise = DMatrix::from_fn(f.nrows(), f.ncols(), |_, _| gaussian_scalar(field, rng));
        let scale = 0.25 * radius / noise.norm().max(f64::MIN_POSITIVE);
        let candidate = f + noise * Scalar::new(scale, 0.0);
        if let Ok(s) = span_of_columns(&candidate) {
            let d = grassmann_distance(&s, center)?;
            if d < radius {
                return Ok((s, d));
            }
        }
    }
    Err(Error::RetriesExhausted(SAMPLE_RETRIES))
}

fn well_conditioned(a: &DMatrix<Scalar>) -> bool {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    max > 0.0 && max.is_finite() && min > MIXING_CONDITION * max
}

fn column_distance(m: &DMatrix<Scalar>, v: &DMatrix<Scalar>) -> f64 {
    (m - v).column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// First iterate `k <= K` at which some tuple spanning a subspace of the `U`
/// ball is mapped into the `V` ball, or `None`.
#[allow(clippy::too_many_arguments)]
pub fn transitivity_probe(
    op: &OperatorSpec,
    n: usize,
    u_center: &Subspace,
    u_radius: f64,
    v_center: &[Vector],
    v_radius: f64,
    horizon: usize,
    seed: u64,
) -> Result<Option<TransitivityHit>> {
    if !(u_radius > 0.0 && v_radius > 0.0) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if u_center.n() != n || v_center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v_center.len() });
    }
    let dim = op.dim();
    let mut v = DMatrix::zeros(dim, n);
    for (j, x) in v_center.iter().enumerate() {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.dim() });
        }
        for (&i, &c) in x.coords() {
            v[(i, j)] = c;
        }
    }
    let field = if u_center.frame().iter().chain(v.iter()).all(|z| z.im == 0.0) { Field::Real } else { Field::Complex };
    let mut rng = seeded_rng(seed, 0x7472);
    let mut samples = vec![(u_center.clone(), 0.0)];
    for _ in 1..TRANSITIVITY_SAMPLES {
        samples.push(sample_in_ball(u_center, u_radius, field, &mut rng)?);
    }
    let mixings: Vec<DMatrix<Scalar>> = (0..TRANSITIVITY_SAMPLES)
        .map(|_| DMatrix::from_fn(n, n, |_, _| gaussian_scalar(field, &mut rng)))
        .collect();

    // G_s = T^k F_s D_s with D_s diagonal; columns are renormalised each step
    // and the scales accumulate in D_s, so x = F_s D_s A.
    let mut images: Vec<DMatrix<Scalar>> = samples.iter().map(|(s, _)| s.frame().clone()).collect();
    let mut scales: Vec<Vec<f64>> = vec![vec![1.0; n]; samples.len()];
    for k in 0..=horizon {
        for (s, g) in images.iter().enumerate() {
            let mut candidates = vec![(false, mixings[s].clone())];
            if let Ok(a) = g.clone().svd(true, true).solve(&v, 1e-14) {
                candidates.insert(0, (true, a));
            }
            for (least_squares, a) in candidates {
                if column_distance(&(g * &a), &v) >= v_radius {
                    continue;
                }
                let mut da = a.clone();
                for (i, mut row) in da.row_iter_mut().enumerate() {
                    row *= Scalar::new(scales[s][i], 0.0);
                }
                if !well_conditioned(&da) {
                    continue;
                }
                let x = samples[s].0.frame() * &da;
                let mut y = x.clone();
                for _ in 0..k {
                    y = apply_to_frame(op, &y)?;
                }
                let v_distance = column_distance(&y, &v);
                if v_distance < v_radius {
                    let tuple = x.column_iter().map(|c| Vector::from_dense(c.as_slice())).collect();
                    return Ok(Some(TransitivityHit {
                        k,
                        sample: s,
                        least_squares,
                        u_distance: samples[s].1,
                        v_distance,
                        tuple,
                    }));
                }
            }
        }
        if k < horizon {
            for (g, d) in images.iter_mut().zip(scales.iter_mut()) {
                *g = apply_to_frame(op, g)?;
                for (j, mut col) in g.column_iter_mut().enumerate() {
                    let norm = col.norm();
                    if norm > 0.0 && norm.is_finite() {
                        col /= Scalar::new(norm, 0.0);
                        d[j] /= norm;
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn found_at_zero_when_balls_share_data() {
        let op = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(6));
        let u = Subspace::coordinate(6, &[0]).unwrap();
        let v = [Vector::basis(6, 0).unwrap()];
        let hit = transitivity_probe(&op, 1, &u, 0.1, &v, 0.1, 10, 1).unwrap().unwrap();
        assert_eq!(hit.k, 0);
    }

    #[test]
    fn identity_never_transits() {
        let op = OperatorSpec::identity(4);
        let u = Subspace::coordinate(4, &[0]).unwrap();
        let v = [Vector::basis(4, 1).unwrap()];
        assert!(transitivity_probe(&op, 1, &u, 0.1, &v, 0.1, 50, 2).unwrap().is_none());
    }

    #[test]
    fn shift_transits_later() {
        let op = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(8));
        let u = Subspace::coordinate(8, &[5]).unwrap();
        let v = [Vector::basis(8, 1).unwrap()];
        let hit = transitivity_probe(&op, 1, &u, 0.1, &v, 0.1, 10, 3).unwrap().unwrap();
        assert_eq!(hit.k, 4);
        assert!(hit.v_distance < 1e-12);
    }
}
