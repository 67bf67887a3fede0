//! Deterministic witnesses: the Supercyclicity Criterion on `B/λ` and the
//! identity-block obstruction.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::subspace_orbit_min_distance;
use crate::error::{Error, Result};
use crate::grassmann::{pi_n, Subspace};
use crate::operators::OperatorSpec;
use crate::space::{sample_vector_with, seeded_rng, Field, Scalar, Vector};

/// Distances of the obstruction certificate must equal `π/2` to this accuracy.
pub const OBSTRUCTION_TOLERANCE: f64 = 1e-12;

/// Relative residual of `T^k S_k y − y` accepted as the identity.
pub const RIGHT_INVERSE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScStep {
    pub k: usize,
    /// `max_s ‖T^k x_s‖ · ‖S_k y_s‖`.
    pub product: f64,
    /// `max_s ‖T^k S_k y_s − y_s‖ / ‖y_s‖`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScWitness {
    pub lambda: [f64; 2],
    pub support: Range<usize>,
    pub samples: usize,
    pub horizon: usize,
    pub truncation: usize,
    pub steps: Vec<ScStep>,
    pub max_residual: f64,
    pub final_product: f64,
    /// Products are nonincreasing from `k = support.end` on.
    pub tail_monotone: bool,
    pub pass: bool,
}

/// `S_k y = λ^k F^k y`, the right inverse of `(B/λ)^k` on finitely supported vectors.
fn s_k(lambda: Scalar, k: usize, y: &Vector, dim: usize) -> Result<Vector> {
    let c = lambda.powi(k as i32);
    Vector::from_pairs(dim, y.coords().iter().map(|(&i, &v)| (i + k, c * v)))
}

fn t_pow(op: &OperatorSpec, k: usize, x: &Vector) -> Result<Vector> {
    let mut cur = x.clone();
    for _ in 0..k {
        cur = op.apply(&cur)?.image;
    }
    Ok(cur)
}

/// Evaluates the criterion along `k = 1..=K` for `T = B/λ`, `S_k = λ^k F^k`.
pub fn sc_criterion_witness_for(lambda: Scalar, xs: &[Vector], ys: &[Vector], horizon: usize) -> Result<ScWitness> {
    let modulus = lambda.norm();
    if !(modulus > 0.0 && modulus < 1.0) {
        return Err(Error::CriterionHypotheses(format!("|λ| = {modulus} is not in (0, 1)")));
    }
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter("x and y samples must pair up".into()));
    }
    let support_end = xs.iter().chain(ys).map(Vector::support_end).max().unwrap_or(0);
    let dim = support_end + horizon + 1;
    let op = OperatorSpec::scaled(Scalar::new(1.0, 0.0) / lambda, OperatorSpec::backward_shift(dim));
    let xs: Vec<Vector> = xs.iter().map(|x| x.with_dim(dim)).collect();
    let ys: Vec<Vector> = ys.iter().map(|y| y.with_dim(dim)).collect();
    let mut steps = Vec::with_capacity(horizon);
    let mut tx = xs.clone();
    for k in 1..=horizon {
        let mut product = 0.0f64;
        let mut residual = 0.0f64;
        for (s, y) in ys.iter().enumerate() {
            tx[s] = op.apply(&tx[s])?.image;
            let sy = s_k(lambda, k, y, dim)?;
            product = product.max(tx[s].l2_norm() * sy.l2_norm());
            let back = t_pow(&op, k, &sy)?;
            residual = residual.max(back.distance(y)? / y.l2_norm());
        }
        steps.push(ScStep { k, product, residual });
    }
    let max_residual = steps.iter().map(|s| s.residual).fold(0.0, f64::max);
    let final_product = steps.last().map_or(0.0, |s| s.product);
    let tail: Vec<f64> = steps.iter().filter(|s| s.k >= support_end).map(|s| s.product).collect();
    let tail_monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    Ok(ScWitness {
        lambda: [lambda.re, lambda.im],
        support: 0..support_end,
        samples: xs.len(),
        horizon,
        truncation: dim,
        steps,
        max_residual,
        final_product,
        tail_monotone,
        pass: max_residual <= RIGHT_INVERSE_TOLERANCE && tail_monotone,
    })
}

/// As [`sc_criterion_witness_for`] with `samples` Gaussian pairs on `dense_support`.
pub fn sc_criterion_witness(
    lambda: Scalar,
    dense_support: Range<usize>,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<ScWitness> {
    let mut rng = seeded_rng(seed, 0x7363);
    let dim = dense_support.end;
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for _ in 0..samples {
        xs.push(sample_vector_with(Field::Real, dim, dense_support.clone(), &mut rng)?);
        ys.push(sample_vector_with(Field::Real, dim, dense_support.clone(), &mut rng)?);
    }
    let mut w = sc_criterion_witness_for(lambda, &xs, &ys, horizon)?;
    w.support = dense_support;
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionCertificate {
    pub n: usize,
    pub k_sub: usize,
    pub horizon: usize,
    pub distances: Vec<f64>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// For `T = Id_n ⊕ S`, a `k_sub`-dimensional `L` whose `𝐊^n` part spans
/// `F₀ = span(e_0, …, e_{k_sub−1})` stays at gap distance `π/2` from a target
/// containing `e_{n−1} ⊥ F₀ ⊕ X`.
pub fn identity_block_obstruction_witness(
    n: usize,
    k_sub: usize,
    s: &OperatorSpec,
    horizon: usize,
) -> Result<ObstructionCertificate> {
    if k_sub == 0 || k_sub >= n {
        return Err(Error::InvalidParameter(format!("k_sub = {k_sub} must lie in 1..{n}")));
    }
    let ds = s.dim();
    if ds < k_sub {
        return Err(Error::InvalidParameter(format!("S acts on {ds} < {k_sub} coordinates")));
    }
    let dim = n + ds;
    let op = OperatorSpec::direct_sum(vec![OperatorSpec::identity(n), s.clone()]);
    let tuple = (0..k_sub)
        .map(|i| {
            Vector::from_pairs(dim, [(i, Scalar::new(1.0, 0.0)), (n + ds - 1 - i, Scalar::new(1.0, 0.0))])
        })
        .collect::<Result<Vec<_>>>()?;
    let l = pi_n(&tuple)?;
    let mut idx = vec![n - 1];
    idx.extend(0..k_sub - 1);
    let target = Subspace::coordinate(dim, &idx)?;
    let trace = subspace_orbit_min_distance(&op, &l, &target, horizon)?;
    let distances: Vec<f64> = trace.records.iter().map(|&(_, d)| d).collect();
    let max_deviation = distances.iter().map(|d| (d - FRAC_PI_2).abs()).fold(0.0, f64::max);
    let pass = distances.len() == horizon + 1 && max_deviation <= OBSTRUCTION_TOLERANCE;
    Ok(ObstructionCertificate { n, k_sub, horizon, distances, max_deviation, pass })
}
