//! Orbit seeds assembled backwards from a list of targets, and the graph
//! subspace `span{(e_i, y_i)}` on `𝐂^n ⊕ X` for `T = diag(λ) ⊕ B`.
//!
//! With `k_j = j · spacing`, the vector `x = Σ_j c^{-k_j} F^{k_j} z_j` satisfies
//! `(cB)^{k_j} x = z_j + Σ_{j'>j} c^{-(k_{j'}-k_j)} F^{k_{j'}-k_j} z_{j'}`, so the
//! orbit passes near every `z_j` once later targets are small relative to it.
//! Targets that do not fit in the truncation are left out.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{sample_target, score_against, DensityReport};
use crate::error::{Error, Result};
use crate::grassmann::{grassmann_distance, pi_n, Subspace};
use crate::operators::OperatorSpec;
use crate::space::{Field, Scalar, Vector};

/// Determinant modulus below which a target has no graph form.
const GRAPH_DET_FLOOR: f64 = 1e-10;

/// `Σ_j c^{-k_j} F^{k_j} z_j` in dimension `dim`; returns the seed and how many targets fit.
pub fn hypercyclic_seed(c: Scalar, dim: usize, targets: &[Vector], spacing: usize) -> Result<(Vector, usize)> {
    if spacing == 0 {
        return Err(Error::InvalidParameter("spacing must be positive".into()));
    }
    let mut x = Vector::zeros(dim);
    let mut used = 0;
    for (j, z) in targets.iter().enumerate() {
        let k = j * spacing;
        if k + z.support_end() > dim {
            break;
        }
        let w = c.powi(-(k as i32));
        let shifted = Vector::from_pairs(dim, z.coords().iter().map(|(&i, &v)| (i + k, w * v)))?;
        x = x.add(&shifted)?;
        used += 1;
    }
    Ok((x, used))
}

/// `T = diag(λ_1, …, λ_n) ⊕ B` on `𝐂^n ⊕ 𝐂^{dim_x}`.
pub fn diagonal_shift_operator(lambdas: &[Scalar], dim_x: usize) -> OperatorSpec {
    OperatorSpec::direct_sum(vec![OperatorSpec::diagonal(lambdas.to_vec()), OperatorSpec::backward_shift(dim_x)])
}

/// The `z_i` with `M = span{(e_i, z_i)}`, or an error when the `𝐂^n` part of `M` is degenerate.
pub fn graph_vectors(target: &Subspace, n: usize) -> Result<Vec<Vector>> {
    if target.n() != n || target.dim() <= n {
        return Err(Error::DimensionMismatch { expected: n, found: target.n() });
    }
    let w = target.frame();
    let c = w.rows(0, n).into_owned();
    let det = c.determinant().norm();
    if det < GRAPH_DET_FLOOR {
        return Err(Error::SingularMatrix(det));
    }
    let inv = c.try_inverse().ok_or(Error::SingularMatrix(det))?;
    let z: DMatrix<Scalar> = w.rows(n, w.nrows() - n) * inv;
    Ok(z.column_iter().map(|col| Vector::from_dense(col.as_slice())).collect())
}

/// `span{(e_i, y_i)}` with `y_i = Σ_j λ_i^{k_j} F^{k_j} z_i^{(j)}`; returns the subspace and how many targets fit.
pub fn graph_seed_subspace(
    lambdas: &[Scalar],
    dim_x: usize,
    graphs: &[Vec<Vector>],
    spacing: usize,
) -> Result<(Subspace, usize)> {
    let n = lambdas.len();
    let mut used = usize::MAX;
    let mut tuple = Vec::with_capacity(n);
    for (i, &lambda) in lambdas.iter().enumerate() {
        let zs: Vec<Vector> = graphs.iter().map(|g| g[i].clone()).collect();
        // (B/λ)^k undoes λ^k F^k, so the seed uses c = 1/λ.
        let (y, u) = hypercyclic_seed(Scalar::new(1.0, 0.0) / lambda, dim_x, &zs, spacing)?;
        used = used.min(u);
        let mut pairs = vec![(i, Scalar::new(1.0, 0.0))];
        pairs.extend(y.coords().iter().map(|(&j, &v)| (n + j, v)));
        tuple.push(Vector::from_pairs(n + dim_x, pairs)?);
    }
    Ok((pi_n(&tuple)?, if used == usize::MAX { 0 } else { used }))
}

/// The experiment behind the `𝐂^n ⊕ X` equivalence at truncation scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDensityConfig {
    pub lambdas: Vec<f64>,
    pub dim_x: usize,
    pub targets: usize,
    /// Target support in the coordinates of `𝐂^n ⊕ X`.
    pub support: Range<usize>,
    pub horizon: usize,
    pub threshold: f64,
    pub seed: u64,
    pub spacing: usize,
}

impl Default for GraphDensityConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.5, 0.7],
            dim_x: 64,
            targets: 20,
            support: 0..8,
            horizon: 2000,
            threshold: 0.15,
            seed: 20_240_611,
            spacing: 6,
        }
    }
}

/// The tuple `((B/λ_i)^k y_i)` read off the orbit at a hit, against the target graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredRecord {
    pub target_id: usize,
    pub k: usize,
    /// `max_i ‖(B/λ_i)^k y_i − z_i‖ / ‖z_i‖`.
    pub max_relative_error: f64,
    /// Gap distance between `span{(e_i, (B/λ_i)^k y_i)}` and the target.
    pub recovered_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDensityReport {
    pub config: GraphDensityConfig,
    /// Targets whose graph data fit in the truncation and entered the seed tuple.
    pub seeded_targets: usize,
    pub density: DensityReport,
    pub recovered: Vec<RecoveredRecord>,
    /// Every hit's recovered tuple lies within the threshold of its target.
    pub recovered_pass: bool,
}

/// Builds the graph subspace from the sampled targets, scores its orbit and
/// reads the recovered tuples off the hits.
pub fn graph_density_experiment(cfg: &GraphDensityConfig) -> Result<GraphDensityReport> {
    let n = cfg.lambdas.len();
    if n == 0 || cfg.lambdas.iter().any(|l| !(l.abs() > 0.0 && l.abs() < 1.0)) {
        return Err(Error::InvalidParameter("every λ_i must satisfy 0 < |λ_i| < 1".into()));
    }
    let lambdas: Vec<Scalar> = cfg.lambdas.iter().map(|&l| Scalar::new(l, 0.0)).collect();
    let dim = n + cfg.dim_x;
    let targets = (0..cfg.targets)
        .map(|id| sample_target(dim, n, cfg.support.clone(), Field::Real, cfg.seed, id))
        .collect::<Result<Vec<_>>>()?;
    // Degenerate graph data would break the spacing; such targets get a zero slot.
    let graphs: Vec<Vec<Vector>> = targets
        .iter()
        .map(|t| graph_vectors(t, n).unwrap_or_else(|_| vec![Vector::zeros(cfg.dim_x); n]))
        .collect();
    let (l, seeded) = graph_seed_subspace(&lambdas, cfg.dim_x, &graphs, cfg.spacing)?;
    let op = diagonal_shift_operator(&lambdas, cfg.dim_x);
    let density = score_against(&op, &l, &targets, cfg.threshold, cfg.horizon)?;

    let ys: Vec<Vector> = (0..n)
        .map(|i| {
            let zs: Vec<Vector> = graphs.iter().map(|g| g[i].clone()).collect();
            hypercyclic_seed(Scalar::new(1.0, 0.0) / lambdas[i], cfg.dim_x, &zs, cfg.spacing).map(|(y, _)| y)
        })
        .collect::<Result<_>>()?;
    let mut recovered = Vec::new();
    for t in &density.traces {
        if t.trace.min_distance >= cfg.threshold {
            continue;
        }
        let k = t.trace.argmin_k;
        let mut tuple = Vec::with_capacity(n);
        let mut worst = 0.0f64;
        for i in 0..n {
            let op_i = OperatorSpec::scaled(Scalar::new(1.0, 0.0) / lambdas[i], OperatorSpec::backward_shift(cfg.dim_x));
            let mut y = ys[i].clone();
            for _ in 0..k {
                y = op_i.apply(&y)?.image;
            }
            let z = &graphs[t.target_id][i];
            let zn = z.l2_norm();
            worst = worst.max(if zn > 0.0 { y.distance(z)? / zn } else { f64::INFINITY });
            let mut pairs = vec![(i, Scalar::new(1.0, 0.0))];
            pairs.extend(y.coords().iter().map(|(&j, &v)| (n + j, v)));
            tuple.push(Vector::from_pairs(dim, pairs)?);
        }
        let recovered_distance = grassmann_distance(&pi_n(&tuple)?, &targets[t.target_id])?;
        recovered.push(RecoveredRecord { target_id: t.target_id, k, max_relative_error: worst, recovered_distance });
    }
    let recovered_pass = recovered.iter().all(|r| r.recovered_distance < cfg.threshold);
    Ok(GraphDensityReport { config: cfg.clone(), seeded_targets: seeded, density, recovered, recovered_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{strong_n_supercyclicity_score, vector_orbit_min_distance, ScoreConfig};
    use crate::space::sample_vector;

    #[test]
    fn seed_reaches_each_fitted_target() {
        let targets: Vec<Vector> = (0..5).map(|s| sample_vector(64, 0..4, s).unwrap()).collect();
        let (x, used) = hypercyclic_seed(Scalar::new(2.0, 0.0), 64, &targets, 8).unwrap();
        assert_eq!(used, 5);
        let op = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(64));
        let t = vector_orbit_min_distance(&op, &x, &targets[2], 5000).unwrap();
        assert!(t.min_distance < 0.1);
        assert_eq!(t.argmin_k, 16);
    }

    #[test]
    fn hypercyclic_line_scores_high() {
        let dim = 256;
        let cfg = ScoreConfig { targets: 20, support: 0..4, horizon: 200, threshold: 0.15, seed: 9, field: Field::Real };
        let lines: Vec<Vector> = (0..cfg.targets)
            .map(|id| super::super::sample_target(dim, 1, cfg.support.clone(), Field::Real, cfg.seed, id))
            .map(|s| s.map(|s| s.columns()[0].clone()))
            .collect::<Result<_>>()
            .unwrap();
        let (x, used) = hypercyclic_seed(Scalar::new(2.0, 0.0), dim, &lines, 6).unwrap();
        assert_eq!(used, 20);
        let op = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(dim));
        let l = pi_n(&[x]).unwrap();
        let r = strong_n_supercyclicity_score(&op, &l, 1, &cfg).unwrap();
        assert!(r.hit_fraction >= 0.9, "{}", r.hit_fraction);
    }

    #[test]
    fn graph_vectors_recover_the_plane() {
        let t = super::super::sample_target(10, 2, 0..6, Field::Real, 4, 0).unwrap();
        let z = graph_vectors(&t, 2).unwrap();
        let tuple: Vec<Vector> = (0..2)
            .map(|i| {
                let mut pairs = vec![(i, Scalar::new(1.0, 0.0))];
                pairs.extend(z[i].coords().iter().map(|(&j, &v)| (2 + j, v)));
                Vector::from_pairs(10, pairs).unwrap()
            })
            .collect();
        assert!(grassmann_distance(&pi_n(&tuple).unwrap(), &t).unwrap() < 1e-12);
    }

    #[test]
    fn graph_subspace_hits_seeded_targets() {
        // 0.7^14 < 0.01 keeps later targets out of the way.
        let cfg = GraphDensityConfig { targets: 4, dim_x: 64, horizon: 100, spacing: 14, ..GraphDensityConfig::default() };
        let r = graph_density_experiment(&cfg).unwrap();
        assert_eq!(r.seeded_targets, 4);
        assert!(r.density.hit_fraction >= 0.75, "{:?}", r.density.traces.iter().map(|t| t.trace.min_distance).collect::<Vec<_>>());
        assert!(r.recovered_pass);
    }
}
