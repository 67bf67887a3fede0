//! Orbit experiments on truncated operators.
//!
//! Every probe records the distance to a target at each iterate `k = 0..=K`
//! and keeps the first iterate attaining the minimum. Density is reported as
//! a hit fraction at a fixed threshold and horizon; it is evidence at
//! truncation scale, not a density statement.

mod seeds;
mod transitivity;
mod witness;

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{grassmann_distance, pi_n, push_forward, Subspace};
use crate::operators::OperatorSpec;
use crate::space::{sample_vector_with, seeded_rng, Field, Scalar, Vector};

pub use seeds::{
    graph_vectors, hypercyclic_seed, graph_density_experiment, diagonal_shift_operator, graph_seed_subspace,
    RecoveredRecord, GraphDensityConfig, GraphDensityReport,
};
pub use transitivity::{transitivity_probe, TransitivityHit, TRANSITIVITY_SAMPLES};
pub use witness::{
    identity_block_obstruction_witness, sc_criterion_witness, sc_criterion_witness_for, ObstructionCertificate, ScStep, ScWitness,
    OBSTRUCTION_TOLERANCE, RIGHT_INVERSE_TOLERANCE,
};

/// Relative truncation leakage tolerated by the raw vector probe.
pub const LEAKAGE_TOLERANCE: f64 = 1e-9;

/// Retries when a sampled target tuple is numerically dependent.
pub const TARGET_RETRIES: usize = 64;

/// Distances along one orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub records: Vec<(usize, f64)>,
    pub argmin_k: usize,
    pub min_distance: f64,
    /// Iterate at which the image lost dimension; the records stop just before it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_drop_at: Option<usize>,
}

impl OrbitTrace {
    /// The first iterate attaining the minimum wins ties.
    pub fn from_records(records: Vec<(usize, f64)>) -> Self {
        let mut argmin_k = 0;
        let mut min_distance = f64::INFINITY;
        for &(k, d) in &records {
            if d < min_distance {
                min_distance = d;
                argmin_k = k;
            }
        }
        Self { records, argmin_k, min_distance, dimension_drop_at: None }
    }

    /// The trace restricted to `k <= horizon`.
    pub fn truncated(&self, horizon: usize) -> Self {
        let mut t = Self::from_records(self.records.iter().copied().filter(|&(k, _)| k <= horizon).collect());
        t.dimension_drop_at = self.dimension_drop_at.filter(|&k| k <= horizon);
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetTrace {
    pub target_id: usize,
    pub trace: OrbitTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub targets: usize,
    pub hits: usize,
    pub hit_fraction: f64,
    pub threshold: f64,
    pub horizon: usize,
    pub traces: Vec<TargetTrace>,
}

impl DensityReport {
    pub fn from_traces(mut traces: Vec<TargetTrace>, threshold: f64, horizon: usize) -> Self {
        traces.sort_by_key(|t| t.target_id);
        let hits = traces.iter().filter(|t| t.trace.min_distance < threshold).count();
        let targets = traces.len();
        let hit_fraction = if targets == 0 { 0.0 } else { hits as f64 / targets as f64 };
        Self { targets, hits, hit_fraction, threshold, horizon, traces }
    }

    /// CSV with columns `target_id,k,distance`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "target_id,k,distance")?;
        for t in &self.traces {
            for (k, d) in &t.trace.records {
                writeln!(w, "{},{},{:e}", t.target_id, k, d)?;
            }
        }
        Ok(())
    }
}

fn check_horizon_dims(op: &OperatorSpec, dim: usize) -> Result<()> {
    if op.dim() != dim {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: dim });
    }
    Ok(())
}

/// `‖T^k x − target‖₂` for `k = 0..=K`, on raw iterates.
///
/// Aborts if truncation drops more than [`LEAKAGE_TOLERANCE`]` · ‖T^k x‖`.
pub fn vector_orbit_min_distance(op: &OperatorSpec, x: &Vector, target: &Vector, horizon: usize) -> Result<OrbitTrace> {
    check_horizon_dims(op, x.dim())?;
    check_horizon_dims(op, target.dim())?;
    let mut cur = x.clone();
    let mut records = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        records.push((k, cur.distance(target)?));
        if k == horizon {
            break;
        }
        let app = op.apply(&cur)?;
        let scale = app.image.l2_norm().max(cur.l2_norm());
        if app.lost_mass > LEAKAGE_TOLERANCE * scale {
            return Err(Error::Leakage { k: k + 1, lost: app.lost_mass });
        }
        cur = app.image;
    }
    Ok(OrbitTrace::from_records(records))
}

/// Gap distance between `span(T^k x)` and `span(target)`, renormalising every step.
pub fn projective_orbit_min_distance(
    op: &OperatorSpec,
    x: &Vector,
    target: &Vector,
    horizon: usize,
) -> Result<OrbitTrace> {
    check_horizon_dims(op, x.dim())?;
    check_horizon_dims(op, target.dim())?;
    let line = |v: &Vector, k: usize| pi_n(std::slice::from_ref(v)).map_err(|_| Error::OrbitHitsKernel(k));
    let t = line(target, 0)?;
    let mut cur = x.clone();
    let mut records = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let l = line(&cur, k)?;
        records.push((k, grassmann_distance(&l, &t)?));
        if k == horizon {
            break;
        }
        let next = op.apply(&cur)?.image;
        let norm = next.l2_norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::OrbitHitsKernel(k + 1));
        }
        cur = next.scale(Scalar::new(1.0 / norm, 0.0));
    }
    Ok(OrbitTrace::from_records(records))
}

/// `d(T^k(L), target)` for `k = 0..=K`.
///
/// A dimension drop ends the orbit: the trace keeps the iterates before it
/// and records where it happened. Other failures propagate.
pub fn subspace_orbit_min_distance(
    op: &OperatorSpec,
    l: &Subspace,
    target: &Subspace,
    horizon: usize,
) -> Result<OrbitTrace> {
    if l.n() != target.n() {
        return Err(Error::DimensionMismatch { expected: l.n(), found: target.n() });
    }
    check_horizon_dims(op, l.dim())?;
    let mut cur = l.clone();
    let mut records = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        records.push((k, grassmann_distance(&cur, target)?));
        if k == horizon {
            break;
        }
        cur = match push_forward(op, &cur) {
            Ok(next) => next,
            Err(Error::DimensionDrop) => {
                let mut t = OrbitTrace::from_records(records);
                t.dimension_drop_at = Some(k + 1);
                return Ok(t);
            }
            Err(e) => return Err(e),
        };
    }
    Ok(OrbitTrace::from_records(records))
}

/// A random `n`-plane spanned by Gaussian vectors supported on `support`.
///
/// Draws for target `id` come from their own RNG stream, so the target set
/// does not depend on evaluation order.
pub fn sample_target(dim: usize, n: usize, support: Range<usize>, field: Field, seed: u64, id: usize) -> Result<Subspace> {
    if support.len() < n {
        return Err(Error::InvalidParameter(format!("support {support:?} cannot hold {n} independent vectors")));
    }
    let mut rng = seeded_rng(seed, id as u64);
    for _ in 0..TARGET_RETRIES {
        let tuple = (0..n)
            .map(|_| sample_vector_with(field, dim, support.clone(), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        if let Ok(s) = pi_n(&tuple) {
            return Ok(s);
        }
    }
    Err(Error::RetriesExhausted(TARGET_RETRIES))
}

/// Settings of [`strong_n_supercyclicity_score`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub targets: usize,
    pub support: Range<usize>,
    pub horizon: usize,
    pub threshold: f64,
    pub seed: u64,
    #[serde(default)]
    pub field: Field,
}

/// Hit fraction of the orbit of `L` against sampled target `n`-planes.
pub fn strong_n_supercyclicity_score(op: &OperatorSpec, l: &Subspace, n: usize, cfg: &ScoreConfig) -> Result<DensityReport> {
    if cfg.threshold.is_nan() || cfg.threshold <= 0.0 {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    if l.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: l.n() });
    }
    let targets = (0..cfg.targets)
        .map(|id| sample_target(l.dim(), n, cfg.support.clone(), cfg.field, cfg.seed, id))
        .collect::<Result<Vec<_>>>()?;
    score_against(op, l, &targets, cfg.threshold, cfg.horizon)
}

/// Hit fraction of the orbit of `L` against given targets.
pub fn score_against(
    op: &OperatorSpec,
    l: &Subspace,
    targets: &[Subspace],
    threshold: f64,
    horizon: usize,
) -> Result<DensityReport> {
    let traces = targets
        .par_iter()
        .enumerate()
        .map(|(id, t)| Ok(TargetTrace { target_id: id, trace: subspace_orbit_min_distance(op, l, t, horizon)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityReport::from_traces(traces, threshold, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn e(dim: usize, i: usize) -> Vector {
        Vector::basis(dim, i).unwrap()
    }

    #[test]
    fn vector_probe_examples() {
        let op = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(8));
        let t = vector_orbit_min_distance(&op, &e(8, 7), &e(8, 3).scale(Scalar::new(16.0, 0.0)), 10).unwrap();
        assert_eq!((t.argmin_k, t.min_distance), (4, 0.0));
        assert_eq!(t.records.len(), 11);

        let id = OperatorSpec::identity(4);
        let t = vector_orbit_min_distance(&id, &e(4, 0), &e(4, 1), 100).unwrap();
        assert!(t.records.iter().all(|&(_, d)| d == SQRT_2));
        assert_eq!(t.argmin_k, 0);
    }

    #[test]
    fn vector_probe_detects_leakage() {
        let op = OperatorSpec::forward_shift(4);
        let err = vector_orbit_min_distance(&op, &e(4, 2), &e(4, 0), 5).unwrap_err();
        assert!(matches!(err, Error::Leakage { k: 2, .. }));
        assert!(vector_orbit_min_distance(&op, &e(3, 0), &e(4, 0), 1).is_err());
    }

    #[test]
    fn projective_probe_examples() {
        let b = OperatorSpec::backward_shift(4);
        let t = projective_orbit_min_distance(&b, &e(4, 3), &e(4, 0), 5);
        // B^4 e_3 = 0.
        assert!(matches!(t, Err(Error::OrbitHitsKernel(4))));
        let t = projective_orbit_min_distance(&b, &e(4, 3), &e(4, 0), 3).unwrap();
        assert_eq!((t.argmin_k, t.min_distance), (3, 0.0));

        let d = OperatorSpec::diagonal_real(&[2.0, 1.0]);
        let x = Vector::from_real(&[1.0, 1.0]);
        let t = projective_orbit_min_distance(&d, &x, &e(2, 0), 30).unwrap();
        for &(k, dist) in &t.records {
            assert!((dist - 0.5f64.powi(k as i32).atan()).abs() < 1e-14);
        }

        let id = OperatorSpec::identity(3);
        let t = projective_orbit_min_distance(&id, &e(3, 0), &e(3, 1), 7).unwrap();
        assert!(t.records.iter().all(|&(_, d)| (d - FRAC_PI_2).abs() < 1e-15));
    }

    #[test]
    fn subspace_probe_examples() {
        let op = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(8));
        let l = Subspace::coordinate(8, &[6, 7]).unwrap();
        let target = Subspace::coordinate(8, &[0, 1]).unwrap();
        let t = subspace_orbit_min_distance(&op, &l, &target, 10).unwrap();
        assert_eq!(t.argmin_k, 6);
        assert!(t.min_distance < 1e-15);
        // (2B)^7 kills e_6.
        assert_eq!(t.dimension_drop_at, Some(7));
        assert_eq!(t.records.len(), 7);
        assert_eq!(subspace_orbit_min_distance(&op, &l, &target, 6).unwrap().dimension_drop_at, None);
        let t = subspace_orbit_min_distance(&op, &l, &l, 0).unwrap();
        assert_eq!(t.argmin_k, 0);
        assert!(t.min_distance < 1e-15);
    }

    #[test]
    fn identity_scores_zero() {
        let id = OperatorSpec::identity(4);
        let l = Subspace::coordinate(4, &[3]).unwrap();
        let cfg = ScoreConfig { targets: 10, support: 0..4, horizon: 20, threshold: 0.15, seed: 3, field: Field::Real };
        let r = strong_n_supercyclicity_score(&id, &l, 1, &cfg).unwrap();
        assert_eq!(r.hits, 0);
        assert!(r.traces.iter().all(|t| t.trace.records.len() == 21));
    }

    #[test]
    fn trace_csv_header() {
        let r = DensityReport::from_traces(
            vec![TargetTrace { target_id: 0, trace: OrbitTrace::from_records(vec![(0, 0.5)]) }],
            0.1,
            0,
        );
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "target_id,k,distance\n0,0,5e-1\n");
    }
}
