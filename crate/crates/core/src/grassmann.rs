//! Points of the Grassmannian of a truncated space, stored as orthonormal frames.
//!
//! Distances are the largest principal angle (the gap metric).

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_traits::Zero;
use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::space::{gaussian_scalar, seeded_rng, Field, Scalar, Vector};

/// Relative singular-value threshold below which a tuple counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Orthonormality tolerance for frames accepted from outside.
pub const FRAME_TOLERANCE: f64 = 1e-10;

const MAX_PERTURB_RETRIES: usize = 64;

/// An `n`-dimensional subspace of `K^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    frame: DMatrix<Scalar>,
}

impl Subspace {
    /// Wraps a frame whose columns are already orthonormal.
    pub fn from_orthonormal(frame: DMatrix<Scalar>) -> Result<Self> {
        let (dim, n) = frame.shape();
        if n == 0 || n > dim {
            return Err(Error::InvalidParameter(format!("frame of shape {dim}x{n}")));
        }
        let gram = frame.adjoint() * &frame;
        let defect = (gram - DMatrix::<Scalar>::identity(n, n)).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if defect.is_nan() || defect > FRAME_TOLERANCE {
            return Err(Error::InvalidParameter(format!("frame is not orthonormal (defect {defect:e})")));
        }
        Ok(Self { frame })
    }

    /// The span of the given canonical basis vectors.
    pub fn coordinate(dim: usize, indices: &[usize]) -> Result<Self> {
        let tuple: Vec<Vector> = indices.iter().map(|&i| Vector::basis(dim, i)).collect::<Result<_>>()?;
        pi_n(&tuple)
    }

    pub fn n(&self) -> usize {
        self.frame.ncols()
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn frame(&self) -> &DMatrix<Scalar> {
        &self.frame
    }

    pub fn columns(&self) -> Vec<Vector> {
        self.frame.column_iter().map(|c| Vector::from_dense(c.as_slice())).collect()
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        let v = x.to_dvector();
        let p = &self.frame * (self.frame.adjoint() * v);
        Ok(Vector::from_dvector(&p))
    }

    fn is_real(&self) -> bool {
        self.frame.iter().all(|x| x.im == 0.0)
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Subspace", 3)?;
        st.serialize_field("n", &self.n())?;
        st.serialize_field("dim", &self.dim())?;
        if self.is_real() {
            let data: Vec<f64> = self.frame.iter().map(|x| x.re).collect();
            st.serialize_field("frame", &data)?;
        } else {
            let data: Vec<[f64; 2]> = self.frame.iter().map(|x| [x.re, x.im]).collect();
            st.serialize_field("frame", &data)?;
        }
        st.end()
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entry {
            Real(f64),
            Complex([f64; 2]),
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            n: usize,
            dim: usize,
            frame: Vec<Entry>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.frame.len() != raw.n * raw.dim {
            return Err(de::Error::custom(format!(
                "frame has {} entries, expected {}",
                raw.frame.len(),
                raw.n * raw.dim
            )));
        }
        let data: Vec<Scalar> = raw
            .frame
            .into_iter()
            .map(|e| match e {
                Entry::Real(x) => Scalar::new(x, 0.0),
                Entry::Complex([re, im]) => Scalar::new(re, im),
            })
            .collect();
        Subspace::from_orthonormal(DMatrix::from_vec(raw.dim, raw.n, data)).map_err(de::Error::custom)
    }
}

fn tuple_matrix(tuple: &[Vector]) -> Result<DMatrix<Scalar>> {
    let first = tuple.first().ok_or(Error::NotIndependent { rank: 0, n: 0 })?;
    let dim = first.dim();
    let mut m = DMatrix::zeros(dim, tuple.len());
    for (j, v) in tuple.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.dim() });
        }
        for (&i, &x) in v.coords() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

/// Numerical rank of the columns of `m` under [`RANK_TOLERANCE`].
pub fn numerical_rank(m: &DMatrix<Scalar>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s >= RANK_TOLERANCE * max).count()
}

/// Span of the columns of `m`, which must be independent.
pub fn span_of_columns(m: &DMatrix<Scalar>) -> Result<Subspace> {
    let n = m.ncols();
    if n == 0 {
        return Err(Error::NotIndependent { rank: 0, n: 0 });
    }
    // Columns scaled to unit length first: the rank test and the frame then
    // do not depend on how the tuple was scaled.
    let mut scaled = m.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 && norm.is_finite() {
            col /= Scalar::new(norm, 0.0);
        }
    }
    let rank = if n > m.nrows() { m.nrows().min(numerical_rank(&scaled)) } else { numerical_rank(&scaled) };
    if rank < n {
        return Err(Error::NotIndependent { rank, n });
    }
    let q = scaled.col_piv_qr().q();
    Ok(Subspace { frame: q.columns(0, n).into_owned() })
}

/// `π_n`: the span of an independent tuple.
pub fn pi_n(tuple: &[Vector]) -> Result<Subspace> {
    span_of_columns(&tuple_matrix(tuple)?)
}

/// A tuple within `eps` of `tuple` (per vector, in ℓ²) whose span has full dimension.
///
/// Independent inputs are returned unchanged.
pub fn perturb_to_independent(tuple: &[Vector], eps: f64, seed: u64) -> Result<Vec<Vector>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter("perturbation radius must be positive".into()));
    }
    if pi_n(tuple).is_ok() {
        return Ok(tuple.to_vec());
    }
    let dim = tuple.first().map(Vector::dim).ok_or(Error::NotIndependent { rank: 0, n: 0 })?;
    let field = if tuple.iter().all(Vector::is_real) { Field::Real } else { Field::Complex };
    let mut rng = seeded_rng(seed, 0x7065_7274);
    for _ in 0..MAX_PERTURB_RETRIES {
        let mut out = Vec::with_capacity(tuple.len());
        for v in tuple {
            let noise = Vector::from_pairs(dim, (0..dim).map(|i| (i, gaussian_scalar(field, &mut rng))))?;
            let norm = noise.l2_norm();
            if norm == 0.0 {
                out.push(v.clone());
                continue;
            }
            // Strictly inside the ball: radius eps times a factor in [0.25, 0.75).
            let radius = eps * (0.25 + 0.5 * rng.random::<f64>());
            out.push(v.axpy(Scalar::new(radius / norm, 0.0), &noise)?);
        }
        if pi_n(&out).is_ok() {
            return Ok(out);
        }
    }
    Err(Error::RetriesExhausted(MAX_PERTURB_RETRIES))
}

fn frame_order(a: &Subspace, b: &Subspace) -> Ordering {
    for (x, y) in a.frame.iter().zip(b.frame.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Largest principal angle between two subspaces of equal dimension, in `[0, π/2]`.
pub fn grassmann_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    // A canonical argument order makes the result exactly symmetric.
    let (a, b) = if frame_order(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let cross = a.frame.adjoint() * &b.frame;
    let cos_min = cross.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    // sin of the largest angle: the component of B outside A.
    let residual = &b.frame - &a.frame * cross;
    let sin_max = residual.svd(false, false).singular_values.iter().copied().fold(0.0, f64::max);
    let theta = sin_max.atan2(cos_min.clamp(0.0, 1.0));
    Ok(theta.clamp(0.0, std::f64::consts::FRAC_PI_2))
}

/// `T(L)`; fails if the image loses dimension.
pub fn push_forward(op: &OperatorSpec, l: &Subspace) -> Result<Subspace> {
    let image = apply_to_frame(op, l.frame())?;
    span_of_columns(&image).map_err(|e| match e {
        Error::NotIndependent { .. } => Error::DimensionDrop,
        other => other,
    })
}

/// Applies `op` to every column of `frame`.
pub fn apply_to_frame(op: &OperatorSpec, frame: &DMatrix<Scalar>) -> Result<DMatrix<Scalar>> {
    let n = op.dim();
    if frame.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: frame.nrows() });
    }
    let mut out = DMatrix::zeros(n, frame.ncols());
    let mut y = vec![Scalar::zero(); n];
    for (j, col) in frame.column_iter().enumerate() {
        op.apply_dense(col.as_slice(), &mut y);
        out.column_mut(j).copy_from_slice(&y);
    }
    Ok(out)
}

/// Monte-Carlo estimate of `sup_{z ∈ F, |z| = 1} inf_{x ∈ E, |x| = 1} ‖x − z‖`.
///
/// The inner infimum is exact: `x` is the normalised projection of `z` onto `E`.
pub fn sphere_deviation(e: &Subspace, f: &Subspace, samples: usize, seed: u64) -> Result<f64> {
    if e.n() != f.n() || e.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: e.n(), found: f.n() });
    }
    let field = if e.is_real() && f.is_real() { Field::Real } else { Field::Complex };
    let mut rng = seeded_rng(seed, 0x7370_6865);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let g = nalgebra::DVector::from_fn(f.n(), |_, _| gaussian_scalar(field, &mut rng));
        let mut z = &f.frame * g;
        let zn = z.norm();
        if zn == 0.0 {
            continue;
        }
        z /= Scalar::new(zn, 0.0);
        let pz = &e.frame * (e.frame.adjoint() * &z);
        let pn = pz.norm();
        let d = if pn == 0.0 { std::f64::consts::SQRT_2 } else { (pz / Scalar::new(pn, 0.0) - z).norm() };
        worst = worst.max(d);
    }
    Ok(worst)
}

/// One point of a sphere-convergence sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSweep {
    pub points: Vec<SweepPoint>,
    /// First `n` of the sweep from which every deviation is below `threshold`.
    pub n0: Option<usize>,
    pub threshold: f64,
    pub nonincreasing: bool,
}

/// Sweeps `n` over `ns`, moving each basis vector `u_i` of `base` by exactly
/// `1/n` along the unit direction `directions[i]`, and reports the deviation
/// between `base` and the perturbed span.
pub fn sphere_convergence_sweep(
    base: &[Vector],
    directions: &[Vector],
    ns: &[usize],
    samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<SphereSweep> {
    if base.len() != directions.len() {
        return Err(Error::DimensionMismatch { expected: base.len(), found: directions.len() });
    }
    let e = pi_n(base)?;
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let moved: Vec<Vector> = base
            .iter()
            .zip(directions)
            .map(|(u, d)| u.axpy(Scalar::new(1.0 / (n as f64 * d.l2_norm()), 0.0), d))
            .collect::<Result<_>>()?;
        let f = pi_n(&moved)?;
        points.push(SweepPoint { n, deviation: sphere_deviation(&e, &f, samples, seed)? });
    }
    let nonincreasing = points.windows(2).all(|w| w[1].deviation <= w[0].deviation + 1e-12);
    let n0 = (0..points.len())
        .find(|&i| points[i..].iter().all(|p| p.deviation < threshold))
        .map(|i| points[i].n);
    Ok(SphereSweep { points, n0, threshold, nonincreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn e(dim: usize, i: usize) -> Vector {
        Vector::basis(dim, i).unwrap()
    }

    #[test]
    fn pi_n_of_basis_pair() {
        let s = pi_n(&[e(4, 0), e(4, 1)]).unwrap();
        assert_eq!((s.n(), s.dim()), (2, 4));
        let target = Subspace::coordinate(4, &[0, 1]).unwrap();
        assert!(grassmann_distance(&s, &target).unwrap() < 1e-15);
    }

    #[test]
    fn dependent_tuples_are_not_in_x_n() {
        let err = pi_n(&[e(4, 0), e(4, 0).scale(Scalar::new(2.0, 0.0))]).unwrap_err();
        assert!(err.to_string().contains("tuple not in X_n"));
        assert!(pi_n(&[Vector::zeros(3)]).is_err());
    }

    #[test]
    fn same_span_has_distance_zero() {
        let a = pi_n(&[e(4, 0), e(4, 1)]).unwrap();
        let b = pi_n(&[e(4, 0).add(&e(4, 1)).unwrap(), e(4, 0).sub(&e(4, 1)).unwrap()]).unwrap();
        assert!(grassmann_distance(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let a = pi_n(&[e(3, 0)]).unwrap();
        let b = pi_n(&[e(3, 0).add(&e(3, 1)).unwrap()]).unwrap();
        assert!((grassmann_distance(&a, &b).unwrap() - FRAC_PI_4).abs() < 1e-10);
        assert_eq!(grassmann_distance(&a, &a).unwrap(), 0.0);
        let c = pi_n(&[e(3, 1)]).unwrap();
        assert!((grassmann_distance(&a, &c).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let d = pi_n(&[e(3, 0), e(3, 1)]).unwrap();
        assert!(grassmann_distance(&a, &d).is_err());
    }

    #[test]
    fn small_angles_are_accurate() {
        let t: f64 = 1e-9;
        let a = pi_n(&[e(2, 0)]).unwrap();
        let b = pi_n(&[Vector::from_real(&[t.cos(), t.sin()])]).unwrap();
        assert!((grassmann_distance(&a, &b).unwrap() - t).abs() < 1e-20);
    }

    #[test]
    fn perturbation_examples() {
        let dep = vec![e(4, 0), e(4, 0).scale(Scalar::new(2.0, 0.0))];
        let out = perturb_to_independent(&dep, 1e-3, 9).unwrap();
        assert!(pi_n(&out).is_ok());
        for (x, y) in dep.iter().zip(&out) {
            assert!(x.distance(y).unwrap() <= 1e-3);
        }
        let indep = vec![e(4, 0), e(4, 2)];
        assert_eq!(perturb_to_independent(&indep, 1e-6, 9).unwrap(), indep);
        let zeros = vec![Vector::zeros(2), Vector::zeros(2)];
        let out = perturb_to_independent(&zeros, 0.1, 3).unwrap();
        assert!(pi_n(&out).is_ok());
        assert!(out.iter().all(|v| v.l2_norm() <= 0.1));
    }

    #[test]
    fn push_forward_examples() {
        let d = OperatorSpec::diagonal_real(&[2.0, 3.0]);
        let l = Subspace::coordinate(2, &[0, 1]).unwrap();
        assert!(grassmann_distance(&push_forward(&d, &l).unwrap(), &l).unwrap() < 1e-15);
        let b = OperatorSpec::backward_shift(4);
        let line = Subspace::coordinate(4, &[0]).unwrap();
        assert!(matches!(push_forward(&b, &line), Err(Error::DimensionDrop)));
        let two_b = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(8));
        let img = push_forward(&two_b, &Subspace::coordinate(8, &[3]).unwrap()).unwrap();
        assert!(grassmann_distance(&img, &Subspace::coordinate(8, &[2]).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn sphere_deviation_examples() {
        let a = Subspace::coordinate(3, &[0]).unwrap();
        assert!(sphere_deviation(&a, &a, 50, 1).unwrap() < 1e-10);
        let b = Subspace::coordinate(3, &[1]).unwrap();
        assert!((sphere_deviation(&a, &b, 50, 1).unwrap() - SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn subspace_json_round_trip() {
        let s = pi_n(&[Vector::from_real(&[1.0, 1.0, 0.0]), e(3, 2)]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with(r#"{"n":2,"dim":3,"frame":["#));
        let back: Subspace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Subspace>(r#"{"n":1,"dim":2,"frame":[1.0,1.0]}"#).is_err());
    }
}
