//! Symbolic operators on truncated sequence spaces.
//!
//! Every variant acts on `C^N` by an explicit matrix. Shifts that push mass
//! past index `N - 1` drop it; the dropped ℓ² mass is returned with each
//! application so experiments can bound truncation leakage.

mod config;
mod spectrum;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand_distr::{Distribution, StandardNormal};

use crate::construction::ConstructionParams;
use crate::error::{Error, Result};
use crate::space::{seeded_rng, DirectSumVector, Scalar, Vector};

pub use config::{OperatorConfig, ScalarRepr};
pub use spectrum::{circle_intersects_all_components, SpectralComponent, SpectrumDescription};

/// Largest truncation for which a dense matrix is materialised.
pub const DEFAULT_MATRIX_CAP: usize = 4096;

/// Columns of a weighted forward shift with finitely many perturbed columns.
///
/// Column `j` lists the image of `e_j` as `(row, value)` pairs. Rows `>= dim`
/// are kept so that truncation losses can be reported.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedShift {
    dim: usize,
    columns: Vec<Vec<(usize, f64)>>,
    params: Option<ConstructionParams>,
}

impl PerturbedShift {
    pub fn from_columns(
        dim: usize,
        columns: Vec<Vec<(usize, f64)>>,
        params: Option<ConstructionParams>,
    ) -> Result<Self> {
        if columns.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: columns.len() });
        }
        if columns.iter().flatten().any(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidOperator("non-finite column entry".into()));
        }
        Ok(Self { dim, columns, params })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn params(&self) -> Option<&ConstructionParams> {
        self.params.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorSpec {
    Diagonal(Vec<Scalar>),
    /// `B e_{i+1} = weights[i] e_i`; `weights.len() == dim - 1`.
    BackwardShift { dim: usize, weights: Vec<f64> },
    /// `F e_i = weights[i] e_{i+1}`; `weights.len() == dim`, the last one acts past the truncation.
    ForwardShift { dim: usize, weights: Vec<f64> },
    /// `a·Id + B`, the coefficient model of the adjoint of multiplication by `a + z`.
    AdjointMultiplication { a: Scalar, dim: usize },
    Scaled { c: Scalar, inner: Box<OperatorSpec> },
    DirectSum(Vec<OperatorSpec>),
    PerturbedForwardShift(Arc<PerturbedShift>),
}

/// Image of a vector together with the ℓ² norm of the part dropped by truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Application<V> {
    pub image: V,
    pub lost_mass: f64,
}

impl OperatorSpec {
    pub fn diagonal(values: Vec<Scalar>) -> Self {
        OperatorSpec::Diagonal(values)
    }

    pub fn diagonal_real(values: &[f64]) -> Self {
        OperatorSpec::Diagonal(values.iter().map(|&x| Scalar::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        OperatorSpec::Diagonal(vec![Scalar::one(); dim])
    }

    pub fn backward_shift(dim: usize) -> Self {
        OperatorSpec::BackwardShift { dim, weights: vec![1.0; dim.saturating_sub(1)] }
    }

    pub fn forward_shift(dim: usize) -> Self {
        OperatorSpec::ForwardShift { dim, weights: vec![1.0; dim] }
    }

    pub fn adjoint_multiplication(a: Scalar, dim: usize) -> Self {
        OperatorSpec::AdjointMultiplication { a, dim }
    }

    pub fn scaled(c: Scalar, inner: OperatorSpec) -> Self {
        OperatorSpec::Scaled { c, inner: Box::new(inner) }
    }

    pub fn scaled_real(c: f64, inner: OperatorSpec) -> Self {
        Self::scaled(Scalar::new(c, 0.0), inner)
    }

    pub fn direct_sum(blocks: Vec<OperatorSpec>) -> Self {
        OperatorSpec::DirectSum(blocks)
    }

    /// Checks the structural invariants of the description.
    pub fn validate(&self) -> Result<()> {
        let positive = |w: &[f64]| w.iter().all(|&x| x.is_finite() && x > 0.0);
        match self {
            OperatorSpec::Diagonal(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidOperator("empty diagonal".into()));
                }
                if values.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidOperator("non-finite diagonal entry".into()));
                }
            }
            OperatorSpec::BackwardShift { dim, weights } => {
                if *dim == 0 || weights.len() + 1 != *dim {
                    return Err(Error::InvalidOperator(format!(
                        "backward shift of dimension {dim} needs {} weights, got {}",
                        dim.saturating_sub(1),
                        weights.len()
                    )));
                }
                if !positive(weights) {
                    return Err(Error::InvalidOperator("shift weights must be positive".into()));
                }
            }
            OperatorSpec::ForwardShift { dim, weights } => {
                if *dim == 0 || weights.len() != *dim {
                    return Err(Error::InvalidOperator(format!(
                        "forward shift of dimension {dim} needs {dim} weights, got {}",
                        weights.len()
                    )));
                }
                if !positive(weights) {
                    return Err(Error::InvalidOperator("shift weights must be positive".into()));
                }
            }
            OperatorSpec::AdjointMultiplication { a, dim } => {
                if *dim == 0 || !a.is_finite() {
                    return Err(Error::InvalidOperator("adjoint multiplication needs dim >= 1".into()));
                }
            }
            OperatorSpec::Scaled { c, inner } => {
                if c.is_zero() || !c.is_finite() {
                    return Err(Error::InvalidOperator("scale factor must be nonzero".into()));
                }
                inner.validate()?;
            }
            OperatorSpec::DirectSum(blocks) => {
                if blocks.is_empty() {
                    return Err(Error::InvalidOperator("empty direct sum".into()));
                }
                for b in blocks {
                    b.validate()?;
                }
            }
            OperatorSpec::PerturbedForwardShift(_) => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Diagonal(values) => values.len(),
            OperatorSpec::BackwardShift { dim, .. }
            | OperatorSpec::ForwardShift { dim, .. }
            | OperatorSpec::AdjointMultiplication { dim, .. } => *dim,
            OperatorSpec::Scaled { inner, .. } => inner.dim(),
            OperatorSpec::DirectSum(blocks) => blocks.iter().map(OperatorSpec::dim).sum(),
            OperatorSpec::PerturbedForwardShift(p) => p.dim,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            OperatorSpec::Diagonal(_) => "diagonal",
            OperatorSpec::BackwardShift { .. } => "backward_shift",
            OperatorSpec::ForwardShift { .. } => "forward_shift",
            OperatorSpec::AdjointMultiplication { .. } => "adjoint_multiplication",
            OperatorSpec::Scaled { .. } => "scaled",
            OperatorSpec::DirectSum(_) => "direct_sum",
            OperatorSpec::PerturbedForwardShift(_) => "perturbed_forward_shift",
        }
    }

    /// Block dimensions of a top-level direct sum, or the single dimension otherwise.
    pub fn block_dims(&self) -> Vec<usize> {
        match self {
            OperatorSpec::DirectSum(blocks) => blocks.iter().map(OperatorSpec::dim).collect(),
            other => vec![other.dim()],
        }
    }

    pub fn apply(&self, v: &Vector) -> Result<Application<Vector>> {
        let n = self.dim();
        if v.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.dim() });
        }
        let x = v.to_dense();
        let mut y = vec![Scalar::zero(); n];
        let lost_sq = self.apply_dense(&x, &mut y);
        Ok(Application { image: Vector::from_dense(&y), lost_mass: lost_sq.sqrt() })
    }

    /// Applies a top-level direct sum blockwise.
    pub fn apply_direct_sum(&self, v: &DirectSumVector) -> Result<Application<DirectSumVector>> {
        let dims = self.block_dims();
        if v.block_dims() != dims {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.dim() });
        }
        let blocks: Vec<&OperatorSpec> = match self {
            OperatorSpec::DirectSum(blocks) => blocks.iter().collect(),
            other => vec![other],
        };
        let mut images = Vec::with_capacity(blocks.len());
        let mut lost_sq = 0.0;
        for (op, x) in blocks.into_iter().zip(v.blocks()) {
            let a = op.apply(x)?;
            lost_sq += a.lost_mass * a.lost_mass;
            images.push(a.image);
        }
        Ok(Application { image: DirectSumVector::new(images), lost_mass: lost_sq.sqrt() })
    }

    /// `y = A x` on dense slices of length `dim`; returns the squared ℓ² mass dropped.
    pub fn apply_dense(&self, x: &[Scalar], y: &mut [Scalar]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        match self {
            OperatorSpec::Diagonal(values) => {
                for ((yi, xi), l) in y.iter_mut().zip(x).zip(values) {
                    *yi = l * xi;
                }
                0.0
            }
            OperatorSpec::BackwardShift { dim, weights } => {
                for i in 0..dim - 1 {
                    y[i] = x[i + 1] * weights[i];
                }
                y[dim - 1] = Scalar::zero();
                0.0
            }
            OperatorSpec::ForwardShift { dim, weights } => {
                y[0] = Scalar::zero();
                for i in 0..dim - 1 {
                    y[i + 1] = x[i] * weights[i];
                }
                (x[dim - 1] * weights[dim - 1]).norm_sqr()
            }
            OperatorSpec::AdjointMultiplication { a, dim } => {
                for i in 0..*dim {
                    let shifted = if i + 1 < *dim { x[i + 1] } else { Scalar::zero() };
                    y[i] = a * x[i] + shifted;
                }
                0.0
            }
            OperatorSpec::Scaled { c, inner } => {
                let lost = inner.apply_dense(x, y);
                for yi in y.iter_mut() {
                    *yi *= c;
                }
                lost * c.norm_sqr()
            }
            OperatorSpec::DirectSum(blocks) => {
                let mut offset = 0;
                let mut lost = 0.0;
                for b in blocks {
                    let d = b.dim();
                    lost += b.apply_dense(&x[offset..offset + d], &mut y[offset..offset + d]);
                    offset += d;
                }
                lost
            }
            OperatorSpec::PerturbedForwardShift(p) => {
                y.iter_mut().for_each(|yi| *yi = Scalar::zero());
                let mut overflow: Vec<(usize, Scalar)> = Vec::new();
                for (j, xj) in x.iter().enumerate() {
                    if xj.is_zero() {
                        continue;
                    }
                    for &(r, v) in &p.columns[j] {
                        if r < p.dim {
                            y[r] += xj * v;
                        } else {
                            overflow.push((r, xj * v));
                        }
                    }
                }
                overflow.sort_by_key(|&(r, _)| r);
                let mut lost = 0.0;
                let mut i = 0;
                while i < overflow.len() {
                    let r = overflow[i].0;
                    let mut acc = Scalar::zero();
                    while i < overflow.len() && overflow[i].0 == r {
                        acc += overflow[i].1;
                        i += 1;
                    }
                    lost += acc.norm_sqr();
                }
                lost
            }
        }
    }

    /// `y = A^* x` for the truncated matrix `A`.
    pub fn apply_adjoint_dense(&self, x: &[Scalar], y: &mut [Scalar]) {
        match self {
            OperatorSpec::Diagonal(values) => {
                for ((yi, xi), l) in y.iter_mut().zip(x).zip(values) {
                    *yi = l.conj() * xi;
                }
            }
            OperatorSpec::BackwardShift { dim, weights } => {
                y[0] = Scalar::zero();
                for i in 0..dim - 1 {
                    y[i + 1] = x[i] * weights[i];
                }
            }
            OperatorSpec::ForwardShift { dim, weights } => {
                for i in 0..dim - 1 {
                    y[i] = x[i + 1] * weights[i];
                }
                y[dim - 1] = Scalar::zero();
            }
            OperatorSpec::AdjointMultiplication { a, dim } => {
                for i in 0..*dim {
                    let shifted = if i > 0 { x[i - 1] } else { Scalar::zero() };
                    y[i] = a.conj() * x[i] + shifted;
                }
            }
            OperatorSpec::Scaled { c, inner } => {
                inner.apply_adjoint_dense(x, y);
                for yi in y.iter_mut() {
                    *yi *= c.conj();
                }
            }
            OperatorSpec::DirectSum(blocks) => {
                let mut offset = 0;
                for b in blocks {
                    let d = b.dim();
                    b.apply_adjoint_dense(&x[offset..offset + d], &mut y[offset..offset + d]);
                    offset += d;
                }
            }
            OperatorSpec::PerturbedForwardShift(p) => {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj = p.columns[j]
                        .iter()
                        .filter(|(r, _)| *r < p.dim)
                        .map(|&(r, v)| x[r] * v)
                        .sum();
                }
            }
        }
    }

    pub fn truncated_matrix(&self) -> Result<DMatrix<Scalar>> {
        self.truncated_matrix_with_cap(DEFAULT_MATRIX_CAP)
    }

    pub fn truncated_matrix_with_cap(&self, cap: usize) -> Result<DMatrix<Scalar>> {
        let n = self.dim();
        if n > cap {
            return Err(Error::CapExceeded { dim: n, cap });
        }
        let mut m = DMatrix::zeros(n, n);
        let mut x = vec![Scalar::zero(); n];
        let mut y = vec![Scalar::zero(); n];
        for j in 0..n {
            x[j] = Scalar::one();
            self.apply_dense(&x, &mut y);
            m.column_mut(j).copy_from_slice(&y);
            x[j] = Scalar::zero();
        }
        Ok(m)
    }

    /// Power iteration on `A^*A` for the ℓ² norm of the truncated matrix.
    ///
    /// Returns the largest `‖A x‖` seen over unit iterates, so the value is a
    /// lower bound that never decreases with more iterations.
    pub fn operator_norm_estimate(&self, iterations: usize) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut rng = seeded_rng(0x6e6f726d, 0);
        let mut x: Vec<Scalar> = (0..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                Scalar::new(g, 0.0)
            })
            .collect();
        let mut y = vec![Scalar::zero(); n];
        let mut z = vec![Scalar::zero(); n];
        let mut best = 0.0f64;
        normalize(&mut x);
        for _ in 0..iterations.max(1) {
            self.apply_dense(&x, &mut y);
            best = best.max(norm(&y));
            self.apply_adjoint_dense(&y, &mut z);
            if norm(&z) == 0.0 {
                break;
            }
            std::mem::swap(&mut x, &mut z);
            normalize(&mut x);
        }
        best
    }

    /// Closed-form spectrum of the infinite-dimensional operator this truncation models.
    pub fn analytic_spectrum(&self) -> Result<SpectrumDescription> {
        spectrum::analytic_spectrum(self)
    }
}

fn norm(x: &[Scalar]) -> f64 {
    let scale = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v.norm() / scale).powi(2)).sum::<f64>().sqrt()
}

fn normalize(x: &mut [Scalar]) {
    let n = norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

pub fn apply(op: &OperatorSpec, v: &Vector) -> Result<Application<Vector>> {
    op.apply(v)
}

pub fn truncated_matrix(op: &OperatorSpec) -> Result<DMatrix<Scalar>> {
    op.truncated_matrix()
}

pub fn operator_norm_estimate(op: &OperatorSpec, iterations: usize) -> f64 {
    op.operator_norm_estimate(iterations)
}

pub fn analytic_spectrum(op: &OperatorSpec) -> Result<SpectrumDescription> {
    op.analytic_spectrum()
}

/// Compares `(⊕S)^k (A·x)` with `A·((⊕S)^k x)` for a `p`-tuple `x`.
///
/// `(A·x)_i = Σ_j A_ij x_j`. Returns whether both sides agree to `1e-10`
/// relative to the larger side.
pub fn mixing_commutation_check(
    s: &OperatorSpec,
    a: &DMatrix<Scalar>,
    tuple: &[Vector],
    k: usize,
) -> Result<bool> {
    let p = tuple.len();
    if a.nrows() != p || a.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: a.nrows() });
    }
    let det = a.clone().determinant().norm();
    if det <= 1e-12 {
        return Err(Error::SingularMatrix(det));
    }
    let mix = |xs: &[Vector]| -> Result<Vec<Vector>> {
        (0..p)
            .map(|i| {
                let mut acc = Vector::zeros(s.dim());
                for (j, xj) in xs.iter().enumerate() {
                    acc = acc.axpy(a[(i, j)], xj)?;
                }
                Ok(acc)
            })
            .collect()
    };
    let power = |x: &Vector| -> Result<Vector> {
        let mut v = x.clone();
        for _ in 0..k {
            v = s.apply(&v)?.image;
        }
        Ok(v)
    };
    let lhs: Vec<Vector> = mix(tuple)?.iter().map(power).collect::<Result<_>>()?;
    let images: Vec<Vector> = tuple.iter().map(power).collect::<Result<_>>()?;
    let rhs = mix(&images)?;
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (l, r) in lhs.iter().zip(&rhs) {
        diff = diff.max(l.distance(r)?);
        scale = scale.max(l.l2_norm()).max(r.l2_norm());
    }
    Ok(diff <= 1e-10 * scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    #[test]
    fn backward_shift_drops_first_coordinate() {
        let b = OperatorSpec::backward_shift(5);
        let v = Vector::from_real(&[1.0, 2.0, 3.0, 0.0, 0.0]);
        let out = b.apply(&v).unwrap();
        assert_eq!(out.image, Vector::from_real(&[2.0, 3.0, 0.0, 0.0, 0.0]));
        assert_eq!(out.lost_mass, 0.0);
    }

    #[test]
    fn diagonal_and_adjoint_multiplication() {
        let d = OperatorSpec::diagonal_real(&[2.0, 3.0]);
        assert_eq!(d.apply(&Vector::from_real(&[1.0, 1.0])).unwrap().image, Vector::from_real(&[2.0, 3.0]));
        let m = OperatorSpec::adjoint_multiplication(re(1.0), 4);
        let e1 = Vector::basis(4, 1).unwrap();
        assert_eq!(m.apply(&e1).unwrap().image, Vector::from_real(&[1.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn forward_shift_reports_lost_mass() {
        let f = OperatorSpec::ForwardShift { dim: 3, weights: vec![1.0, 1.0, 2.0] };
        let out = f.apply(&Vector::from_real(&[0.0, 1.0, 3.0])).unwrap();
        assert_eq!(out.image, Vector::from_real(&[0.0, 0.0, 1.0]));
        assert_eq!(out.lost_mass, 6.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = OperatorSpec::backward_shift(3);
        assert!(matches!(b.apply(&Vector::zeros(4)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn small_matrices() {
        let m = OperatorSpec::backward_shift(2).truncated_matrix().unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)]));
        let d = OperatorSpec::diagonal_real(&[5.0]).truncated_matrix().unwrap();
        assert_eq!(d[(0, 0)], re(5.0));
        let big = OperatorSpec::backward_shift(10);
        assert!(matches!(big.truncated_matrix_with_cap(8), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn norm_estimates() {
        let b = OperatorSpec::backward_shift(50);
        assert!((b.operator_norm_estimate(200) - 1.0).abs() < 1e-6);
        let d = OperatorSpec::diagonal_real(&[1.0, -2.0, 0.5]);
        assert!((d.operator_norm_estimate(200) - 2.0).abs() < 1e-6);
        let s = OperatorSpec::scaled_real(3.0, OperatorSpec::forward_shift(20));
        assert!(s.operator_norm_estimate(5) <= s.operator_norm_estimate(50) + 1e-15);
    }

    #[test]
    fn validation_catches_bad_descriptions() {
        assert!(OperatorSpec::scaled_real(0.0, OperatorSpec::identity(2)).validate().is_err());
        assert!(OperatorSpec::BackwardShift { dim: 3, weights: vec![1.0, -1.0] }.validate().is_err());
        assert!(OperatorSpec::BackwardShift { dim: 3, weights: vec![1.0] }.validate().is_err());
        assert!(OperatorSpec::direct_sum(vec![]).validate().is_err());
        assert!(OperatorSpec::backward_shift(3).validate().is_ok());
    }

    #[test]
    fn mixing_commutes_with_powers() {
        let s = OperatorSpec::scaled_real(2.0, OperatorSpec::backward_shift(8));
        let tuple = vec![
            crate::space::sample_vector(8, 0..8, 1).unwrap(),
            crate::space::sample_vector(8, 0..8, 2).unwrap(),
        ];
        let id = DMatrix::<Scalar>::identity(2, 2);
        assert!(mixing_commutation_check(&s, &id, &tuple, 3).unwrap());
        let a = DMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(0.0), re(1.0)]);
        assert!(mixing_commutation_check(&s, &a, &tuple, 5).unwrap());
        let singular = DMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(1.0), re(1.0)]);
        assert!(matches!(
            mixing_commutation_check(&s, &singular, &tuple, 1),
            Err(Error::SingularMatrix(_))
        ));
    }
}
