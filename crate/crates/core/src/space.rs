//! Truncated sequence-space vectors over the reals or complexes.
//!
//! A [`Vector`] is a finitely supported coordinate map in the canonical basis
//! `(e_i)` together with a truncation dimension `N`; all indices are `< N`.
//! Norms are the ℓ¹ and ℓ² norms of that coordinate sequence.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = Complex64;

/// Scalar field of an experiment. All construction instances run over the reals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    #[default]
    Real,
    Complex,
}

/// Deterministic RNG for a seed. `stream` separates independent consumers of one seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A standard Gaussian scalar; complex draws use independent real and imaginary parts.
pub fn gaussian_scalar<R: rand::Rng + ?Sized>(field: Field, rng: &mut R) -> Scalar {
    let re: f64 = StandardNormal.sample(rng);
    match field {
        Field::Real => Scalar::new(re, 0.0),
        Field::Complex => {
            let im: f64 = StandardNormal.sample(rng);
            Scalar::new(re, im)
        }
    }
}

/// Finitely supported vector of a truncation of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    dim: usize,
    coords: BTreeMap<usize, Scalar>,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, coords: BTreeMap::new() }
    }

    /// The basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        let mut v = Self::zeros(dim);
        v.set(i, Scalar::one())?;
        Ok(v)
    }

    pub fn from_dense(values: &[Scalar]) -> Self {
        let coords = values
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| (i, *x))
            .collect();
        Self { dim: values.len(), coords }
    }

    pub fn from_real(values: &[f64]) -> Self {
        let dense: Vec<Scalar> = values.iter().map(|&x| Scalar::new(x, 0.0)).collect();
        Self::from_dense(&dense)
    }

    /// Builds a vector from `(index, value)` pairs; repeated indices accumulate.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Scalar)>,
    {
        let mut v = Self::zeros(dim);
        for (i, x) in pairs {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            let entry = v.coords.entry(i).or_insert_with(Scalar::zero);
            *entry += x;
        }
        v.prune();
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &BTreeMap<usize, Scalar> {
        &self.coords
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.coords.get(&i).copied().unwrap_or_else(Scalar::zero)
    }

    pub fn set(&mut self, i: usize, x: Scalar) -> Result<()> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim });
        }
        if x.is_zero() {
            self.coords.remove(&i);
        } else {
            self.coords.insert(i, x);
        }
        Ok(())
    }

    /// Drops stored entries that are exactly zero.
    pub fn prune(&mut self) {
        self.coords.retain(|_, x| !x.is_zero());
    }

    pub fn is_zero(&self) -> bool {
        self.coords.values().all(|x| x.is_zero())
    }

    pub fn is_real(&self) -> bool {
        self.coords.values().all(|x| x.im == 0.0)
    }

    /// Largest stored index plus one, or 0 for the zero vector.
    pub fn support_end(&self) -> usize {
        self.coords.keys().next_back().map_or(0, |&i| i + 1)
    }

    pub fn l1_norm(&self) -> f64 {
        self.coords.values().map(|x| x.norm()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        // Scaled accumulation keeps huge or tiny coordinates from overflowing.
        let scale = self.coords.values().map(|x| x.norm()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        let s: f64 = self.coords.values().map(|x| (x.norm() / scale).powi(2)).sum();
        scale * s.sqrt()
    }

    pub fn to_dense(&self) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.dim];
        for (&i, &x) in &self.coords {
            out[i] = x;
        }
        out
    }

    pub fn to_dvector(&self) -> DVector<Scalar> {
        DVector::from_vec(self.to_dense())
    }

    pub fn from_dvector(v: &DVector<Scalar>) -> Self {
        Self::from_dense(v.as_slice())
    }

    pub fn scale(&self, c: Scalar) -> Self {
        let mut out = Self {
            dim: self.dim,
            coords: self.coords.iter().map(|(&i, &x)| (i, c * x)).collect(),
        };
        out.prune();
        out
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Scalar, other: &Vector) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (&i, &x) in &other.coords {
            *out.coords.entry(i).or_insert_with(Scalar::zero) += c * x;
        }
        out.prune();
        Ok(out)
    }

    pub fn add(&self, other: &Vector) -> Result<Self> {
        self.axpy(Scalar::one(), other)
    }

    pub fn sub(&self, other: &Vector) -> Result<Self> {
        self.axpy(-Scalar::one(), other)
    }

    /// ℓ² distance between two vectors of equal dimension.
    pub fn distance(&self, other: &Vector) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    /// Same coordinates in a truncation of dimension `dim`; entries at index `>= dim` are dropped.
    pub fn with_dim(&self, dim: usize) -> Self {
        Self {
            dim,
            coords: self.coords.range(..dim).map(|(&i, &x)| (i, x)).collect(),
        }
    }

    fn check_dim(&self, other: &Vector) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

pub fn l1_norm(v: &Vector) -> f64 {
    v.l1_norm()
}

/// Euclidean norm of anything carrying an ℓ² norm.
pub fn l2_norm<V: L2Norm + ?Sized>(v: &V) -> f64 {
    v.l2_norm()
}

pub trait L2Norm {
    fn l2_norm(&self) -> f64;
}

impl L2Norm for Vector {
    fn l2_norm(&self) -> f64 {
        Vector::l2_norm(self)
    }
}

impl L2Norm for DirectSumVector {
    fn l2_norm(&self) -> f64 {
        DirectSumVector::l2_norm(self)
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coords: Vec<(usize, f64, f64)> =
            self.coords.iter().map(|(&i, x)| (i, x.re, x.im)).collect();
        let mut st = serializer.serialize_struct("Vector", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("coords", &coords)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            dim: usize,
            coords: Vec<(usize, f64, f64)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Vector::from_pairs(raw.dim, raw.coords.into_iter().map(|(i, re, im)| (i, Scalar::new(re, im))))
            .map_err(de::Error::custom)
    }
}

/// Element of an ℓ²-direct sum: one [`Vector`] per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectSumVector {
    blocks: Vec<Vector>,
}

impl DirectSumVector {
    pub fn new(blocks: Vec<Vector>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vector] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vector> {
        self.blocks
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vector::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Vector::dim).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.l2_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Concatenation of the blocks in order.
    pub fn concat(&self) -> Vector {
        let mut offset = 0;
        let mut coords = BTreeMap::new();
        for b in &self.blocks {
            coords.extend(b.coords.iter().map(|(&i, &x)| (offset + i, x)));
            offset += b.dim;
        }
        Vector { dim: offset, coords }
    }

    /// Splits a concatenated vector back into blocks of the given dimensions.
    pub fn split(v: &Vector, dims: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().sum();
        if total != v.dim {
            return Err(Error::DimensionMismatch { expected: total, found: v.dim });
        }
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(dims.len());
        for &d in dims {
            let coords = v.coords.range(offset..offset + d).map(|(&i, &x)| (i - offset, x)).collect();
            blocks.push(Vector { dim: d, coords });
            offset += d;
        }
        Ok(Self { blocks })
    }
}

/// Draws i.i.d. standard real Gaussian coordinates on `support`.
pub fn sample_vector(dim: usize, support: Range<usize>, seed: u64) -> Result<Vector> {
    let mut rng = seeded_rng(seed, 0);
    sample_vector_with(Field::Real, dim, support, &mut rng)
}

/// As [`sample_vector`], drawing from a caller-owned RNG.
pub fn sample_vector_with<R: rand::Rng + ?Sized>(
    field: Field,
    dim: usize,
    support: Range<usize>,
    rng: &mut R,
) -> Result<Vector> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if support.end > dim {
        return Err(Error::SupportOutOfRange { start: support.start, end: support.end, dim });
    }
    loop {
        let v = Vector::from_pairs(dim, support.clone().map(|i| (i, gaussian_scalar(field, rng))))?;
        if !v.is_zero() {
            return Ok(v);
        }
    }
}

/// Exact rational coordinates, as used by the construction layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalVector {
    dim: usize,
    coords: BTreeMap<usize, BigRational>,
}

impl RationalVector {
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, BigRational)>,
    {
        let mut coords = BTreeMap::new();
        for (i, x) in pairs {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            let e = coords.entry(i).or_insert_with(BigRational::zero);
            *e += x;
        }
        coords.retain(|_, x: &mut BigRational| !x.is_zero());
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &BTreeMap<usize, BigRational> {
        &self.coords
    }

    pub fn to_vector(&self) -> Vector {
        use num_traits::ToPrimitive;
        let coords = self
            .coords
            .iter()
            .map(|(&i, x)| (i, Scalar::new(x.to_f64().unwrap_or(f64::NAN), 0.0)))
            .collect();
        Vector { dim: self.dim, coords }
    }
}

/// `"num/den"`, or `"num"` for integers.
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coords: Vec<(usize, String)> =
            self.coords.iter().map(|(&i, x)| (i, format_rational(x))).collect();
        let mut st = serializer.serialize_struct("RationalVector", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("coords", &coords)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            dim: usize,
            coords: Vec<(usize, String)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut pairs = Vec::with_capacity(raw.coords.len());
        for (i, s) in raw.coords {
            let x = parse_rational(&s)
                .ok_or_else(|| de::Error::custom(format!("invalid rational {s:?}")))?;
            pairs.push((i, x));
        }
        RationalVector::from_pairs(raw.dim, pairs).map_err(de::Error::custom)
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[dim {}:", self.dim)?;
        for (i, x) in &self.coords {
            if x.im == 0.0 {
                write!(f, " {i}:{}", x.re)?;
            } else {
                write!(f, " {i}:{}", x)?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        assert_eq!(Vector::from_real(&[1.0, -2.0, 3.0, 0.0]).l1_norm(), 6.0);
        assert_eq!(Vector::zeros(5).l1_norm(), 0.0);
        assert_eq!(Vector::basis(8, 5).unwrap().l1_norm(), 1.0);
    }

    #[test]
    fn l2_examples() {
        assert_eq!(Vector::from_real(&[3.0, 4.0]).l2_norm(), 5.0);
        let e0 = Vector::basis(3, 0).unwrap();
        let ds = DirectSumVector::new(vec![e0.clone(), e0]);
        assert!((l2_norm(&ds) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l2_norm(&Vector::zeros(4)), 0.0);
    }

    #[test]
    fn sampling_is_reproducible_and_seed_sensitive() {
        let a = sample_vector(8, 0..4, 42).unwrap();
        let b = sample_vector(8, 0..4, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.coords().keys().all(|&i| i < 4));
        let c = sample_vector(8, 0..8, 1).unwrap();
        let d = sample_vector(8, 0..8, 2).unwrap();
        assert_ne!(c, d);
    }

    #[test]
    fn empty_support_is_rejected() {
        assert!(matches!(sample_vector(8, 0..0, 7), Err(Error::EmptySupport)));
        assert!(matches!(sample_vector(8, 4..9, 7), Err(Error::SupportOutOfRange { .. })));
    }

    #[test]
    fn json_shape() {
        let v = Vector::from_pairs(4, [(1, Scalar::new(2.0, 0.0)), (3, Scalar::new(0.5, -1.0))]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"dim":4,"coords":[[1,2.0,0.0],[3,0.5,-1.0]]}"#);
        let back: Vector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Vector>(r#"{"dim":2,"coords":[[5,1.0,0.0]]}"#).is_err());
    }

    #[test]
    fn rational_json_uses_strings() {
        let half = BigRational::new(1.into(), 2.into());
        let v = RationalVector::from_pairs(3, [(0, half), (2, BigRational::from_integer((-3).into()))]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"dim":3,"coords":[[0,"1/2"],[2,"-3"]]}"#);
        assert_eq!(serde_json::from_str::<RationalVector>(&s).unwrap(), v);
    }

    #[test]
    fn split_inverts_concat() {
        let a = Vector::from_real(&[1.0, 0.0, 2.0]);
        let b = Vector::from_real(&[0.0, 5.0]);
        let ds = DirectSumVector::new(vec![a, b]);
        let flat = ds.concat();
        assert_eq!(flat.get(4), Scalar::new(5.0, 0.0));
        assert_eq!(DirectSumVector::split(&flat, &ds.block_dims()).unwrap(), ds);
    }
}
