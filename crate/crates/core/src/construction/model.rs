//! The perturbed weighted forward shift and its orbit coordinates.
//!
//! `T e_i = w_{i+1} e_{i+1}` except `T e_{b_n - 1} = ε_n e_{b_n} + f_n`, chosen
//! so that `T^{b_n} e_0 = P_n(T) e_0 + e_{b_n}`. Coordinates of `T^i e_0` follow
//! from the triangular recursion
//! `T^i e_0 = P_{n-1}(T) T^{i - b_{n-1}} e_0 + W(b_{n-1}, i) e_i` for
//! `b_{n-1} <= i < b_n`, where `W(a, i) = w_{a+1} ⋯ w_i`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use astro_float::BigFloat;
use serde::{Deserialize, Serialize};

use super::hp::{self, RM};
use super::params::{derive_control_sequence, ConstructionParams, IndexScheme};
use super::polynomial::Polynomial;
use super::sequence::AdmissibleSequence;
use crate::error::{Error, Result};
use crate::operators::{OperatorSpec, PerturbedShift};
use crate::space::{Scalar, Vector};

/// Sparse high-precision coordinates.
pub type HpVector = BTreeMap<usize, BigFloat>;

/// Largest index of `T^i e_0` evaluated by default.
pub const DEFAULT_ORBIT_CAP: u64 = 1 << 14;

/// Upper index for which the defining relation is re-derived by iteration.
pub const DEFAULT_CLOSURE_CAP: u64 = 700;

/// One construction instance with memoised coordinates of `T^i e_0`.
///
/// Memo tables only ever gain entries; readers see completed entries.
#[derive(Debug)]
pub struct Construction {
    params: ConstructionParams,
    sequence: AdmissibleSequence,
    orbit_cap: u64,
    polys: RwLock<HashMap<u64, Arc<Polynomial>>>,
    prefixes: RwLock<HashMap<u64, Arc<Vec<BigFloat>>>>,
    orbit: RwLock<HashMap<u64, Arc<HpVector>>>,
}

impl Construction {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        let sequence = AdmissibleSequence::new(&params)?;
        Ok(Self::with_sequence(params, sequence))
    }

    pub fn with_sequence(params: ConstructionParams, sequence: AdmissibleSequence) -> Self {
        Self {
            params,
            sequence,
            orbit_cap: DEFAULT_ORBIT_CAP,
            polys: RwLock::new(HashMap::new()),
            prefixes: RwLock::new(HashMap::new()),
            orbit: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_orbit_cap(mut self, cap: u64) -> Self {
        self.orbit_cap = cap;
        self
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn precision(&self) -> usize {
        self.params.precision
    }

    pub fn b(&self, n: u64) -> u64 {
        self.params.b(n)
    }

    /// `P_n`, checked against `deg P_n < b_n - 1` and `deg P_n < b_n / 3`.
    pub fn polynomial(&self, n: u64) -> Result<Arc<Polynomial>> {
        if let Some(p) = self.polys.read().expect("memo").get(&n) {
            return Ok(p.clone());
        }
        let p = self.sequence.get(n)?;
        if let Some(d) = p.degree() {
            let b = self.b(n);
            if d as u64 + 1 >= b || 3 * d as u64 >= b {
                return Err(Error::NonAmbiguity { n, degree: d, b });
            }
        }
        let p = Arc::new(p);
        self.polys.write().expect("memo").entry(n).or_insert_with(|| p.clone());
        Ok(p)
    }

    /// The `n >= 1` with `b_{n-1} <= i < b_n`, or 0 when `i < b_0`.
    pub fn segment(&self, i: u64) -> u64 {
        if i < self.b(0) {
            return 0;
        }
        let mut n = 1;
        while self.b(n) <= i {
            n += 1;
        }
        n
    }

    fn weight_hp(&self, t: u64) -> BigFloat {
        let p = self.precision();
        let root = hp::from_u64(t, p).sqrt(p, RM);
        hp::from_u64(4, p).sub(&hp::from_u64(2, p).div(&root, p, RM), p, RM)
    }

    /// `W(b_{n-1}, j)` for `j` in segment `n`.
    pub fn weight_product(&self, n: u64, j: u64) -> Result<BigFloat> {
        let start = self.b(n.saturating_sub(1));
        if n == 0 || j < start {
            return Err(Error::InvalidParameter(format!("index {j} outside segment {n}")));
        }
        let k = (j - start) as usize;
        if let Some(v) = self.prefixes.read().expect("memo").get(&n) {
            if let Some(x) = v.get(k) {
                return Ok(x.clone());
            }
        }
        let mut guard = self.prefixes.write().expect("memo");
        let entry = guard.entry(n).or_insert_with(|| Arc::new(vec![hp::one(self.precision())]));
        let v = Arc::make_mut(entry);
        while v.len() <= k {
            let t = start + v.len() as u64;
            let next = v.last().expect("prefix").mul(&self.weight_hp(t), self.precision(), RM);
            v.push(next);
        }
        Ok(v[k].clone())
    }

    /// `ε_n = 1 / W(b_{n-1}, b_n - 1)`.
    pub fn epsilon(&self, n: u64) -> Result<BigFloat> {
        if n == 0 {
            return Err(Error::InvalidParameter("ε_n is defined for n >= 1".into()));
        }
        let w = self.weight_product(n, self.b(n) - 1)?;
        Ok(hp::one(self.precision()).div(&w, self.precision(), RM))
    }

    /// Coordinates of `T^i e_0`.
    pub fn orbit_vector(&self, i: u64) -> Result<Arc<HpVector>> {
        if i > self.orbit_cap {
            return Err(Error::TruncationInsufficient { needed: i, available: self.orbit_cap });
        }
        if let Some(v) = self.orbit.read().expect("memo").get(&i) {
            return Ok(v.clone());
        }
        let p = self.precision();
        let n = self.segment(i);
        let mut out = HpVector::new();
        if n == 0 {
            out.insert(i as usize, hp::one(p));
        } else {
            let start = self.b(n - 1);
            let prev = self.polynomial(n - 1)?;
            self.accumulate_poly(&mut out, &prev, i - start, &hp::one(p))?;
            add_to(&mut out, i as usize, &self.weight_product(n, i)?, p);
        }
        let v = Arc::new(out);
        self.orbit.write().expect("memo").entry(i).or_insert_with(|| v.clone());
        Ok(v)
    }

    /// `acc += scale · P(T) T^shift e_0`.
    fn accumulate_poly(&self, acc: &mut HpVector, poly: &Polynomial, shift: u64, scale: &BigFloat) -> Result<()> {
        let p = self.precision();
        for (m, c) in poly.terms() {
            let coeff = hp::from_rational(c, p).mul(scale, p, RM);
            let v = self.orbit_vector(shift + m as u64)?;
            axpy(acc, &coeff, &v, p);
        }
        Ok(())
    }

    /// Coordinates of `P(T) e_0`.
    pub fn poly_apply(&self, poly: &Polynomial) -> Result<HpVector> {
        let mut out = HpVector::new();
        self.accumulate_poly(&mut out, poly, 0, &hp::one(self.precision()))?;
        Ok(out)
    }

    /// `ε_n` and `f_n = ε_n (P_n(T) e_0 − T^{b_n − b_{n−1}} P_{n−1}(T) e_0)`.
    pub fn epsilon_f_hp(&self, n: u64) -> Result<(BigFloat, HpVector)> {
        let p = self.precision();
        let eps = self.epsilon(n)?;
        let pn = self.polynomial(n)?;
        let prev = self.polynomial(n - 1)?;
        let mut f = HpVector::new();
        self.accumulate_poly(&mut f, &pn, 0, &eps)?;
        self.accumulate_poly(&mut f, &prev, self.b(n) - self.b(n - 1), &eps.neg())?;
        f.retain(|_, x| !x.is_zero());
        if let Some((&top, _)) = f.iter().next_back() {
            debug_assert!((top as u64) + 1 < self.b(n), "f_n must sit below b_n - 1");
        }
        let _ = p;
        Ok((eps, f))
    }

    /// `ε_n` and `f_n` rounded to `f64`; `f_n` lives in dimension `b_n`.
    pub fn epsilon_f(&self, n: u64) -> Result<(f64, Vector)> {
        let (eps, f) = self.epsilon_f_hp(n)?;
        let dim = self.b(n) as usize;
        let v = Vector::from_pairs(dim, f.iter().map(|(&i, x)| (i, Scalar::new(hp::to_f64(x), 0.0))))?;
        Ok((hp::to_f64(&eps), v))
    }

    /// Coordinates of `T^i e_0` rounded to `f64`, in dimension `i + 1`.
    pub fn orbit_vector_coords(&self, i: u64) -> Result<Vector> {
        let v = self.orbit_vector(i)?;
        Vector::from_pairs(i as usize + 1, v.iter().map(|(&j, x)| (j, Scalar::new(hp::to_f64(x), 0.0))))
    }

    /// Image columns of the truncation to `dim` coordinates, rows beyond kept.
    pub fn hp_columns(&self, dim: usize) -> Result<Vec<Vec<(usize, BigFloat)>>> {
        if (dim as u64) < self.b(1) + 1 {
            return Err(Error::InvalidParameter(format!(
                "truncation {dim} is below b_1 + 1 = {}",
                self.b(1) + 1
            )));
        }
        let p = self.precision();
        let mut columns = Vec::with_capacity(dim);
        let mut next_break = 1u64;
        for j in 0..dim as u64 {
            while self.b(next_break) <= j {
                next_break += 1;
            }
            if self.params.scheme == IndexScheme::Pow2p1 && j == 0 {
                columns.push(vec![(1, hp::one(p))]);
            } else if j + 1 == self.b(next_break) {
                let n = next_break;
                let (eps, f) = self.epsilon_f_hp(n)?;
                let mut col: Vec<(usize, BigFloat)> = f.into_iter().collect();
                col.push((self.b(n) as usize, eps));
                columns.push(col);
            } else {
                columns.push(vec![(j as usize + 1, self.weight_hp(j + 1))]);
            }
        }
        Ok(columns)
    }

    /// The truncated operator as an [`OperatorSpec`] with `f64` entries.
    pub fn build_operator(&self, dim: usize) -> Result<OperatorSpec> {
        let columns = self
            .hp_columns(dim)?
            .into_iter()
            .map(|col| {
                col.into_iter()
                    .map(|(r, x)| (r, hp::to_f64(&x)))
                    .filter(|&(_, x)| x != 0.0)
                    .collect()
            })
            .collect();
        let shift = PerturbedShift::from_columns(dim, columns, Some(self.params.clone()))?;
        Ok(OperatorSpec::PerturbedForwardShift(Arc::new(shift)))
    }

    /// `‖f_n‖_1` at the working precision.
    pub fn f_l1(&self, n: u64) -> Result<BigFloat> {
        let (_, f) = self.epsilon_f_hp(n)?;
        Ok(hp::sum_abs(f.values(), self.precision()))
    }

    /// Compares `‖f_n‖_1` with
    /// `4^{max(d_n, d_{n-1}) + 1} (|P_n|_1 / 2^{b_{n-1}} + |P_{n-1}|_1 e^{-c √b_{n-1}})`.
    pub fn check_f_bound(&self, n: u64) -> Result<FBoundRecord> {
        if n == 0 {
            return Err(Error::InvalidParameter("the bound concerns n >= 1".into()));
        }
        let one = hp::one(self.precision());
        for k in 1..n {
            if !hp::le(&self.f_l1(k)?, &one) {
                return Err(Error::HypothesisUnverified(format!("‖f_{k}‖_1 > 1")));
            }
        }
        let p = self.precision();
        let (eps, f) = self.epsilon_f_hp(n)?;
        let lhs = hp::sum_abs(f.values(), p);
        let pn = self.polynomial(n)?;
        let prev = self.polynomial(n - 1)?;
        let d = pn.degree_signed().max(prev.degree_signed()) + 1;
        let b_prev = self.b(n - 1);
        let mut cc = hp::consts();
        let four_pow = hp::from_u64(4, p).powi(d as usize, p, RM);
        let two_pow = hp::from_u64(2, p).powi(b_prev as usize, p, RM);
        let decay = hp::from_f64(self.params.constant_c(), p)
            .mul(&hp::from_u64(b_prev, p).sqrt(p, RM), p, RM)
            .neg()
            .exp(p, RM, &mut cc);
        let term_n = hp::from_rational(&pn.l1_norm(), p).div(&two_pow, p, RM);
        let term_prev = hp::from_rational(&prev.l1_norm(), p).mul(&decay, p, RM);
        let rhs = four_pow.mul(&term_n.add(&term_prev, p, RM), p, RM);
        Ok(FBoundRecord {
            n,
            b_n: self.b(n),
            eps_n: hp::to_decimal(&eps, 17),
            eps_le_one: hp::le(&eps, &one),
            f_n_l1: hp::to_decimal(&lhs, 17),
            bound_rhs: hp::to_decimal(&rhs, 17),
            f_le_one: hp::le(&lhs, &one),
            pass: hp::le(&lhs, &rhs) && hp::le(&lhs, &one),
        })
    }

    /// Iterates the truncated operator `b_n` times from `e_0` and compares with the
    /// recursion for `T^{b_n} e_0`.
    pub fn closure_check(&self, n: u64) -> Result<ClosureRecord> {
        let b = self.b(n);
        let (x, precision) = self.iterate_from_e0(b)?;
        let expected = self.orbit_vector(b)?;
        let p = self.precision();
        let mut diff = HpVector::new();
        for (&i, v) in x.iter() {
            add_to(&mut diff, i, v, p);
        }
        for (&i, v) in expected.iter() {
            add_to(&mut diff, i, &v.neg(), p);
        }
        let err = hp::l2(diff.values(), p);
        let scale = hp::l2(expected.values(), p);
        let relative = hp::to_f64(&err.div(&scale, p, RM));
        // The relation itself: T^{b_n} e_0 − P_n(T) e_0 must be e_{b_n}.
        let mut residual = (*expected).clone();
        let pn = self.poly_apply(&*self.polynomial(n)?)?;
        for (&i, v) in &pn {
            add_to(&mut residual, i, &v.neg(), p);
        }
        add_to(&mut residual, b as usize, &hp::one(p).neg(), p);
        let relation_defect = hp::to_f64(&hp::l2(residual.values(), p));
        Ok(ClosureRecord {
            n,
            b_n: b,
            iteration_precision: precision,
            relative_error: relative,
            relation_defect,
            pass: relative <= 1e-8 && relation_defect <= 1e-30,
        })
    }

    /// `T^steps e_0` by repeated application of the truncated columns, and the
    /// precision used.
    ///
    /// The iteration runs with enough extra bits to absorb the cancellation
    /// between `W(b_{n-1}, b_n - 1)`-sized intermediate terms.
    pub fn iterate_from_e0(&self, steps: u64) -> Result<(HpVector, usize)> {
        let mut extra = 0usize;
        for n in 1..=self.segment(steps).max(1) {
            let w = self.weight_product(n, self.b(n) - 1)?;
            extra = extra.max(hp::log2_abs(&w).ceil().max(0.0) as usize);
        }
        let precision = self.precision() + extra + 64;
        let fine = Construction::with_sequence(
            self.params.clone().with_precision(precision),
            AdmissibleSequence::new(&self.params)?,
        )
        .with_orbit_cap(self.orbit_cap);
        let dim = (steps as usize + 1).max(self.b(1) as usize + 1);
        let columns = fine.hp_columns(dim)?;
        let mut x = HpVector::new();
        x.insert(0, hp::one(precision));
        for _ in 0..steps {
            let mut y = HpVector::new();
            for (&j, xj) in &x {
                for (r, v) in &columns[j] {
                    add_to(&mut y, *r, &xj.mul(v, precision, RM), precision);
                }
            }
            y.retain(|_, v| !v.is_zero());
            x = y;
        }
        Ok((x, precision))
    }

    /// Operator on high-precision vectors for the truncation `dim`.
    pub fn hp_operator(&self, dim: usize) -> Result<HpOperator> {
        Ok(HpOperator { dim, precision: self.precision(), columns: self.hp_columns(dim)? })
    }
}

/// The truncated operator with high-precision column entries.
#[derive(Debug, Clone)]
pub struct HpOperator {
    dim: usize,
    precision: usize,
    columns: Vec<Vec<(usize, BigFloat)>>,
}

impl HpOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Image of `x`; rows past the truncation are discarded.
    pub fn apply(&self, x: &HpVector) -> HpVector {
        let p = self.precision;
        let mut y = HpVector::new();
        for (&j, xj) in x {
            for (r, v) in &self.columns[j] {
                if *r < self.dim {
                    add_to(&mut y, *r, &xj.mul(v, p, RM), p);
                }
            }
        }
        y.retain(|_, v| !v.is_zero());
        y
    }
}

pub(crate) fn add_to(acc: &mut HpVector, i: usize, x: &BigFloat, p: usize) {
    match acc.get_mut(&i) {
        Some(v) => *v = v.add(x, p, RM),
        None => {
            acc.insert(i, x.clone());
        }
    }
}

pub(crate) fn axpy(acc: &mut HpVector, c: &BigFloat, v: &HpVector, p: usize) {
    for (&i, x) in v {
        add_to(acc, i, &c.mul(x, p, RM), p);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FBoundRecord {
    pub n: u64,
    pub b_n: u64,
    pub eps_n: String,
    pub eps_le_one: bool,
    pub f_n_l1: String,
    pub bound_rhs: String,
    pub f_le_one: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureRecord {
    pub n: u64,
    pub b_n: u64,
    pub iteration_precision: usize,
    pub relative_error: f64,
    pub relation_defect: f64,
    pub pass: bool,
}

/// Everything `verify-construction` certifies for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionCertificate {
    pub p: u32,
    pub scheme: IndexScheme,
    pub c: f64,
    pub precision: usize,
    pub controls: Vec<u64>,
    pub polynomials: Vec<Polynomial>,
    pub controlled: bool,
    pub records: Vec<FBoundRecord>,
    pub closure: Vec<ClosureRecord>,
    pub precision_stable: bool,
    pub pass: bool,
}

/// Control derivation, `ε_n`/`f_n` bounds for `1 <= n <= max_n`, verdict
/// stability under doubled precision, and closure for `b_n <= closure_cap`.
pub fn verify_construction(
    params: &ConstructionParams,
    max_n: u64,
    closure_cap: u64,
) -> Result<ConstructionCertificate> {
    params.validate()?;
    let controls = derive_control_sequence(params, max_n)?;
    let coarse = Construction::new(params.clone())?;
    let fine = Construction::new(params.clone().with_precision(2 * params.precision))?;
    let polynomials: Vec<Polynomial> =
        (0..=max_n).map(|n| coarse.polynomial(n).map(|p| (*p).clone())).collect::<Result<_>>()?;
    let cap_q = |c: u64| num_rational::BigRational::from_integer(c.into());
    let controlled = polynomials
        .iter()
        .zip(&controls)
        .all(|(p, &c)| p.degree_signed() < c as i64 && p.l1_norm() <= cap_q(c));
    let mut records = Vec::new();
    let mut stable = true;
    for n in 1..=max_n {
        let r = coarse.check_f_bound(n)?;
        let r2 = fine.check_f_bound(n)?;
        stable &= (r.pass, r.eps_le_one, r.f_le_one) == (r2.pass, r2.eps_le_one, r2.f_le_one);
        records.push(r);
    }
    let mut closure = Vec::new();
    for n in 1..=max_n {
        if coarse.b(n) <= closure_cap {
            closure.push(coarse.closure_check(n)?);
        }
    }
    let pass = controlled
        && stable
        && records.iter().all(|r| r.pass && r.eps_le_one)
        && closure.iter().all(|c| c.pass);
    Ok(ConstructionCertificate {
        p: params.p,
        scheme: params.scheme,
        c: params.constant_c(),
        precision: params.precision,
        controls,
        polynomials,
        controlled,
        records,
        closure,
        precision_stable: stable,
        pass,
    })
}

/// `(ε_n, f_n)` for a parameter set.
pub fn epsilon_f(params: &ConstructionParams, n: u64) -> Result<(f64, Vector)> {
    Construction::new(params.clone())?.epsilon_f(n)
}

/// Coordinates of `T^i e_0` for a parameter set.
pub fn orbit_vector_coords(params: &ConstructionParams, i: u64) -> Result<Vector> {
    Construction::new(params.clone())?.orbit_vector_coords(i)
}

/// The perturbed shift truncated to `dim` coordinates.
pub fn build_operator(params: &ConstructionParams, dim: usize) -> Result<OperatorSpec> {
    Construction::new(params.clone())?.build_operator(dim)
}

/// The bound record for `f_n`.
pub fn check_f_bound(params: &ConstructionParams, n: u64) -> Result<FBoundRecord> {
    Construction::new(params.clone())?.check_f_bound(n)
}
