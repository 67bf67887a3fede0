//! The linear forms `Φ_δ` on `𝐊[T]e_0` and the checks behind the
//! non-strong-`h`-supercyclicity criterion.
//!
//! `Φ_δ` is fixed on the basis `T^i e_0`: the Kronecker value on the base
//! window `[0, b_m)`, the linear extension `Φ_δ(P_n(T) T^{i-b_n} e_0)` on
//! `[b_n, 3b_n/2) ∪ [2b_n, 5b_n/2)` for `n >= m`, and 0 elsewhere. All
//! values are exact rationals; weights only enter the summability scalars.

use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{hp, model_product, Construction, ConstructionParams, IndexScheme, Polynomial};
use crate::error::{Error, Result};
use crate::space::format_rational;

/// Largest `R` accepted by [`summability_partial`].
pub const SUMMABILITY_CAP: u64 = 2048;

/// Partial-sum growth over the last 200 indices accepted as decay evidence.
pub const SUMMABILITY_TAIL_THRESHOLD: f64 = 1e-3;

/// `Φ_δ` for one construction, memoising `Φ_δ(T^i e_0)` for a prefix of `i`.
#[derive(Debug)]
pub struct FunctionalTable {
    construction: Arc<Construction>,
    delta: u64,
    offset: u64,
    memo: RwLock<Vec<BigRational>>,
}

impl FunctionalTable {
    pub fn new(params: &ConstructionParams, delta: u64) -> Result<Self> {
        Ok(Self::with_construction(Arc::new(Construction::new(params.clone())?), delta))
    }

    pub fn with_construction(construction: Arc<Construction>, delta: u64) -> Self {
        let offset = construction.params().offset();
        Self { construction, delta, offset, memo: RwLock::new(Vec::new()) }
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    /// The `m` of the base window `[0, b_m)`.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn base_window_end(&self) -> u64 {
        self.construction.b(self.offset)
    }

    pub fn construction(&self) -> &Arc<Construction> {
        &self.construction
    }

    /// The `n >= m` whose window contains `i`, if any.
    fn window(&self, i: u64) -> Option<u64> {
        let mut n = self.offset;
        if self.construction.b(n) > i {
            return None;
        }
        while self.construction.b(n + 1) <= i {
            n += 1;
        }
        let b = self.construction.b(n) as u128;
        let i2 = 2 * i as u128;
        (i2 < 3 * b || (i as u128 >= 2 * b && i2 < 5 * b)).then_some(n)
    }

    fn compute(&self, i: u64, prefix: &[BigRational]) -> Result<BigRational> {
        if i == self.delta {
            return Ok(BigRational::one());
        }
        if i < self.base_window_end() {
            return Ok(BigRational::zero());
        }
        let Some(n) = self.window(i) else {
            return Ok(BigRational::zero());
        };
        let pn = self.construction.polynomial(n)?;
        let shift = i - self.construction.b(n);
        let mut acc = BigRational::zero();
        for (d, c) in pn.terms() {
            // d < b_n, so the index strictly decreases.
            let j = shift + d as u64;
            debug_assert!(j < i);
            acc += c * &prefix[j as usize];
        }
        Ok(acc)
    }

    /// Extends the memo so that it covers `0..=i`.
    pub fn populate(&self, i: u64) -> Result<()> {
        if (i as usize) < self.memo.read().expect("memo").len() {
            return Ok(());
        }
        let mut memo = self.memo.write().expect("memo");
        while memo.len() <= i as usize {
            let next = self.compute(memo.len() as u64, &memo)?;
            memo.push(next);
        }
        Ok(())
    }

    /// `Φ_δ(T^i e_0)`.
    pub fn phi_value(&self, i: u64) -> Result<BigRational> {
        self.populate(i)?;
        Ok(self.memo.read().expect("memo")[i as usize].clone())
    }

    /// `Φ_δ(T^i e_0)` for `i = 0..=imax`.
    pub fn prefix(&self, imax: u64) -> Result<Vec<BigRational>> {
        self.populate(imax)?;
        Ok(self.memo.read().expect("memo")[..=imax as usize].to_vec())
    }

    /// `Φ_δ(P(T) e_0)`.
    pub fn phi_on_polynomial(&self, p: &Polynomial) -> Result<BigRational> {
        let Some(d) = p.degree() else {
            return Ok(BigRational::zero());
        };
        self.populate(d as u64)?;
        let memo = self.memo.read().expect("memo");
        Ok(p.terms().map(|(i, c)| c * &memo[i]).sum())
    }

    /// `(T^{b_k} − P_k(T))(T^{b_l} − P_l(T)) T^{u+v} e_0` as a polynomial.
    pub fn y_polynomial(&self, k: u64, u: u64, l: u64, v: u64) -> Result<Polynomial> {
        let c = &self.construction;
        if k > l {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds l = {l}")));
        }
        if u >= c.b(k + 1) - c.b(k) || v >= c.b(l + 1) - c.b(l) {
            return Err(Error::InvalidParameter(format!(
                "(u, v) = ({u}, {v}) outside the blocks of k = {k}, l = {l}"
            )));
        }
        let left = &Polynomial::x_pow(c.b(k) as usize) - &*c.polynomial(k)?;
        let right = &Polynomial::x_pow(c.b(l) as usize) - &*c.polynomial(l)?;
        Ok(model_product(&model_product(&left, &right), &Polynomial::x_pow((u + v) as usize)))
    }

    /// `Φ_δ(y_{(k,u),(l,v)})`.
    pub fn y_value(&self, k: u64, u: u64, l: u64, v: u64) -> Result<BigRational> {
        self.phi_on_polynomial(&self.y_polynomial(k, u, l, v)?)
    }

    /// Block coordinates `(k, u)` with `r = b_k + u`, or `None` below `b_0`.
    fn block_of(&self, r: u64) -> Option<(u64, u64)> {
        let n = self.construction.segment(r);
        (n > 0).then(|| (n - 1, r - self.construction.b(n - 1)))
    }

    /// `log2 W(b_k, b_k + u)`; zero below `b_0`.
    fn log2_weight(&self, r: u64) -> Result<f64> {
        match self.block_of(r) {
            None | Some((_, 0)) => Ok(0.0),
            Some((k, _)) => Ok(hp::log2_abs(&self.construction.weight_product(k + 1, r)?)),
        }
    }

    /// `|Φ_δ(y)| / (W_r W_q)`, where `e_r · e_q = y / (W_r W_q)`.
    fn product_term(&self, r: u64, q: u64, logw: &[f64]) -> Result<f64> {
        let (r, q) = if r <= q { (r, q) } else { (q, r) };
        let y = match (self.block_of(r), self.block_of(q)) {
            (Some((k, u)), Some((l, v))) => self.y_value(k, u, l, v)?,
            (None, None) => self.phi_value(0)?,
            // e_0 below b_0 is T^0 e_0 itself.
            (None, Some((l, v))) => {
                let c = &self.construction;
                let right = &Polynomial::x_pow(c.b(l) as usize) - &*c.polynomial(l)?;
                self.phi_on_polynomial(&right.shift(v as usize))?
            }
            (Some(_), None) => unreachable!("r <= q"),
        };
        let y = y.abs().to_f64().unwrap_or(f64::INFINITY);
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(y * (-(logw[r as usize] + logw[q as usize])).exp2())
    }

    /// `Σ_{r, q <= R} |Φ_δ(e_r · e_q)|` evaluated at each `R` in `radii`.
    pub fn summability_profile(&self, radii: &[u64]) -> Result<Vec<f64>> {
        let rmax = radii.iter().copied().max().unwrap_or(0);
        if rmax > SUMMABILITY_CAP {
            return Err(Error::CapExceeded { dim: rmax as usize, cap: SUMMABILITY_CAP as usize });
        }
        let logw = (0..=rmax).map(|r| self.log2_weight(r)).collect::<Result<Vec<_>>>()?;
        // y has degree r + q.
        self.populate(2 * rmax + 2)?;
        let rows: Vec<f64> = (0..=rmax)
            .into_par_iter()
            .map(|q| {
                let mut s = 0.0;
                for r in 0..=q {
                    let t = self.product_term(r, q, &logw)?;
                    s += if r == q { t } else { 2.0 * t };
                }
                Ok(s)
            })
            .collect::<Result<_>>()?;
        let mut cumulative = Vec::with_capacity(rows.len());
        let mut acc = 0.0;
        for x in rows {
            acc += x;
            cumulative.push(acc);
        }
        Ok(radii.iter().map(|&r| cumulative[r as usize]).collect())
    }

    pub fn summability_partial(&self, r: u64) -> Result<f64> {
        Ok(self.summability_profile(&[r])?[0])
    }
}

/// `Φ_δ(T^i e_0)` for one parameter set.
pub fn phi_value(params: &ConstructionParams, delta: u64, i: u64) -> Result<BigRational> {
    FunctionalTable::new(params, delta)?.phi_value(i)
}

/// `Φ_δ(T^δ e_0) = 1` and `Φ_δ(T^i e_0) = 0` for `i ≠ δ` in the base window,
/// for every `δ < 2p`.
pub fn phi_kronecker_check(params: &ConstructionParams) -> Result<bool> {
    kronecker_for(&Arc::new(Construction::new(params.clone())?), 2 * params.p as u64)
}

fn kronecker_for(construction: &Arc<Construction>, forms: u64) -> Result<bool> {
    for delta in 0..forms {
        let t = FunctionalTable::with_construction(construction.clone(), delta);
        let end = t.base_window_end().max(forms);
        for (i, v) in t.prefix(end - 1)?.iter().enumerate() {
            let expected = if i as u64 == delta { BigRational::one() } else { BigRational::zero() };
            if *v != expected {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `max_{0<=j<=l}(1 + |P_j|_1)^2 · Π_{j=1}^{l+1} max(1, |P_j|_1)^2`.
pub fn m_l_bound(params: &ConstructionParams, l: u64) -> Result<BigRational> {
    m_l_bound_with(&Construction::new(params.clone())?, l)
}

pub fn m_l_bound_with(c: &Construction, l: u64) -> Result<BigRational> {
    let one = BigRational::one();
    let mut head = one.clone();
    for j in 0..=l {
        let s = &one + c.polynomial(j)?.l1_norm();
        head = head.max(&s * &s);
    }
    let mut tail = one.clone();
    for j in 1..=l + 1 {
        let s = c.polynomial(j)?.l1_norm().max(one.clone());
        tail *= &s * &s;
    }
    Ok(head * tail)
}

/// Tuples `(k, u, l, v)` with `m <= l <= l_max`, `u + v < b_l / 6` and
/// `Φ_δ(y) ≠ 0`.
pub fn vanishing_violations(table: &FunctionalTable, l_max: u64) -> Result<Vec<(u64, u64, u64, u64)>> {
    vanishing_violations_in(table, table.offset(), l_max)
}

/// As [`vanishing_violations`] over `l_min <= l <= l_max`. Below the offset
/// the base window of `Φ_δ` reaches past `b_l`, so violations are expected there.
pub fn vanishing_violations_in(table: &FunctionalTable, l_min: u64, l_max: u64) -> Result<Vec<(u64, u64, u64, u64)>> {
    let c = table.construction();
    let mut bad = Vec::new();
    for l in l_min..=l_max {
        let bl = c.b(l);
        for k in 0..=l {
            let ku = c.b(k + 1) - c.b(k);
            let lv = c.b(l + 1) - bl;
            for u in 0..ku {
                if 6 * u >= bl {
                    break;
                }
                for v in 0..lv {
                    if 6 * (u + v) >= bl {
                        break;
                    }
                    if !table.y_value(k, u, l, v)?.is_zero() {
                        bad.push((k, u, l, v));
                    }
                }
            }
        }
    }
    Ok(bad)
}

/// Spot values of the auxiliary forms `Φ_i + Φ_{h+j}` and `Φ_i + 2Φ_{h+j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiSpot {
    pub i: u64,
    pub j: u64,
    /// `(index, Ψ_{i,j}(T^index e_0), Ψ̃_{i,j}(T^index e_0))`.
    pub values: Vec<(u64, String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HReport {
    pub h: u32,
    pub kronecker_pass: bool,
    /// Largest growth of the partial sums between the last two radii over the `2h` forms.
    pub summability_tail: f64,
    pub summability_pass: bool,
    pub verdict: String,
    pub psi_spots: Vec<PsiSpot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub p: u32,
    pub scheme: IndexScheme,
    pub offset: u64,
    /// `P_j = 0` on the protected prefix.
    pub prefix_pass: bool,
    pub vanishing_pass: bool,
    pub radii: (u64, u64),
    pub reports: Vec<HReport>,
    pub valid: bool,
}

/// Options for [`criterion_report_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionOptions {
    /// Partial sums are compared between these two radii.
    pub radii: (u64, u64),
    /// Vanishing is checked for `m <= l <= vanishing_l_max`.
    pub vanishing_l_max: u64,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self { radii: (600, 800), vanishing_l_max: 3 }
    }
}

/// Last index of the protected prefix: `2p` under `pow5`, `0` under `pow2p1`.
pub fn protected_prefix(params: &ConstructionParams) -> u64 {
    match params.scheme {
        IndexScheme::Pow5 => 2 * params.p as u64,
        IndexScheme::Pow2p1 => 0,
    }
}

pub fn criterion_report(params: &ConstructionParams) -> Result<CriterionReport> {
    criterion_report_with(params, CriterionOptions::default())
}

/// Checks the hypotheses of the criterion for every `h` in `2..=p` at desk scale.
pub fn criterion_report_with(params: &ConstructionParams, opts: CriterionOptions) -> Result<CriterionReport> {
    let c = Arc::new(Construction::new(params.clone())?);
    let mut prefix_pass = true;
    for j in 0..=protected_prefix(params) {
        match c.polynomial(j) {
            Ok(pj) => prefix_pass &= pj.is_zero(),
            Err(Error::NonAmbiguity { .. }) => prefix_pass = false,
            Err(e) => return Err(e),
        }
    }
    let forms = 2 * params.p as u64;
    let tables: Vec<FunctionalTable> =
        (0..forms).map(|d| FunctionalTable::with_construction(c.clone(), d)).collect();

    let (r0, r1) = opts.radii;
    let structural = |t: &FunctionalTable| -> Result<(bool, f64)> {
        let vanish = vanishing_violations(t, opts.vanishing_l_max)?.is_empty();
        let prof = t.summability_profile(&[r0, r1])?;
        Ok((vanish, prof[1] - prof[0]))
    };
    let per_form: Vec<(bool, f64)> = if prefix_pass {
        tables.par_iter().map(structural).collect::<Result<_>>()?
    } else {
        vec![(false, f64::NAN); tables.len()]
    };
    let vanishing_pass = per_form.iter().all(|&(v, _)| v);

    let mut reports = Vec::new();
    for h in 2..=params.p {
        let kronecker_pass = prefix_pass && kronecker_for(&c, 2 * h as u64)?;
        let tail = per_form[..2 * h as usize].iter().map(|&(_, t)| t).fold(0.0, f64::max);
        let summability_pass = prefix_pass && tail.is_finite() && tail < SUMMABILITY_TAIL_THRESHOLD;
        let ok = kronecker_pass && summability_pass && vanishing_pass;
        let verdict = if ok {
            format!("criterion hypotheses verified at desk scale for h = {h}")
        } else {
            format!("instance invalid for h = {h}")
        };
        let psi_spots = if prefix_pass { psi_spots(&tables, h as u64)? } else { Vec::new() };
        reports.push(HReport { h, kronecker_pass, summability_tail: tail, summability_pass, verdict, psi_spots });
    }
    let valid = prefix_pass && vanishing_pass && reports.iter().all(|r| r.kronecker_pass && r.summability_pass);
    Ok(CriterionReport {
        p: params.p,
        scheme: params.scheme,
        offset: params.offset(),
        prefix_pass,
        vanishing_pass,
        radii: opts.radii,
        reports,
        valid,
    })
}

fn psi_spots(tables: &[FunctionalTable], h: u64) -> Result<Vec<PsiSpot>> {
    let two = BigRational::from_integer(BigInt::from(2));
    let mut out = Vec::new();
    for i in 0..h {
        for j in 0..h {
            let a = &tables[i as usize];
            let b = &tables[(h + j) as usize];
            let mut values = Vec::new();
            for idx in 0..2 * h {
                let (x, y) = (a.phi_value(idx)?, b.phi_value(idx)?);
                values.push((idx, format_rational(&(&x + &y)), format_rational(&(&x + &two * &y))));
            }
            out.push(PsiSpot { i, j, values });
        }
    }
    Ok(out)
}

/// `(i, δ, Φ_δ(T^i e_0))` rows for `δ < 2p` and `i <= imax`.
pub fn phi_rows(params: &ConstructionParams, imax: u64) -> Result<Vec<(u64, u64, BigRational)>> {
    let c = Arc::new(Construction::new(params.clone())?);
    let mut rows = Vec::new();
    for delta in 0..2 * params.p as u64 {
        let t = FunctionalTable::with_construction(c.clone(), delta);
        for (i, v) in t.prefix(imax)?.into_iter().enumerate() {
            rows.push((i as u64, delta, v));
        }
    }
    Ok(rows)
}
