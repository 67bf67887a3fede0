//! Surjective enumerations of `Q[X]^c` and the tuple sequences built on them.
//!
//! Batch `h` holds every `c`-tuple of polynomials of degree `< h` whose
//! coefficients are reduced fractions `a/d` with `|a| <= h`, `1 <= d <= h`.
//! Tuples are listed batch after batch in mixed-radix order, so every tuple
//! has a finite index (repeats across batches are allowed).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::params::{index_b, ConstructionParams, ControlSpec, IndexScheme};
use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// Reduced fractions of height at most `h`, ordered by height, then denominator,
/// then numerator size, positive before negative. Grids of increasing `h` extend each other.
pub fn rational_grid(h: u64) -> Vec<BigRational> {
    let h = h as i64;
    let mut keyed: Vec<((i64, i64, i64, bool), BigRational)> = Vec::new();
    keyed.push(((1, 1, 0, false), BigRational::zero()));
    for d in 1..=h {
        for a in 1..=h {
            if a.gcd(&d) != 1 {
                continue;
            }
            for neg in [false, true] {
                let num = if neg { -a } else { a };
                let q = BigRational::new(BigInt::from(num), BigInt::from(d));
                keyed.push(((a.max(d), d, a, neg), q));
            }
        }
    }
    keyed.sort_by_key(|x| x.0);
    keyed.into_iter().map(|(_, q)| q).collect()
}

/// Enumeration of `c`-tuples of polynomials.
#[derive(Debug)]
pub struct TupleEnumeration {
    components: usize,
    grids: RwLock<Vec<Arc<Vec<BigRational>>>>,
}

impl TupleEnumeration {
    pub fn new(components: usize) -> Self {
        assert!(components >= 1, "at least one component");
        Self { components, grids: RwLock::new(Vec::new()) }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    fn grid(&self, h: u64) -> Arc<Vec<BigRational>> {
        let idx = (h - 1) as usize;
        if let Some(g) = self.grids.read().expect("grid lock").get(idx) {
            return g.clone();
        }
        let mut grids = self.grids.write().expect("grid lock");
        while grids.len() <= idx {
            let next = grids.len() as u64 + 1;
            grids.push(Arc::new(rational_grid(next)));
        }
        grids[idx].clone()
    }

    /// Number of tuples in batch `h`, or `None` beyond `u128`.
    pub fn batch_len(&self, h: u64) -> Option<u128> {
        let base = self.grid(h).len() as u128;
        let digits = u32::try_from(h as usize * self.components).ok()?;
        base.checked_pow(digits)
    }

    /// Batch height and offset inside the batch of index `t`.
    pub fn locate_batch(&self, t: u128) -> Result<(u64, u128)> {
        let mut rest = t;
        let mut h = 1;
        loop {
            let len = self.batch_len(h).ok_or(Error::EnumerationOverflow)?;
            if rest < len {
                return Ok((h, rest));
            }
            rest -= len;
            h += 1;
        }
    }

    pub fn tuple_at(&self, t: u128) -> Result<Vec<Polynomial>> {
        let (h, mut rest) = self.locate_batch(t)?;
        let grid = self.grid(h);
        let base = grid.len() as u128;
        let mut out = Vec::with_capacity(self.components);
        for _ in 0..self.components {
            let mut coeffs = Vec::with_capacity(h as usize);
            for _ in 0..h {
                coeffs.push(grid[(rest % base) as usize].clone());
                rest /= base;
            }
            out.push(Polynomial::from_coeffs(coeffs));
        }
        Ok(out)
    }

    /// Smallest batch containing `tuple`.
    pub fn height_of(tuple: &[Polynomial]) -> Result<u64> {
        let mut h: u64 = 1;
        for p in tuple {
            h = h.max(p.degree().map_or(0, |d| d as u64 + 1));
            let ht = p.coefficient_height().to_u64().ok_or(Error::EnumerationOverflow)?;
            h = h.max(ht);
        }
        Ok(h)
    }

    /// An index at which `tuple` occurs.
    pub fn index_of(&self, tuple: &[Polynomial]) -> Result<u128> {
        if tuple.len() != self.components {
            return Err(Error::DimensionMismatch { expected: self.components, found: tuple.len() });
        }
        let h = Self::height_of(tuple)?;
        let mut offset: u128 = 0;
        for g in 1..h {
            offset = offset
                .checked_add(self.batch_len(g).ok_or(Error::EnumerationOverflow)?)
                .ok_or(Error::EnumerationOverflow)?;
        }
        let grid = self.grid(h);
        let position: HashMap<&BigRational, u128> =
            grid.iter().enumerate().map(|(i, q)| (q, i as u128)).collect();
        let base = grid.len() as u128;
        let mut digits = Vec::with_capacity(h as usize * self.components);
        for p in tuple {
            for d in 0..h as usize {
                digits.push(position[&p.coeff(d)]);
            }
        }
        let mut within: u128 = 0;
        for &digit in digits.iter().rev() {
            within = within
                .checked_mul(base)
                .and_then(|x| x.checked_add(digit))
                .ok_or(Error::EnumerationOverflow)?;
        }
        offset.checked_add(within).ok_or(Error::EnumerationOverflow)
    }
}

/// Longest placement walk before giving up on caps that never grow.
const MAX_WALK: u64 = 1 << 22;

/// Maps a `Q_n` index to the `(i, r)` of `S^i_r`.
///
/// For `n` in `[j(j+1)/2, (j+1)(j+2)/2)`: `i = n - j(j+1)/2`, `r = j(j+3)/2 - n`.
pub fn q_coordinates(n: u64) -> (u64, u64) {
    let mut j = (((8.0 * n as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while j * (j + 1) / 2 > n {
        j -= 1;
    }
    while (j + 1) * (j + 2) / 2 <= n {
        j += 1;
    }
    let i = n - j * (j + 1) / 2;
    (i, j - i)
}

/// Inverse of [`q_coordinates`].
pub fn q_index(i: u64, r: u64) -> u64 {
    let j = i + r;
    j * (j + 1) / 2 + i
}

/// The sequences `S^i_r`, each a tuple of `i + 1` polynomials.
///
/// Candidates for `S^i` alternate between general tuples (even positions) and
/// repetition blocks `(k·P, ..., k·P)` of length `k = i + 1` (odd positions).
/// From `r = b_{i+1} + 1` on, each `r` emits the next candidate if every
/// component fits under the caps `deg < u_r`, `|·|_1 <= u_r`, and zero otherwise.
type ComponentMemo = RwLock<HashMap<(u64, u64), Arc<Vec<Polynomial>>>>;

pub struct SEnumeration {
    controls: ConstructionParams,
    monotone_caps: bool,
    tuples: RwLock<HashMap<usize, Arc<TupleEnumeration>>>,
    single: Arc<TupleEnumeration>,
    memo: ComponentMemo,
}

impl std::fmt::Debug for SEnumeration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SEnumeration").field("controls", &self.controls.control).finish()
    }
}

/// Where a polynomial sits inside the enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub i: u64,
    pub r: u64,
    pub q_index: u64,
}

impl SEnumeration {
    /// Caps come from `controls` (its `p` and source are ignored; indices are `5^n`).
    pub fn new(controls: &ConstructionParams) -> Self {
        let mut controls = controls.clone();
        controls.scheme = IndexScheme::Pow5;
        // Jumping ahead is only sound when the caps never shrink.
        let monotone_caps = match &controls.control {
            ControlSpec::Derived { .. } => true,
            ControlSpec::Explicit(v) => v.windows(2).all(|w| w[0] <= w[1]),
        };
        Self {
            controls,
            monotone_caps,
            tuples: RwLock::new(HashMap::new()),
            single: Arc::new(TupleEnumeration::new(1)),
            memo: RwLock::new(HashMap::new()),
        }
    }

    fn tuples(&self, components: usize) -> Arc<TupleEnumeration> {
        if let Some(t) = self.tuples.read().expect("lock").get(&components) {
            return t.clone();
        }
        self.tuples
            .write()
            .expect("lock")
            .entry(components)
            .or_insert_with(|| Arc::new(TupleEnumeration::new(components)))
            .clone()
    }

    pub fn cap(&self, r: u64) -> Result<u64> {
        self.controls.control_value(r)
    }

    /// First `r` at which `S^i_r` may be nonzero.
    pub fn first_active(i: u64) -> u64 {
        index_b(i + 1, IndexScheme::Pow5, 2).saturating_add(1)
    }

    pub fn candidate(&self, i: u64, t: u128) -> Result<Vec<Polynomial>> {
        let k = i as usize + 1;
        if t % 2 == 0 {
            self.tuples(k).tuple_at(t / 2)
        } else {
            let p = self.single.tuple_at((t - 1) / 2)?.remove(0);
            let lambda = BigRational::from_integer(BigInt::from(k));
            Ok(vec![p.scale(&lambda); k])
        }
    }

    /// Upper bound on `max(deg + 1, |·|_1)` over all candidates up to `t`.
    fn requirement_bound(&self, i: u64, t: u128) -> Result<u64> {
        let k = i + 1;
        let (h_tuple, _) = self.tuples(k as usize).locate_batch(t / 2)?;
        let (h_single, _) = self.single.locate_batch(t / 2)?;
        let h = h_tuple.max(h_single);
        Ok(k.saturating_mul(h).saturating_mul(h))
    }

    fn fits(tuple: &[Polynomial], cap: u64) -> bool {
        let cap_q = BigRational::from_integer(BigInt::from(cap));
        tuple.iter().all(|p| p.degree_signed() < cap as i64 && p.l1_norm() <= cap_q)
    }

    /// Runs the placement schedule for `S^i` until `stop` returns a value.
    ///
    /// `stop(r, pointer, cap)` sees the state before step `r`; once the caps
    /// dominate every candidate up to `horizon(r, pointer)` the schedule is
    /// known to emit one candidate per step, and `stop` may jump ahead.
    fn walk<T>(
        &self,
        i: u64,
        mut stop: impl FnMut(u64, u128, u64, &dyn Fn(u128) -> Result<bool>) -> Result<Option<T>>,
    ) -> Result<T> {
        let mut r = Self::first_active(i);
        let mut pointer: u128 = 0;
        let mut current: Option<(u128, Vec<Polynomial>)> = None;
        loop {
            if r - Self::first_active(i) > MAX_WALK {
                return Err(Error::EnumerationOverflow);
            }
            let cap = self.cap(r)?;
            let monotone = self.monotone_caps;
            let dominates =
                |t: u128| -> Result<bool> { Ok(monotone && self.requirement_bound(i, t)? <= cap) };
            if let Some(v) = stop(r, pointer, cap, &dominates)? {
                return Ok(v);
            }
            if current.as_ref().map(|c| c.0) != Some(pointer) {
                current = Some((pointer, self.candidate(i, pointer)?));
            }
            if Self::fits(&current.as_ref().expect("candidate").1, cap) {
                pointer += 1;
            }
            r += 1;
        }
    }

    /// `S^i_r`, a tuple of length `i + 1`.
    pub fn s(&self, i: u64, r: u64) -> Result<Arc<Vec<Polynomial>>> {
        if let Some(v) = self.memo.read().expect("memo").get(&(i, r)) {
            return Ok(v.clone());
        }
        let k = i as usize + 1;
        let value = if r < Self::first_active(i) {
            vec![Polynomial::zero(); k]
        } else {
            self.walk(i, |step, pointer, cap, dominates| {
                let ahead = (r - step) as u128;
                if dominates(pointer + ahead)? {
                    return Ok(Some(self.candidate(i, pointer + ahead)?));
                }
                if step == r {
                    let cand = self.candidate(i, pointer)?;
                    return Ok(Some(if Self::fits(&cand, cap) { cand } else { vec![Polynomial::zero(); k] }));
                }
                Ok(None)
            })?
        };
        let value = Arc::new(value);
        self.memo.write().expect("memo").entry((i, r)).or_insert_with(|| value.clone());
        Ok(value)
    }

    /// `Q_n`.
    pub fn q(&self, n: u64) -> Result<Arc<Vec<Polynomial>>> {
        let (i, r) = q_coordinates(n);
        self.s(i, r)
    }

    /// `Q_n(k)`, zero beyond the tuple length.
    pub fn q_component(&self, n: u64, k: usize) -> Result<Polynomial> {
        Ok(self.q(n)?.get(k).cloned().unwrap_or_default())
    }

    /// A step `r` at which `S^i_r` equals candidate `t`.
    pub fn locate_candidate(&self, i: u64, t: u128) -> Result<u64> {
        self.walk(i, |step, pointer, cap, dominates| {
            if dominates(t)? {
                return Ok(Some(step + u64::try_from(t - pointer).map_err(|_| Error::EnumerationOverflow)?));
            }
            if pointer == t && Self::fits(&self.candidate(i, t)?, cap) {
                return Ok(Some(step));
            }
            Ok(None)
        })
    }

    /// Finds `(i, r)` with `S^i_r = (0, ..., 0, P)`, `P` in component `k`, and
    /// the matching `Q` index.
    pub fn locate_polynomial(&self, p: &Polynomial, k: usize) -> Result<Location> {
        let i = k as u64;
        let mut tuple = vec![Polynomial::zero(); k + 1];
        tuple[k] = p.clone();
        let t = 2 * self.tuples(k + 1).index_of(&tuple)?;
        let r = self.locate_candidate(i, t)?;
        Ok(Location { i, r, q_index: q_index(i, r) })
    }

    /// A step at which `S^i_r` is the repetition block `(k·P, ..., k·P)`, `k = i + 1`.
    pub fn locate_repetition(&self, p: &Polynomial, i: u64) -> Result<Location> {
        let t = 2 * self.single.index_of(std::slice::from_ref(p))? + 1;
        let r = self.locate_candidate(i, t)?;
        Ok(Location { i, r, q_index: q_index(i, r) })
    }
}

/// The classic placement: nonzero polynomials from the single-component
/// enumeration, each emitted at the first `n >= 1` whose caps it fits.
pub struct ClassicSequence {
    params: ConstructionParams,
    single: TupleEnumeration,
    memo: RwLock<Vec<(Polynomial, u128)>>,
}

impl std::fmt::Debug for ClassicSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicSequence").field("p", &self.params.p).field("scheme", &self.params.scheme).finish()
    }
}

impl ClassicSequence {
    pub fn new(params: &ConstructionParams) -> Self {
        Self {
            params: params.clone(),
            single: TupleEnumeration::new(1),
            // (P_0, pointer after step 0)
            memo: RwLock::new(vec![(Polynomial::zero(), 1)]),
        }
    }

    fn fits(&self, p: &Polynomial, n: u64) -> Result<bool> {
        let cap = self.params.control_value(n)?;
        let b = self.params.b(n);
        let deg = p.degree_signed();
        Ok(deg < cap as i64
            && p.l1_norm() <= BigRational::from_integer(BigInt::from(cap))
            && 3 * (deg.max(0) as u128) < b as u128
            && (deg + 1) < b as i64)
    }

    fn next_nonzero(&self, mut t: u128) -> Result<(u128, Polynomial)> {
        loop {
            let p = self.single.tuple_at(t)?.remove(0);
            if !p.is_zero() {
                return Ok((t, p));
            }
            t += 1;
        }
    }

    pub fn get(&self, n: u64) -> Result<Polynomial> {
        if let Some((p, _)) = self.memo.read().expect("memo").get(n as usize) {
            return Ok(p.clone());
        }
        let mut memo = self.memo.write().expect("memo");
        while memo.len() <= n as usize {
            let step = memo.len() as u64;
            let pointer = memo.last().expect("P_0").1;
            let (t, cand) = self.next_nonzero(pointer)?;
            if self.fits(&cand, step)? {
                memo.push((cand, t + 1));
            } else {
                memo.push((Polynomial::zero(), t));
            }
        }
        Ok(memo[n as usize].0.clone())
    }

    /// An index `n` with `P_n = target`, searching at most `limit` steps.
    pub fn locate(&self, target: &Polynomial, limit: u64) -> Result<Option<u64>> {
        if target.is_zero() {
            return Ok(Some(0));
        }
        for n in 1..=limit {
            if &self.get(n)? == target {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }
}
