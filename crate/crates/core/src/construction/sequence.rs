use std::sync::{Arc, OnceLock};

use super::enumeration::{ClassicSequence, SEnumeration};
use super::params::{AdmissibleSource, ConstructionParams, IndexScheme};
use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// `n ↦ P_n` for one construction instance, with `P_0 = 0`.
#[derive(Debug)]
pub struct AdmissibleSequence {
    p: u32,
    kind: Kind,
}

#[derive(Debug)]
enum Kind {
    Classic(ClassicSequence),
    Triangular(Arc<SEnumeration>),
    Explicit(Vec<Polynomial>),
    ScriptedQ(Vec<Vec<Polynomial>>),
}

impl AdmissibleSequence {
    pub fn new(params: &ConstructionParams) -> Result<Self> {
        params.validate()?;
        let kind = match &params.source {
            AdmissibleSource::Classic => Kind::Classic(ClassicSequence::new(params)),
            AdmissibleSource::Triangular => Kind::Triangular(Arc::new(SEnumeration::new(params))),
            AdmissibleSource::Explicit(ps) => Kind::Explicit(ps.clone()),
            AdmissibleSource::ScriptedQ(qs) => Kind::ScriptedQ(qs.clone()),
        };
        Ok(Self { p: params.p, kind })
    }

    /// Shares one tuple enumeration across several `p`.
    pub fn from_enumeration(p: u32, s: Arc<SEnumeration>) -> Self {
        Self { p, kind: Kind::Triangular(s) }
    }

    pub fn get(&self, n: u64) -> Result<Polynomial> {
        if n == 0 {
            return Ok(Polynomial::zero());
        }
        let k = self.p as usize - 2;
        match &self.kind {
            Kind::Classic(c) => c.get(n),
            Kind::Triangular(s) => s.q_component(n, k),
            Kind::Explicit(ps) => Ok(ps.get(n as usize).cloned().unwrap_or_default()),
            Kind::ScriptedQ(qs) => {
                Ok(qs.get(n as usize).and_then(|q| q.get(k)).cloned().unwrap_or_default())
            }
        }
    }

    /// An index `n` with `P_n = target`, or `None` if the source is finite and lacks it.
    pub fn locate(&self, target: &Polynomial) -> Result<Option<u64>> {
        if target.is_zero() {
            return Ok(Some(0));
        }
        match &self.kind {
            Kind::Classic(c) => c.locate(target, 1 << 16),
            Kind::Triangular(s) => Ok(Some(s.locate_polynomial(target, self.p as usize - 2)?.q_index)),
            Kind::Explicit(ps) => Ok(ps.iter().position(|p| p == target).map(|n| n as u64)),
            Kind::ScriptedQ(qs) => Ok(qs
                .iter()
                .position(|q| q.get(self.p as usize - 2) == Some(target))
                .map(|n| n as u64)),
        }
    }
}

pub(crate) fn shared_enumeration() -> Arc<SEnumeration> {
    static SHARED: OnceLock<Arc<SEnumeration>> = OnceLock::new();
    SHARED
        .get_or_init(|| {
            let params = ConstructionParams::new(2, IndexScheme::Pow5, AdmissibleSource::Triangular);
            Arc::new(SEnumeration::new(&params))
        })
        .clone()
}

/// `P^p_n = Q_n(p - 2)` with the default derived caps.
pub fn admissible_for_p(p: u32, n: u64) -> Result<Polynomial> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("p = {p} but p >= 2 is required")));
    }
    shared_enumeration().q_component(n, p as usize - 2)
}

/// `P^p_j = 0` for every `0 <= j <= 2p`, checked exactly.
pub fn verify_claim(p: u32) -> Result<bool> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("p = {p} but p >= 2 is required")));
    }
    for j in 0..=2 * p as u64 {
        if !admissible_for_p(p, j)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}
