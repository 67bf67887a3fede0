use serde::{Deserialize, Serialize};

use super::polynomial::Polynomial;
use super::hp::DEFAULT_PRECISION;
use crate::error::{Error, Result};

/// Constant `c` in the exponential factor of the `f_n` bound.
pub const DEFAULT_C: f64 = 0.287_682_072_451_780_9; // ln(4/3)

/// Largest control value produced; beyond it every practical polynomial fits.
pub const CONTROL_SATURATION: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexScheme {
    /// `b_0 = 1`, `b_n = (2p+1)^n`.
    Pow2p1,
    /// `b_0 = 0`, `b_n = 5^n`.
    Pow5,
}

impl std::str::FromStr for IndexScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pow2p1" => Ok(IndexScheme::Pow2p1),
            "pow5" => Ok(IndexScheme::Pow5),
            other => Err(Error::InvalidParameter(format!("unknown index scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for IndexScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IndexScheme::Pow2p1 => "pow2p1",
            IndexScheme::Pow5 => "pow5",
        })
    }
}

impl IndexScheme {
    /// Offset `m` of the functionals: the base window is `[0, b_m)`.
    ///
    /// For `pow5` this is the least `m` with `b_{m-1} < 2p < b_m`.
    pub fn offset(self, p: u32) -> u64 {
        match self {
            IndexScheme::Pow2p1 => 1,
            IndexScheme::Pow5 => {
                let mut m = 1;
                while index_b(m, self, p) <= 2 * p as u64 {
                    m += 1;
                }
                m
            }
        }
    }
}

/// `w_n = 4(1 - 1/(2√n))`, in `[2, 4)` for `n >= 1`.
pub fn weight(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("weights are indexed from 1".into()));
    }
    Ok(4.0 * (1.0 - 0.5 / (n as f64).sqrt()))
}

/// `b_n` for the scheme; saturates at `u64::MAX`.
pub fn index_b(n: u64, scheme: IndexScheme, p: u32) -> u64 {
    let (base, b0) = match scheme {
        IndexScheme::Pow2p1 => (2 * p as u64 + 1, 1),
        IndexScheme::Pow5 => (5, 0),
    };
    if n == 0 {
        return b0;
    }
    u32::try_from(n).ok().and_then(|n| base.checked_pow(n)).unwrap_or(u64::MAX)
}

/// Largest `n` with `b_n` representable.
pub fn max_index(scheme: IndexScheme, p: u32) -> u64 {
    let mut n = 0;
    while index_b(n + 1, scheme, p) != u64::MAX {
        n += 1;
    }
    n
}

fn default_c() -> f64 {
    DEFAULT_C
}

fn default_precision() -> usize {
    DEFAULT_PRECISION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    /// Largest caps keeping the `f_n` bound at most 1, with the given constant `c`.
    Derived {
        #[serde(default = "default_c")]
        c: f64,
    },
    /// `c_0, c_1, ...`; the last entry repeats.
    Explicit(Vec<u64>),
}

impl Default for ControlSpec {
    fn default() -> Self {
        ControlSpec::Derived { c: DEFAULT_C }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibleSource {
    /// Enumeration of `Q[X]` placed under the control caps.
    #[default]
    Classic,
    /// `P_n = Q_n(p - 2)` from the triangular enumeration of tuples.
    Triangular,
    /// `P_0, P_1, ...` given directly; zero beyond the list.
    Explicit(Vec<Polynomial>),
    /// `Q_0, Q_1, ...` given directly; `P_n = Q_n(p - 2)`, zero beyond the list.
    ScriptedQ(Vec<Vec<Polynomial>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionParams {
    pub p: u32,
    pub scheme: IndexScheme,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default)]
    pub source: AdmissibleSource,
    /// Working precision in bits for weight products.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl ConstructionParams {
    pub fn new(p: u32, scheme: IndexScheme, source: AdmissibleSource) -> Self {
        Self { p, scheme, control: ControlSpec::default(), source, precision: DEFAULT_PRECISION }
    }

    pub fn with_precision(mut self, precision: usize) -> Self {
        self.precision = precision;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!("p = {} but p >= 2 is required", self.p)));
        }
        if self.precision < 64 {
            return Err(Error::InvalidParameter("precision below 64 bits".into()));
        }
        if let ControlSpec::Derived { c } = self.control {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("constant c = {c} must be positive")));
            }
        }
        if let ControlSpec::Explicit(v) = &self.control {
            if v.is_empty() {
                return Err(Error::InvalidParameter("explicit control sequence is empty".into()));
            }
        }
        if let AdmissibleSource::Explicit(ps) = &self.source {
            if ps.first().is_some_and(|p| !p.is_zero()) {
                return Err(Error::InvalidParameter("an admissible sequence starts with P_0 = 0".into()));
            }
        }
        if let AdmissibleSource::ScriptedQ(qs) = &self.source {
            if qs.first().is_some_and(|q| q.iter().any(|p| !p.is_zero())) {
                return Err(Error::InvalidParameter("a scripted Q_0 must vanish".into()));
            }
        }
        Ok(())
    }

    pub fn b(&self, n: u64) -> u64 {
        index_b(n, self.scheme, self.p)
    }

    pub fn offset(&self) -> u64 {
        self.scheme.offset(self.p)
    }

    pub fn constant_c(&self) -> f64 {
        match self.control {
            ControlSpec::Derived { c } => c,
            ControlSpec::Explicit(_) => DEFAULT_C,
        }
    }

    /// Control value `c_n`, saturating where the scheme's indices overflow.
    pub fn control_value(&self, n: u64) -> Result<u64> {
        match &self.control {
            ControlSpec::Explicit(v) => Ok(v.get(n as usize).or(v.last()).copied().unwrap_or(0)),
            ControlSpec::Derived { c } => {
                if n > max_index(self.scheme, self.p) {
                    return Ok(CONTROL_SATURATION);
                }
                derived_control(*c, self.b(n.saturating_sub(1)), self.b(n), n)
            }
        }
    }
}

/// Largest `u` with `4^u · u · (2^{-b'} + e^{-c√b'}) <= 1`, where `b' = b_{n-1}`,
/// capped at `b_n / 3`.
///
/// This is the bound on `‖f_n‖_1` with `deg = u - 1` and `|·|_1 = u` for both
/// `P_n` and `P_{n-1}`.
fn derived_control(c: f64, b_prev: u64, b_n: u64, n: u64) -> Result<u64> {
    if n == 0 {
        return Ok(0);
    }
    if b_n <= b_prev {
        return Err(Error::SchemeInconsistent(n));
    }
    let bp = b_prev as f64;
    let (x, y) = (-bp * std::f64::consts::LN_2, -c * bp.sqrt());
    let ln_s = x.max(y) + (-(x - y).abs()).exp().ln_1p();
    let fits = |u: u64| -> bool {
        u == 0 || (u as f64) * 4f64.ln() + (u as f64).ln() + ln_s <= 0.0
    };
    let cap = (b_n / 3).min(CONTROL_SATURATION);
    if fits(cap) {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0u64, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `u_0, ..., u_n_max`. Zero entries force the corresponding `P_n` to vanish.
pub fn derive_control_sequence(params: &ConstructionParams, n_max: u64) -> Result<Vec<u64>> {
    params.validate()?;
    let c = match params.control {
        ControlSpec::Derived { c } => c,
        ControlSpec::Explicit(_) => {
            return (0..=n_max).map(|n| params.control_value(n)).collect();
        }
    };
    let top = max_index(params.scheme, params.p);
    if n_max > top {
        return Err(Error::SchemeInconsistent(top + 1));
    }
    (0..=n_max).map(|n| derived_control(c, params.b(n.saturating_sub(1)), params.b(n), n)).collect()
}

/// Whether `deg P_n < c_n` and `|P_n|_1 <= c_n` for every `n <= upto`.
pub fn controlled_by<F>(seq: F, controls: &[u64], upto: u64) -> Result<bool>
where
    F: Fn(u64) -> Result<Polynomial>,
{
    for n in 0..=upto {
        let c = *controls
            .get(n as usize)
            .ok_or_else(|| Error::InvalidParameter(format!("no control value for n = {n}")))?;
        let p = seq(n)?;
        let cr = num_rational::BigRational::from_integer(c.into());
        if p.degree_signed() >= c as i64 || p.l1_norm() > cr {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        assert_eq!(weight(1).unwrap(), 2.0);
        assert_eq!(weight(4).unwrap(), 3.0);
        assert!((weight(1_000_000).unwrap() - 3.998).abs() < 1e-3);
        assert!(weight(0).is_err());
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_b(1, IndexScheme::Pow2p1, 2), 5);
        assert_eq!(index_b(0, IndexScheme::Pow2p1, 2), 1);
        assert_eq!(index_b(0, IndexScheme::Pow5, 7), 0);
        assert_eq!(index_b(3, IndexScheme::Pow5, 2), 125);
        assert_eq!(index_b(40, IndexScheme::Pow5, 2), u64::MAX);
    }

    #[test]
    fn offsets() {
        assert_eq!(IndexScheme::Pow5.offset(2), 1);
        assert_eq!(IndexScheme::Pow5.offset(3), 2);
        assert_eq!(IndexScheme::Pow5.offset(13), 3);
        assert_eq!(IndexScheme::Pow2p1.offset(9), 1);
    }

    #[test]
    fn explicit_controls_repeat_their_tail() {
        let mut params = ConstructionParams::new(2, IndexScheme::Pow5, AdmissibleSource::Classic);
        params.control = ControlSpec::Explicit(vec![0, 1, 5]);
        assert_eq!(derive_control_sequence(&params, 4).unwrap(), vec![0, 1, 5, 5, 5]);
    }

    #[test]
    fn controlled_by_boundaries() {
        let zero = |_n: u64| Ok(Polynomial::zero());
        assert!(controlled_by(zero, &[1, 1, 1], 2).unwrap());
        let cubic = |n: u64| Ok(if n == 1 { Polynomial::x_pow(3) } else { Polynomial::zero() });
        assert!(!controlled_by(cubic, &[0, 3], 1).unwrap());
        assert!(controlled_by(cubic, &[0, 4], 1).unwrap());
    }

    #[test]
    fn params_json() {
        let params = ConstructionParams::new(3, IndexScheme::Pow5, AdmissibleSource::Triangular);
        let s = serde_json::to_string(&params).unwrap();
        assert_eq!(
            s,
            r#"{"p":3,"scheme":"pow5","control":{"derived":{"c":0.2876820724517809}},"source":"triangular","precision":256}"#
        );
        let back: ConstructionParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, params);
        let minimal: ConstructionParams = serde_json::from_str(r#"{"p":2,"scheme":"pow2p1"}"#).unwrap();
        assert_eq!(minimal.source, AdmissibleSource::Classic);
        assert!(serde_json::from_str::<ConstructionParams>(r#"{"p":2,"scheme":"pow7"}"#).is_err());
    }
}
