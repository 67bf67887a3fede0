use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::space::{format_rational, parse_rational};

/// Polynomial with exact rational coefficients, stored sparsely by degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial {
    terms: BTreeMap<usize, BigRational>,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(0, c)
    }

    /// `c·X^d`.
    pub fn monomial(d: usize, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(d, c);
        }
        Self { terms }
    }

    /// `X^d`.
    pub fn x_pow(d: usize) -> Self {
        Self::monomial(d, BigRational::one())
    }

    /// Coefficients in increasing degree.
    pub fn from_coeffs<I: IntoIterator<Item = BigRational>>(coeffs: I) -> Self {
        let terms = coeffs.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        Self { terms }
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| BigRational::from_integer(c.into())))
    }

    pub fn from_terms<I: IntoIterator<Item = (usize, BigRational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (d, c) in terms {
            p.add_term(d, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    /// Degree with the `-1` sentinel for zero.
    pub fn degree_signed(&self) -> i64 {
        self.degree().map_or(-1, |d| d as i64)
    }

    /// Sum of the absolute values of the coefficients.
    pub fn l1_norm(&self) -> BigRational {
        self.terms.values().fold(BigRational::zero(), |acc, c| acc + c.abs())
    }

    /// Leading coefficient; zero for the zero polynomial.
    pub fn leading_coefficient(&self) -> BigRational {
        self.terms.values().next_back().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeff(&self, d: usize) -> BigRational {
        self.terms.get(&d).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Nonzero terms in increasing degree.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.terms.iter().map(|(&d, c)| (d, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Dense coefficients up to the degree.
    pub fn coefficients(&self) -> Vec<BigRational> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => (0..=d).map(|i| self.coeff(i)).collect(),
        }
    }

    fn add_term(&mut self, d: usize, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(d).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&d);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(&d, x)| (d, x * c)).collect() }
    }

    /// `X^k · self`.
    pub fn shift(&self, k: usize) -> Self {
        Self { terms: self.terms.iter().map(|(&d, x)| (d + k, x.clone())).collect() }
    }

    /// Largest integer bound on numerators and denominators, i.e. the height of the coefficients.
    pub fn coefficient_height(&self) -> BigInt {
        self.terms
            .values()
            .map(|c| c.numer().abs().max(c.denom().clone()))
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (&d, c) in &rhs.terms {
            out.add_term(d, c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (&d, c) in &rhs.terms {
            out.add_term(d, &-c);
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { terms: self.terms.iter().map(|(&d, c)| (d, -c)).collect() }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (&i, a) in &self.terms {
            for (&j, b) in &rhs.terms {
                out.add_term(i + j, &(a * b));
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (&d, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let coeff = format_rational(&abs);
            match d {
                0 => write!(f, "{coeff}")?,
                _ if abs.is_one() => {}
                _ => write!(f, "{coeff}*")?,
            }
            match d {
                0 => {}
                1 => write!(f, "X")?,
                _ => write!(f, "X^{d}")?,
            }
        }
        Ok(())
    }
}

/// Serialized as the dense coefficient list of `"num/den"` strings.
impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs: Vec<String> = self.coefficients().iter().map(format_rational).collect();
        coeffs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(deserializer)?;
        let mut coeffs = Vec::with_capacity(raw.len());
        for s in raw {
            coeffs.push(parse_rational(&s).ok_or_else(|| de::Error::custom(format!("invalid rational {s:?}")))?);
        }
        Ok(Polynomial::from_coeffs(coeffs))
    }
}

/// `P·Q`, the product on `K[T]e_0`.
pub fn model_product(p: &Polynomial, q: &Polynomial) -> Polynomial {
    p * q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_of_zero() {
        let z = Polynomial::from_integers(&[0, 0, 0]);
        assert!(z.is_zero());
        assert_eq!(z.degree_signed(), -1);
        assert_eq!(z.l1_norm(), BigRational::zero());
    }

    #[test]
    fn norms_and_leading_coefficient() {
        let p = Polynomial::from_coeffs([rational(1, 1), rational(-1, 2), rational(0, 1), rational(3, 4)]);
        assert_eq!(p.degree(), Some(3));
        assert_eq!(p.l1_norm(), rational(9, 4));
        assert_eq!(p.leading_coefficient(), rational(3, 4));
        assert_eq!(p.to_string(), "1 - 1/2*X + 3/4*X^3");
    }

    #[test]
    fn products() {
        let x = Polynomial::x_pow(1);
        assert_eq!(model_product(&x, &x), Polynomial::x_pow(2));
        let q = Polynomial::from_integers(&[3, 0, -2]);
        assert_eq!(model_product(&Polynomial::one(), &q), q);
        let a = Polynomial::from_integers(&[1, 1]);
        let b = Polynomial::from_integers(&[-1, 1]);
        assert_eq!(model_product(&a, &b), Polynomial::from_integers(&[-1, 0, 1]));
    }

    #[test]
    fn serde_round_trip() {
        let p = Polynomial::from_coeffs([rational(1, 1), rational(1, 2)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["1","1/2"]"#);
        assert_eq!(serde_json::from_str::<Polynomial>(&s).unwrap(), p);
    }
}
