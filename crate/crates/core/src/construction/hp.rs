//! High-precision reals for weight products.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

pub use astro_float::BigFloat as Real;

pub const RM: RoundingMode = RoundingMode::ToEven;

/// Default working precision in bits.
pub const DEFAULT_PRECISION: usize = 256;

pub fn consts() -> Consts {
    Consts::new().expect("astro-float constant cache")
}

pub fn zero(p: usize) -> BigFloat {
    BigFloat::from_u64(0, p)
}

pub fn one(p: usize) -> BigFloat {
    BigFloat::from_u64(1, p)
}

pub fn from_u64(x: u64, p: usize) -> BigFloat {
    BigFloat::from_u64(x, p)
}

pub fn from_f64(x: f64, p: usize) -> BigFloat {
    BigFloat::from_f64(x, p)
}

pub fn from_bigint(x: &BigInt, p: usize) -> BigFloat {
    let (sign, digits) = x.to_u64_digits();
    let exact = (digits.len() * 64).max(64);
    let radix = BigFloat::from_u64(1 << 32, 64).mul(&BigFloat::from_u64(1 << 32, 64), 128, RM);
    let mut acc = zero(exact);
    for &d in digits.iter().rev() {
        acc = acc.mul(&radix, exact, RM).add(&BigFloat::from_u64(d, 64), exact, RM);
    }
    let mut out = acc.clone();
    out.set_precision(p, RM).expect("precision");
    if sign == num_bigint::Sign::Minus {
        out.neg()
    } else {
        out
    }
}

pub fn from_rational(x: &BigRational, p: usize) -> BigFloat {
    from_bigint(x.numer(), p).div(&from_bigint(x.denom(), p), p, RM)
}

pub fn is_zero(x: &BigFloat) -> bool {
    x.is_zero()
}

/// Nearest `f64`; saturates to `±inf` and flushes to zero outside the `f64` range.
pub fn to_f64(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        None => f64::NAN,
        Some((m, _, sign, e, _)) => {
            if x.is_zero() {
                return 0.0;
            }
            let top = *m.last().unwrap_or(&0);
            let next = if m.len() >= 2 { m[m.len() - 2] } else { 0 };
            // Mantissa in [1/2, 1): top/2^64 + next/2^128.
            let frac = top as f64 / 2f64.powi(64) + next as f64 / 2f64.powi(128);
            let v = scale_pow2(frac, e);
            if sign == Sign::Neg {
                -v
            } else {
                v
            }
        }
    }
}

fn scale_pow2(x: f64, e: i32) -> f64 {
    let mut v = x;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e)
}

/// `log2 |x|`, finite for every nonzero value regardless of magnitude.
pub fn log2_abs(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((m, _, _, e, _)) if !x.is_zero() => {
            let top = *m.last().unwrap_or(&0);
            (top as f64 / 2f64.powi(64)).log2() + e as f64
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Decimal rendering with `digits` significant digits.
pub fn to_decimal(x: &BigFloat, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let mut cc = consts();
    let full = x.format(Radix::Dec, RM, &mut cc).unwrap_or_else(|_| "NaN".into());
    let (mantissa, exponent) = match full.split_once('e') {
        Some((m, e)) => (m.to_string(), e.to_string()),
        None => (full.clone(), "0".to_string()),
    };
    let mut kept = String::new();
    let mut significant = 0;
    for ch in mantissa.chars() {
        if ch.is_ascii_digit() {
            if significant == digits {
                break;
            }
            significant += 1;
        }
        kept.push(ch);
    }
    format!("{kept}e{exponent}")
}

pub fn abs(x: &BigFloat) -> BigFloat {
    x.abs()
}

pub fn sum_abs<'a, I: IntoIterator<Item = &'a BigFloat>>(xs: I, p: usize) -> BigFloat {
    xs.into_iter().fold(zero(p), |acc, x| acc.add(&x.abs(), p, RM))
}

/// Square root of a sum of squares.
pub fn l2<'a, I: IntoIterator<Item = &'a BigFloat>>(xs: I, p: usize) -> BigFloat {
    xs.into_iter().fold(zero(p), |acc, x| acc.add(&x.mul(x, p, RM), p, RM)).sqrt(p, RM)
}

pub fn le(a: &BigFloat, b: &BigFloat) -> bool {
    a.cmp(b).is_some_and(|o| o <= 0)
}

pub fn rational_sign(x: &BigRational) -> i32 {
    if x.is_negative() {
        -1
    } else if x.is_positive() {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_conversion_round_trips() {
        for x in [1.0, -6.0, 0.1, 3.0 / 7.0, 1e-300, 1e300, -2.5e-12] {
            assert_eq!(to_f64(&from_f64(x, 256)), x);
        }
        assert_eq!(to_f64(&zero(128)), 0.0);
    }

    #[test]
    fn tiny_values_keep_their_logarithm() {
        let x = from_f64(0.25, 256).powi(2000, 256, RM);
        assert!((log2_abs(&x) + 4000.0).abs() < 1e-12);
        assert_eq!(to_f64(&x), 0.0);
        assert!(to_decimal(&x, 6).starts_with("7.58607e-1205"));
    }

    #[test]
    fn integers_and_rationals() {
        let big: BigInt = "123456789012345678901234567890".parse().unwrap();
        assert_eq!(to_f64(&from_bigint(&big, 256)), 1.2345678901234568e29);
        assert_eq!(to_f64(&from_bigint(&-big, 256)), -1.2345678901234568e29);
        let r = BigRational::new(BigInt::from(-3), BigInt::from(8));
        assert_eq!(to_f64(&from_rational(&r, 128)), -0.375);
    }
}
