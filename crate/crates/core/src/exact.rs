//! Exact arithmetic helpers: binomials, integer roots, rational parsing and
//! sound decisions for inequalities that involve roots or base-2 logarithms.

use crate::error::{Error, Result};
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

pub type Rational = BigRational;

pub fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

pub fn uint_to_rat(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, x.clone()))
}

/// Parses `"p/q"` or `"p"`; decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parameter(format!("expected a rational \"p/q\", got {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * big(n - i) / big(i + 1);
    }
    acc
}

pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * big(i))
}

/// `floor(x^(1/m))`.
pub fn floor_root(x: &BigUint, m: u32) -> BigUint {
    assert!(m >= 1);
    x.nth_root(m)
}

/// `ceil(x^(1/m))`.
pub fn ceil_root(x: &BigUint, m: u32) -> BigUint {
    let r = floor_root(x, m);
    if r.pow(m) == *x {
        r
    } else {
        r + 1u32
    }
}

/// `log2` of a big integer as a float, accurate to about 1e-15 relative.
pub fn log2_uint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 60 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    let shift = bits - 60;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.log2() + shift as f64
}

pub fn log2_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "log of a nonpositive rational");
    log2_uint(&x.numer().magnitude().clone()) - log2_uint(&x.denom().magnitude().clone())
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v.is_finite() && v != 0.0 {
        return v;
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * 2f64.powf(log2_rational(&x.abs()))
}

/// Ratio `rhs / lhs` as a float, the slack of an inequality `lhs <= rhs`.
pub fn slack(lhs: &BigRational, rhs: &BigRational) -> f64 {
    if lhs.is_zero() {
        return if rhs.is_zero() { 1.0 } else { f64::INFINITY };
    }
    if !lhs.is_positive() || !rhs.is_positive() {
        return rational_to_f64(&(rhs / lhs));
    }
    2f64.powf(log2_rational(rhs) - log2_rational(lhs))
}

/// `floor(log2 x)` for a positive rational.
pub fn floor_log2(x: &BigRational) -> i64 {
    assert!(x.is_positive());
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    let mut e = num.bits() as i64 - den.bits() as i64;
    // 2^e <= x < 2^(e+1) after correction
    loop {
        let le = pow2_le(e, num, den);
        let next = pow2_le(e + 1, num, den);
        if le && !next {
            return e;
        }
        if !le {
            e -= 1;
        } else {
            e += 1;
        }
    }
}

fn pow2_le(e: i64, num: &BigUint, den: &BigUint) -> bool {
    if e >= 0 {
        (den << e as u64) <= *num
    } else {
        *den <= (num << (-e) as u64)
    }
}

/// Is `x` an integer power of two (possibly negative exponent)?
pub fn power_of_two_exponent(x: &BigRational) -> Option<i64> {
    if !x.is_positive() {
        return None;
    }
    let (n, d) = (x.numer().magnitude(), x.denom().magnitude());
    let is_pow = |v: &BigUint| v.count_ones() == 1;
    if is_pow(n) && is_pow(d) {
        Some(n.bits() as i64 - d.bits() as i64)
    } else {
        None
    }
}

/// Rational interval `[lo, hi]` containing `log2 x`, of width at most `2^-bits`.
pub fn log2_interval(x: &BigRational, bits: u32) -> (BigRational, BigRational) {
    assert!(x.is_positive());
    if let Some(e) = power_of_two_exponent(x) {
        let v = rat_int(e);
        return (v.clone(), v);
    }
    let e = floor_log2(x);
    let prec = bits as u64 + 64;
    let one = BigUint::one() << prec;
    let two = &one << 1u32;
    let (num, den) = (x.numer().magnitude().clone(), x.denom().magnitude().clone());
    // y = x / 2^e in [1, 2), scaled by 2^prec
    let (sn, sd) = if e >= 0 { (num << prec, den << e as u64) } else { (num << (prec + (-e) as u64), den) };
    let mut lo = &sn / &sd;
    let mut hi = if (&lo * &sd) == sn { lo.clone() } else { &lo + 1u32 };
    let mut frac = BigUint::zero();
    let mut got = 0u32;
    while got < bits {
        lo = (&lo * &lo) >> prec;
        let hs = &hi * &hi;
        hi = (&hs >> prec) + if (&hs % &one).is_zero() { 0u32 } else { 1u32 };
        frac <<= 1u32;
        if lo >= two {
            frac += 1u32;
            lo >>= 1u32;
            hi = (&hi >> 1u32) + (&hi & BigUint::one());
        } else if hi >= two {
            break;
        }
        got += 1;
    }
    let scale = BigInt::one() << got as u64;
    let base = BigRational::new(BigInt::from(e) * &scale + BigInt::from(frac), scale.clone());
    let width = BigRational::new(BigInt::one(), scale);
    (base.clone(), base + width)
}

/// Decides `lhs <= coef * (log2 arg)^d` exactly, for `coef > 0` and `arg >= 1`.
pub fn le_coef_log_pow(lhs: &BigRational, coef: &BigRational, arg: &BigRational, d: u32) -> Result<bool> {
    if !coef.is_positive() || arg < &BigRational::one() {
        return Err(Error::Parameter("log bound needs positive coefficient and argument >= 1".into()));
    }
    if let Some(e) = power_of_two_exponent(arg) {
        return Ok(*lhs <= coef * rat_int(e).pow(d as i32));
    }
    let mut bits = 64;
    while bits <= 1 << 16 {
        let (lo, hi) = log2_interval(arg, bits);
        let lo = if lo.is_negative() { BigRational::zero() } else { lo };
        if *lhs <= coef * lo.pow(d as i32) {
            return Ok(true);
        }
        if *lhs > coef * hi.pow(d as i32) {
            return Ok(false);
        }
        bits *= 4;
    }
    Err(Error::Invariant("logarithm comparison did not separate".into()))
}

/// Decides `x^(1/m) <= Σ parts_i^(1/m)` exactly for nonnegative integers.
///
/// The comparison refines dyadic brackets of the roots. When the brackets
/// stop separating below the algebraic separation bound the two sides are
/// equal, so the inequality holds.
pub fn root_sum_le(x: &BigUint, parts: &[BigUint], m: u32) -> bool {
    let parts: Vec<&BigUint> = parts.iter().filter(|p| !p.is_zero()).collect();
    match parts.len() {
        0 => return x.is_zero(),
        1 => return x <= parts[0],
        _ => {}
    }
    if parts.iter().any(|p| x <= *p) {
        return true;
    }
    let biggest = parts.iter().copied().chain(std::iter::once(x)).max().unwrap();
    let r_bits = biggest.bits() / m as u64 + 2;
    let degree = (m as u64).pow(parts.len() as u32 + 1);
    let conj_bits = r_bits + 64 - ((parts.len() as u64 + 1).leading_zeros() as u64);
    let limit = degree * conj_bits + 8;
    let mut s = 32u64;
    loop {
        let bracket = |v: &BigUint| floor_root(&(v << (m as u64 * s)), m);
        let rx = bracket(x);
        let sum: BigUint = parts.iter().map(|p| bracket(p)).sum();
        let k = parts.len() as u32;
        if &rx + 1u32 <= sum {
            return true;
        }
        if rx >= &sum + k {
            return false;
        }
        if s > limit {
            return true;
        }
        s *= 2;
    }
}

/// Compares `a / b` with `c / d` for positive denominators given as integers.
pub fn cmp_fraction(a: &BigUint, b: &BigUint, c: &BigUint, d: &BigUint) -> Ordering {
    (a * d).cmp(&(c * b))
}

/// Rational lower bound of a positive float, with a relative safety margin.
pub fn rational_below(x: f64, margin: f64) -> BigRational {
    let y = x * (1.0 - margin);
    BigRational::from_float(y).unwrap_or_else(BigRational::zero)
}

/// Integer ceiling of a rational.
pub fn ceil_int(x: &BigRational) -> BigInt {
    x.ceil().to_integer()
}

pub fn floor_int(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

pub fn is_divisible(a: &BigInt, b: &BigInt) -> bool {
    a.is_multiple_of(b)
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_str {
    use super::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(de)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Optional variant of [`rational_str`].
pub mod opt_rational_str {
    use super::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, ser: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => ser.serialize_some(&format_rational(r)),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(de)?
            .map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("1/64").unwrap(), rat(1, 64));
        assert_eq!(parse_rational(" 3 ").unwrap(), rat(3, 1));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
    }

    #[test]
    fn roots_and_binomials() {
        assert_eq!(binomial(6, 3), big(20));
        assert_eq!(binomial(3, 5), big(0));
        assert_eq!(factorial(5), big(120));
        assert_eq!(floor_root(&big(80), 4), big(2));
        assert_eq!(ceil_root(&big(80), 4), big(3));
        assert_eq!(ceil_root(&big(81), 4), big(3));
    }

    #[test]
    fn logs() {
        assert_eq!(floor_log2(&rat(1, 3)), -2);
        assert_eq!(floor_log2(&rat(8, 1)), 3);
        assert_eq!(floor_log2(&rat(9, 1)), 3);
        let (lo, hi) = log2_interval(&rat(3, 1), 40);
        let l = rational_to_f64(&lo);
        let h = rational_to_f64(&hi);
        assert!(l <= 3f64.log2() && 3f64.log2() <= h && h - l < 1e-11);
        let (lo, hi) = log2_interval(&rat(1, 5), 30);
        assert!(rational_to_f64(&lo) <= (0.2f64).log2() && (0.2f64).log2() <= rational_to_f64(&hi));
    }

    #[test]
    fn log_pow_decisions() {
        // log2(8)^2 = 9
        assert!(le_coef_log_pow(&rat(9, 1), &rat(1, 1), &rat(8, 1), 2).unwrap());
        assert!(!le_coef_log_pow(&rat(10, 1), &rat(1, 1), &rat(8, 1), 2).unwrap());
        // log2(3) = 1.58496...
        assert!(le_coef_log_pow(&rat(158, 100), &rat(1, 1), &rat(3, 1), 1).unwrap());
        assert!(!le_coef_log_pow(&rat(159, 100), &rat(1, 1), &rat(3, 1), 1).unwrap());
    }

    #[test]
    fn root_sums() {
        // 2^(1/2) + 2^(1/2) = 8^(1/2)
        assert!(root_sum_le(&big(8), &[big(2), big(2)], 2));
        assert!(!root_sum_le(&big(9), &[big(2), big(2)], 2));
        assert!(root_sum_le(&big(16), &[big(1), big(1)], 4));
        assert!(!root_sum_le(&big(17), &[big(1), big(1)], 4));
        assert!(root_sum_le(&big(5), &[big(5), big(0)], 4));
        assert!(root_sum_le(&big(8), &[big(1), big(1)], 4));
    }
}
