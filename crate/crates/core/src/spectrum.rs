//! Exact Walsh–Hadamard transforms and large spectra.

use crate::error::{Error, Result};
use crate::f2n::{bitstring, check_dim, F2Set};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

const PAR_THRESHOLD: usize = 1 << 14;

/// An integer-valued function on F_2^n, stored as a table of length 2^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntFunction {
    dim: u32,
    values: Vec<BigInt>,
}

/// Exact Fourier table `Â(r) = Σ_x f(x)(-1)^<r,x>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumTable {
    dim: u32,
    values: Vec<BigInt>,
}

fn check_len(dim: u32, len: usize) -> Result<()> {
    check_dim(dim)?;
    if len != 1usize << dim {
        return Err(Error::Parameter(format!("table of length {len} for dimension {dim}")));
    }
    Ok(())
}

impl IntFunction {
    pub fn new(dim: u32, values: Vec<BigInt>) -> Result<Self> {
        check_len(dim, values.len())?;
        Ok(IntFunction { dim, values })
    }

    pub fn from_i64(dim: u32, values: &[i64]) -> Result<Self> {
        Self::new(dim, values.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn zero(dim: u32) -> Result<Self> {
        check_dim(dim)?;
        Ok(IntFunction { dim, values: vec![BigInt::zero(); 1 << dim] })
    }

    pub fn indicator(a: &F2Set) -> Self {
        let mut values = vec![BigInt::zero(); 1 << a.dim()];
        for &w in a.words() {
            values[w as usize] = BigInt::one();
        }
        IntFunction { dim: a.dim(), values }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn get(&self, x: u32) -> &BigInt {
        &self.values[x as usize]
    }

    pub fn abs(&self) -> IntFunction {
        IntFunction { dim: self.dim, values: self.values.iter().map(|v| v.abs()).collect() }
    }

    pub fn scale(&self, c: &BigInt) -> IntFunction {
        IntFunction { dim: self.dim, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Sum over the support of `f`.
    pub fn sum(&self) -> BigInt {
        self.values.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }
}

impl SpectrumTable {
    pub fn new(dim: u32, values: Vec<BigInt>) -> Result<Self> {
        check_len(dim, values.len())?;
        Ok(SpectrumTable { dim, values })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn get(&self, r: u32) -> &BigInt {
        &self.values[r as usize]
    }

    /// CSV dump with columns `r,value`, `r` written as a bit string.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value\n");
        for (r, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", bitstring(r as u32, self.dim), v));
        }
        out
    }
}

fn butterfly_i64(v: &mut [i64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        let step = |chunk: &mut [i64]| {
            let (a, b) = chunk.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        };
        if n >= PAR_THRESHOLD {
            v.par_chunks_mut(2 * h).for_each(step);
        } else {
            v.chunks_mut(2 * h).for_each(step);
        }
        h *= 2;
    }
}

fn butterfly_big(v: &mut [BigInt]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        let step = |chunk: &mut [BigInt]| {
            let (a, b) = chunk.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let d = &*x - &*y;
                *x += &*y;
                *y = d;
            }
        };
        if n >= PAR_THRESHOLD {
            v.par_chunks_mut(2 * h).for_each(step);
        } else {
            v.chunks_mut(2 * h).for_each(step);
        }
        h *= 2;
    }
}

/// Transform of a raw table; machine words are used when the result provably fits.
fn transform(dim: u32, values: &[BigInt]) -> Vec<BigInt> {
    let bound = 1i64 << (62 - dim.min(31));
    let small: Option<Vec<i64>> =
        values.iter().map(|v| v.to_i64().filter(|x| x.abs() < bound)).collect();
    match small {
        Some(mut words) => {
            butterfly_i64(&mut words);
            words.into_iter().map(BigInt::from).collect()
        }
        None => {
            let mut big = values.to_vec();
            butterfly_big(&mut big);
            big
        }
    }
}

/// Transform of an indicator held in machine words.
pub(crate) fn transform_words(dim: u32, values: Vec<i64>) -> Vec<i64> {
    debug_assert_eq!(values.len(), 1usize << dim);
    let mut v = values;
    butterfly_i64(&mut v);
    v
}

/// Fast exact Walsh–Hadamard transform.
pub fn wht(f: &IntFunction) -> SpectrumTable {
    SpectrumTable { dim: f.dim, values: transform(f.dim, &f.values) }
}

/// Spectrum of the indicator of `A`.
pub fn spectrum_of_set(a: &F2Set) -> SpectrumTable {
    let words = transform_words(a.dim(), a.indicator());
    SpectrumTable { dim: a.dim(), values: words.into_iter().map(BigInt::from).collect() }
}

/// Inverse transform `f(x) = N^{-1} Σ_r S(r)(-1)^<r,x>`.
pub fn inverse_wht(s: &SpectrumTable) -> Result<IntFunction> {
    let raw = transform(s.dim, &s.values);
    let n = BigInt::one() << s.dim as usize;
    let mut values = Vec::with_capacity(raw.len());
    for (x, v) in raw.into_iter().enumerate() {
        let (q, r) = num_integer::Integer::div_rem(&v, &n);
        if !r.is_zero() {
            return Err(Error::Invariant(format!(
                "inverse transform is not integral at {}",
                bitstring(x as u32, s.dim)
            )));
        }
        values.push(q);
    }
    Ok(IntFunction { dim: s.dim, values })
}

/// Checks that `alpha` lies in (0, 1].
pub fn check_alpha(alpha: &BigRational) -> Result<()> {
    if !alpha.is_positive() || *alpha > BigRational::one() {
        return Err(Error::Parameter(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(())
}

/// Frequencies of a table with `|S(r)| >= alpha N`.
pub fn large_spectrum_of(table: &SpectrumTable, alpha: &BigRational) -> Result<F2Set> {
    check_alpha(alpha)?;
    let n = BigInt::one() << table.dim as usize;
    // |S(r)| * q >= p * N
    let threshold = alpha.numer() * &n;
    let q = alpha.denom();
    let words = table
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() * q >= threshold)
        .map(|(r, _)| r as u32);
    F2Set::from_words(table.dim, words)
}

/// The large spectrum `R_α(A) = { r : |Â(r)| >= αN }`.
pub fn large_spectrum(a: &F2Set, alpha: &BigRational) -> Result<F2Set> {
    if a.is_empty() {
        return Err(Error::Empty("large spectrum of the empty set"));
    }
    large_spectrum_of(&spectrum_of_set(a), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn naive(f: &[i64], dim: u32) -> Vec<i64> {
        let n = 1usize << dim;
        (0..n)
            .map(|r| (0..n).map(|x| if (r & x).count_ones() % 2 == 0 { f[x] } else { -f[x] }).sum())
            .collect()
    }

    #[test]
    fn point_and_full_group() {
        let zero = F2Set::from_words(2, [0]).unwrap();
        let s = spectrum_of_set(&zero);
        assert!(s.values().iter().all(|v| *v == BigInt::one()));
        let full = F2Set::full(3).unwrap();
        let s = spectrum_of_set(&full);
        assert_eq!(*s.get(0), BigInt::from(8));
        assert!(s.values()[1..].iter().all(Zero::is_zero));
    }

    #[test]
    fn subspace_spectrum() {
        let h = F2Set::span(5, &[0b00011, 0b00100]).unwrap();
        let s = spectrum_of_set(&h);
        let naive_s = naive(&h.indicator(), 5);
        for r in 0..32u32 {
            assert_eq!(*s.get(r), BigInt::from(naive_s[r as usize]));
            let perp = h.words().iter().all(|&x| (r & x).count_ones() % 2 == 0);
            assert_eq!(*s.get(r), BigInt::from(if perp { 4 } else { 0 }));
        }
        let r = large_spectrum(&h, &rat(1, 8)).unwrap();
        assert_eq!(r.len(), 8);
    }

    #[test]
    fn inverse_round_trip() {
        let f = IntFunction::from_i64(3, &[3, -1, 0, 7, 2, 2, -5, 1]).unwrap();
        assert_eq!(inverse_wht(&wht(&f)).unwrap(), f);
        let ones = SpectrumTable::new(2, vec![BigInt::one(); 4]).unwrap();
        let g = inverse_wht(&ones).unwrap();
        assert_eq!(g.values()[0], BigInt::one());
        assert!(g.values()[1..].iter().all(Zero::is_zero));
        let bad = SpectrumTable::new(1, vec![BigInt::one(), BigInt::zero()]).unwrap();
        assert!(inverse_wht(&bad).is_err());
    }

    #[test]
    fn big_path_matches_word_path() {
        let vals: Vec<BigInt> = (0..16).map(|i| BigInt::from(i) << 70usize).collect();
        let f = IntFunction::new(4, vals).unwrap();
        let small: Vec<i64> = (0..16).collect();
        let expect = naive(&small, 4);
        let got = wht(&f);
        for (g, e) in got.values().iter().zip(expect) {
            assert_eq!(*g, BigInt::from(e) << 70usize);
        }
    }

    #[test]
    fn large_spectrum_boundaries() {
        let full = F2Set::full(3).unwrap();
        assert_eq!(large_spectrum(&full, &rat(1, 1)).unwrap().words(), &[0]);
        let a = F2Set::from_words(3, [1, 2]).unwrap();
        assert!(large_spectrum(&a, &rat(1, 2)).unwrap().is_empty());
        assert_eq!(large_spectrum(&a, &rat(1, 4)).unwrap().len(), 4);
        assert!(large_spectrum(&a, &rat(0, 1)).is_err());
        assert!(large_spectrum(&a, &rat(3, 2)).is_err());
    }
}
