//! Additive energies `T_k`, convolutions and the energy inequalities.

use crate::error::{Error, Result};
use crate::exact::{log2_uint, root_sum_le};
use crate::f2n::F2Set;
use crate::spectrum::{inverse_wht, transform_words, wht, IntFunction, SpectrumTable};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Cap on the number of k-tuples enumerated by [`energy_bruteforce`].
pub const BRUTE_BUDGET: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyMethod {
    Bruteforce,
    Spectral,
    Convolution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: String,
    pub method: EnergyMethod,
    pub k: usize,
    pub set_sizes: Vec<usize>,
    pub runtime_ms: u128,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("energy parameter k must be >= 1".into()));
    }
    Ok(())
}

fn square_sum(counts: impl Iterator<Item = u64>) -> BigUint {
    let mut acc: u128 = 0;
    let mut big = BigUint::zero();
    for c in counts {
        let sq = (c as u128) * (c as u128);
        match acc.checked_add(sq) {
            Some(v) => acc = v,
            None => {
                big += acc;
                acc = sq;
            }
        }
    }
    big + acc
}

/// `T_k` of a small list of distinct words by sorting all k-fold sums.
pub fn energy_of_words(words: &[u32], k: usize) -> BigUint {
    let mut sums = vec![0u32];
    for _ in 0..k {
        let mut next = Vec::with_capacity(sums.len() * words.len());
        for &s in &sums {
            next.extend(words.iter().map(|&w| s ^ w));
        }
        sums = next;
    }
    sums.sort_unstable();
    let runs = sums.chunk_by(|a, b| a == b).map(|r| r.len() as u64);
    square_sum(runs)
}

/// Exact `T_k(A)` by enumerating every k-tuple and squaring the sum counts.
pub fn energy_bruteforce(a: &F2Set, k: usize) -> Result<BigUint> {
    check_k(k)?;
    let words = a.words();
    let work = (words.len() as f64).powi(k as i32);
    if work > BRUTE_BUDGET {
        return Err(Error::Budget(format!("{work:.0} tuples exceed the brute-force cap")));
    }
    if words.is_empty() {
        return Ok(BigUint::zero());
    }
    if a.dim() <= 16 && work >= 1e5 {
        let n = 1usize << a.dim();
        let tail = k - 1;
        let counts = words
            .par_iter()
            .fold(
                || vec![0u64; n],
                |mut local, &first| {
                    let mut stack = vec![(first, tail)];
                    while let Some((acc, left)) = stack.pop() {
                        if left == 0 {
                            local[acc as usize] += 1;
                        } else {
                            stack.extend(words.iter().map(|&w| (acc ^ w, left - 1)));
                        }
                    }
                    local
                },
            )
            .reduce(
                || vec![0u64; n],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
                    x
                },
            );
        return Ok(square_sum(counts.into_iter()));
    }
    Ok(energy_of_words(words, k))
}

fn power_sum(values: impl Iterator<Item = i64>, e: u32) -> BigUint {
    let mut big = BigUint::zero();
    let mut acc: u128 = 0;
    for v in values {
        let a = v.unsigned_abs();
        if a == 0 {
            continue;
        }
        let fits = (64 - a.leading_zeros()) * e <= 120;
        if fits {
            let p = (a as u128).pow(e);
            match acc.checked_add(p) {
                Some(s) => acc = s,
                None => {
                    big += acc;
                    acc = p;
                }
            }
        } else {
            big += BigUint::from(a).pow(e);
        }
    }
    big + acc
}

/// `T_k(A) = N^{-1} Σ_r Â(r)^{2k}`.
pub fn energy_spectral(a: &F2Set, k: usize) -> Result<BigUint> {
    check_k(k)?;
    let spec = transform_words(a.dim(), a.indicator());
    let total = power_sum(spec.into_iter(), 2 * k as u32);
    let n = BigUint::one() << a.dim() as usize;
    let (q, r) = total.div_rem(&n);
    if !r.is_zero() {
        return Err(Error::Invariant("spectral energy sum not divisible by N".into()));
    }
    Ok(q)
}

/// Mixed energy `T_k(A_1, ..., A_{2k})`: solutions of
/// `a_1 + ... + a_k = a_{k+1} + ... + a_{2k}` with `a_i ∈ A_i`.
pub fn energy_multiset(sets: &[F2Set]) -> Result<BigUint> {
    if sets.is_empty() || sets.len() % 2 != 0 {
        return Err(Error::Parameter("mixed energy needs an even, positive number of sets".into()));
    }
    let dim = sets[0].dim();
    if let Some(s) = sets.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch(dim, s.dim()));
    }
    let spectra: Vec<Vec<i64>> = sets.iter().map(|s| transform_words(dim, s.indicator())).collect();
    let n = 1usize << dim;
    let mut total = BigInt::zero();
    for r in 0..n {
        let mut prod = BigInt::one();
        for s in &spectra {
            prod *= s[r];
            if prod.is_zero() {
                break;
            }
        }
        total += prod;
    }
    let nn = BigInt::one() << dim as usize;
    let (q, rem) = total.div_rem(&nn);
    if !rem.is_zero() || q.is_negative() {
        return Err(Error::Invariant("mixed energy sum not a nonnegative multiple of N".into()));
    }
    Ok(q.to_biguint().unwrap())
}

fn same_dim(f: &IntFunction, g: &IntFunction) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(f.dim(), g.dim()));
    }
    Ok(())
}

/// `(f * g)(x) = Σ_s f(s) g(x - s)` by transform, multiply and invert.
pub fn convolve(f: &IntFunction, g: &IntFunction) -> Result<IntFunction> {
    same_dim(f, g)?;
    let (fs, gs) = (wht(f), wht(g));
    let prod: Vec<BigInt> = fs.values().iter().zip(gs.values()).map(|(a, b)| a * b).collect();
    inverse_wht(&SpectrumTable::new(f.dim(), prod)?)
}

/// Convolution straight from the definition, O(N^2).
pub fn convolve_direct(f: &IntFunction, g: &IntFunction) -> Result<IntFunction> {
    same_dim(f, g)?;
    let n = 1usize << f.dim();
    let support: Vec<(usize, &BigInt)> = f.values().iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
    let mut out = vec![BigInt::zero(); n];
    for (x, slot) in out.iter_mut().enumerate() {
        for &(s, fv) in &support {
            let gv = &g.values()[x ^ s];
            if !gv.is_zero() {
                *slot += fv * gv;
            }
        }
    }
    IntFunction::new(f.dim(), out)
}

/// The k-fold self-convolution `f * ... * f` (k copies).
pub fn self_convolution(f: &IntFunction, k: usize) -> Result<IntFunction> {
    check_k(k)?;
    let mut h = f.clone();
    for _ in 1..k {
        h = convolve(&h, f)?;
    }
    Ok(h)
}

/// `T_k(f) = Σ_x |(f *_{k-1} f)(x)|^2` through repeated convolution.
pub fn energy_function(f: &IntFunction, k: usize) -> Result<BigUint> {
    let h = self_convolution(f, k)?;
    Ok(h.values().iter().map(|v| (v * v).to_biguint().unwrap()).sum())
}

/// `N^{-1} Σ_r f̂(r)^{2k}` for an integer function.
pub fn energy_function_spectral(f: &IntFunction, k: usize) -> Result<BigUint> {
    check_k(k)?;
    let s = wht(f);
    let total: BigUint = s.values().iter().map(|v| v.magnitude().pow(2 * k as u32)).sum();
    let n = BigUint::one() << f.dim() as usize;
    let (q, r) = total.div_rem(&n);
    if !r.is_zero() {
        return Err(Error::Invariant("spectral energy of a function not divisible by N".into()));
    }
    Ok(q)
}

/// Energy with the requested method and timing information.
pub fn energy(a: &F2Set, k: usize, method: EnergyMethod) -> Result<EnergyReport> {
    let start = Instant::now();
    let value = match method {
        EnergyMethod::Bruteforce => energy_bruteforce(a, k)?,
        EnergyMethod::Spectral => energy_spectral(a, k)?,
        EnergyMethod::Convolution => energy_function(&IntFunction::indicator(a), k)?,
    };
    Ok(EnergyReport {
        value: value.to_string(),
        method,
        k,
        set_sizes: vec![a.len()],
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// Fastest exact `T_k(A)` available for the instance.
pub fn energy_auto(a: &F2Set, k: usize) -> Result<BigUint> {
    let work = (a.len() as f64).powi(k as i32);
    if work <= 2e5 || a.dim() > 22 {
        energy_bruteforce(a, k)
    } else {
        energy_spectral(a, k)
    }
}

/// Outcome of an inequality whose sides are compared after raising to a
/// common power, so that no roots are taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    /// Left side before raising to `exponent`.
    pub lhs: String,
    /// Right side raised to `exponent`.
    pub rhs_power: String,
    pub exponent: u32,
    pub holds: bool,
    /// `rhs / lhs` in root form.
    pub slack: f64,
}

/// Hölder-type bound for convolutions: `|Σ_x F(x) G(x)| <= Π T_s(f_i)^{1/2s} Π T_t(g_j)^{1/2t}`
/// where `F = f_1 * ... * f_s` and `G = g_1 * ... * g_t`.
pub fn holder_check(fs: &[IntFunction], gs: &[IntFunction]) -> Result<PowerComparison> {
    let (s, t) = (fs.len(), gs.len());
    if s < 2 || t < 2 {
        return Err(Error::Parameter("Hölder check needs at least two functions on each side".into()));
    }
    let dim = fs[0].dim();
    if let Some(h) = fs.iter().chain(gs).find(|h| h.dim() != dim) {
        return Err(Error::DimensionMismatch(dim, h.dim()));
    }
    let fold = |hs: &[IntFunction]| -> Result<IntFunction> {
        let mut acc = hs[0].clone();
        for h in &hs[1..] {
            acc = convolve(&acc, h)?;
        }
        Ok(acc)
    };
    let (big_f, big_g) = (fold(fs)?, fold(gs)?);
    let inner: BigInt = big_f.values().iter().zip(big_g.values()).map(|(a, b)| a * b).sum();
    let lhs = inner.abs().to_biguint().unwrap();
    let mut rhs_power = BigUint::one();
    for f in fs {
        rhs_power *= energy_function(f, s)?.pow(t as u32);
    }
    for g in gs {
        rhs_power *= energy_function(g, t)?.pow(s as u32);
    }
    let exponent = (2 * s * t) as u32;
    let holds = lhs.pow(exponent) <= rhs_power;
    let slack = if lhs.is_zero() {
        f64::INFINITY
    } else {
        2f64.powf(log2_uint(&rhs_power) / exponent as f64 - log2_uint(&lhs))
    };
    Ok(PowerComparison { lhs: lhs.to_string(), rhs_power: rhs_power.to_string(), exponent, holds, slack })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub t_union: String,
    pub t_a: String,
    pub t_b: String,
    pub k: usize,
    pub holds: bool,
    pub slack: f64,
}

/// `T_k(A ∪ B)^{1/2k} <= T_k(A)^{1/2k} + T_k(B)^{1/2k}`, decided exactly.
pub fn subadditivity_check(a: &F2Set, b: &F2Set, k: usize) -> Result<SubadditivityReport> {
    let u = a.union(b)?;
    let (tu, ta, tb) = (energy_auto(&u, k)?, energy_auto(a, k)?, energy_auto(b, k)?);
    let m = 2 * k as u32;
    let holds = root_sum_le(&tu, &[ta.clone(), tb.clone()], m);
    let root = |x: &BigUint| if x.is_zero() { 0.0 } else { 2f64.powf(log2_uint(x) / m as f64) };
    let slack = (root(&ta) + root(&tb)) / root(&tu);
    Ok(SubadditivityReport {
        t_union: tu.to_string(),
        t_a: ta.to_string(),
        t_b: tb.to_string(),
        k,
        holds,
        slack,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DkZeta {
    pub d_k: f64,
    pub zeta_k: f64,
}

/// `D_k` and `ζ_k` from an exact energy value.
pub fn dk_zeta_from(t: &BigUint, size: usize, k: usize) -> DkZeta {
    let lt = log2_uint(t);
    let la = (size as f64).log2();
    DkZeta { d_k: lt - k as f64 * (k as f64).log2() - k as f64 * la, zeta_k: lt / la }
}

/// `D_k(A) = log T_k - k log k - k log|A|` and `ζ_k(A) = log T_k / log|A|`.
pub fn dk_zeta(a: &F2Set, k: usize) -> Result<DkZeta> {
    if a.len() < 2 {
        return Err(Error::Parameter("D_k and zeta_k need |A| >= 2".into()));
    }
    Ok(dk_zeta_from(&energy_auto(a, k)?, a.len(), k))
}

/// Diagonal count `T_k(A) >= C(|A|, k) (k!)^2` from tuples of distinct elements.
pub fn diagonal_lower_bound(size: usize, k: usize) -> BigUint {
    let f = crate::exact::factorial(k as u64);
    crate::exact::binomial(size as u64, k as u64) * &f * &f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::big;

    #[test]
    fn known_values() {
        let b3 = F2Set::basis(3, 3).unwrap();
        assert_eq!(energy_bruteforce(&b3, 2).unwrap(), big(21));
        assert_eq!(energy_spectral(&b3, 2).unwrap(), big(21));
        let b4 = F2Set::basis(4, 6).unwrap();
        assert_eq!(energy_bruteforce(&b4, 2).unwrap(), big(40));
        let h = F2Set::from_words(3, [0, 5]).unwrap();
        assert_eq!(energy_bruteforce(&h, 2).unwrap(), big(8));
        let single = F2Set::from_words(4, [9]).unwrap();
        for k in 1..5 {
            assert_eq!(energy_bruteforce(&single, k).unwrap(), big(1));
        }
        let full = F2Set::full(4).unwrap();
        assert_eq!(energy_spectral(&full, 3).unwrap(), big(16).pow(5));
    }

    #[test]
    fn dense_path_matches_sort_path() {
        let a = F2Set::from_words(10, (0..60u32).map(|i| (i * 37 + 11) % 1024)).unwrap();
        let via_sort = energy_of_words(a.words(), 3);
        assert_eq!(energy_bruteforce(&a, 3).unwrap(), via_sort);
        assert_eq!(energy_spectral(&a, 3).unwrap(), via_sort);
    }

    #[test]
    fn multiset_cases() {
        let a = F2Set::from_words(4, [1, 2, 4, 7, 9]).unwrap();
        let same = vec![a.clone(); 4];
        assert_eq!(energy_multiset(&same).unwrap(), energy_spectral(&a, 2).unwrap());
        let zero = F2Set::from_words(4, [0]).unwrap();
        let mixed = vec![zero, a.clone(), a.clone(), a.clone()];
        let mut count = 0u64;
        for &x in a.words() {
            for &y in a.words() {
                for &z in a.words() {
                    if x == y ^ z {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(energy_multiset(&mixed).unwrap(), big(count));
        let singles: Vec<F2Set> = [1u32, 2, 4, 8].iter().map(|&w| F2Set::from_words(4, [w]).unwrap()).collect();
        assert_eq!(energy_multiset(&singles).unwrap(), big(0));
    }

    #[test]
    fn convolution_agreement() {
        let f = IntFunction::from_i64(3, &[1, 0, 2, -1, 0, 0, 3, 1]).unwrap();
        let g = IntFunction::from_i64(3, &[0, 1, 1, 0, -2, 0, 0, 5]).unwrap();
        assert_eq!(convolve(&f, &g).unwrap(), convolve_direct(&f, &g).unwrap());
        assert_eq!(convolve(&f, &g).unwrap(), convolve(&g, &f).unwrap());
        let delta = IntFunction::indicator(&F2Set::from_words(3, [0]).unwrap());
        assert_eq!(convolve(&delta, &f).unwrap(), f);
    }

    #[test]
    fn function_energy() {
        let two_delta = IntFunction::from_i64(3, &[2, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        for k in 2..5 {
            assert_eq!(energy_function(&two_delta, k).unwrap(), big(1 << (2 * k)));
        }
        let a = F2Set::from_words(4, [1, 3, 6, 10, 15]).unwrap();
        let f = IntFunction::indicator(&a);
        assert_eq!(energy_function(&f, 3).unwrap(), energy_spectral(&a, 3).unwrap());
        let g = IntFunction::from_i64(3, &[1, -2, 0, 3, -1, 0, 2, 0]).unwrap();
        assert_eq!(energy_function(&g, 2).unwrap(), energy_function_spectral(&g, 2).unwrap());
        assert!(energy_function(&g, 3).unwrap() <= energy_function(&g.abs(), 3).unwrap());
    }

    #[test]
    fn holder_equality_and_zero() {
        let a = F2Set::from_words(4, [1, 2, 4, 8, 15]).unwrap();
        let f = IntFunction::indicator(&a);
        let r = holder_check(&[f.clone(), f.clone()], &[f.clone(), f.clone()]).unwrap();
        assert!(r.holds);
        assert_eq!(r.lhs, energy_spectral(&a, 2).unwrap().to_string());
        let z = IntFunction::zero(4).unwrap();
        let r = holder_check(&[z.clone(), f.clone()], &[f.clone(), f]).unwrap();
        assert!(r.holds && r.lhs == "0");
    }

    #[test]
    fn subadditivity_examples() {
        let a = F2Set::from_words(3, [1]).unwrap();
        let b = F2Set::from_words(3, [2]).unwrap();
        let r = subadditivity_check(&a, &b, 2).unwrap();
        assert_eq!(r.t_union, "8");
        assert!(r.holds);
        let empty = F2Set::empty(3).unwrap();
        let c = F2Set::from_words(3, [1, 2, 4]).unwrap();
        let r = subadditivity_check(&c, &empty, 2).unwrap();
        assert!(r.holds && (r.slack - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dk_and_zeta() {
        let h = F2Set::span(5, &[1, 2, 4]).unwrap();
        let z = dk_zeta(&h, 2).unwrap();
        assert!((z.zeta_k - 3.0).abs() < 1e-12);
        let b4 = F2Set::basis(4, 4).unwrap();
        let z = dk_zeta(&b4, 2).unwrap();
        assert!((z.d_k - (40f64.log2() - 6.0)).abs() < 1e-12);
        assert!(energy_spectral(&b4, 3).unwrap() >= diagonal_lower_bound(4, 3));
    }
}
