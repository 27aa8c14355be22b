//! Dissociated sets and the families Λ_R(k) over F_2^n.
//!
//! Over F_2^n a signed combination is just a subset sum, so every test here
//! is a subset-XOR test. This is not a correct Λ_R(k) test for groups of odd
//! characteristic.

use crate::error::{Error, Result};
use crate::f2n::F2Set;
use crate::seeded_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default cap on the number of half-subsets enumerated by [`in_family`].
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Weight cap `k` and forbidden set `R` (with `0 ∈ R`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    k: usize,
    r: F2Set,
}

impl FamilySpec {
    pub fn new(k: usize, r: F2Set) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("family weight k must be >= 1".into()));
        }
        if !r.contains_word(0) {
            return Err(Error::Parameter("the forbidden set R must contain 0".into()));
        }
        Ok(FamilySpec { k, r })
    }

    /// The family Λ(k), i.e. `R = {0}`.
    pub fn zero(k: usize, dim: u32) -> Result<Self> {
        Self::new(k, F2Set::from_words(dim, [0])?)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> &F2Set {
        &self.r
    }
}

/// Tri-state answer of a budgeted family test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyStatus {
    InFamily,
    NotInFamily,
    UndecidedByBudget,
}

impl FamilyStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyStatus::InFamily => "true",
            FamilyStatus::NotInFamily => "false",
            FamilyStatus::UndecidedByBudget => "undecided",
        }
    }
}

/// Rank of a list of words over GF(2).
pub fn rank(words: &[u32]) -> usize {
    let mut basis = [0u32; 32];
    let mut r = 0;
    for &w in words {
        let mut x = w;
        while x != 0 {
            let top = 31 - x.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = x;
                r += 1;
                break;
            }
            x ^= basis[top];
        }
    }
    r
}

/// True iff no nonempty subset of `L` sums to zero (GF(2) independence).
pub fn is_dissociated(l: &F2Set) -> bool {
    !l.words().contains(&0) && rank(l.words()) == l.len()
}

/// Coordinates of `x` in the basis `l` when `l` is independent and `x` lies
/// in its span; bit `i` of the result selects `l[i]`.
pub fn coordinates(l: &[u32], x: u32) -> Option<u64> {
    // reduced rows keyed by pivot, each tracking which inputs it combines
    let mut rows: Vec<(u32, u64)> = Vec::new();
    for (i, &w) in l.iter().enumerate() {
        let (mut v, mut tag) = (w, 1u64 << i);
        for &(rv, rt) in &rows {
            if v ^ rv < v {
                v ^= rv;
                tag ^= rt;
            }
        }
        if v == 0 {
            return None;
        }
        rows.push((v, tag));
        rows.sort_by(|a, b| b.0.cmp(&a.0));
    }
    let (mut v, mut tag) = (x, 0u64);
    for &(rv, rt) in &rows {
        if v ^ rv < v {
            v ^= rv;
            tag ^= rt;
        }
    }
    (v == 0).then_some(tag)
}

fn count_subsets_upto(n: usize, k: usize) -> f64 {
    (0..=k.min(n)).map(|j| crate::exact::binomial_f64(n as u64, j as u64)).sum()
}

/// Enumerates subsets of size <= `k` as (xor, mask) pairs.
fn small_subsets(words: &[u32], k: usize, out: &mut Vec<(u32, u64)>) {
    fn rec(words: &[u32], start: usize, left: usize, acc: u32, mask: u64, out: &mut Vec<(u32, u64)>) {
        out.push((acc, mask));
        if left == 0 {
            return;
        }
        for i in start..words.len() {
            rec(words, i + 1, left - 1, acc ^ words[i], mask | 1 << i, out);
        }
    }
    rec(words, 0, k, 0, 0, out);
}

/// Meet-in-the-middle decision of `L ∈ Λ_R(k)`: no nonempty subset of size
/// at most `k` sums into `R`.
pub fn in_family(l: &F2Set, spec: &FamilySpec, budget: u64) -> Result<FamilyStatus> {
    if l.dim() != spec.r.dim() {
        return Err(Error::DimensionMismatch(l.dim(), spec.r.dim()));
    }
    if l.len() > 64 {
        return Err(Error::Budget(format!("family test over {} elements", l.len())));
    }
    let k = spec.k.min(l.len());
    if k == 0 {
        return Ok(FamilyStatus::InFamily);
    }
    let big = (k + 1) / 2;
    let small = k / 2;
    let work = count_subsets_upto(l.len(), big) + count_subsets_upto(l.len(), small);
    if work > budget as f64 {
        return Ok(FamilyStatus::UndecidedByBudget);
    }
    let words = l.words();
    let mut halves = Vec::new();
    small_subsets(words, small, &mut halves);
    // value -> up to two distinct masks reaching it
    let mut table: HashMap<u32, (u64, Option<u64>)> = HashMap::with_capacity(halves.len());
    for &(v, m) in &halves {
        table
            .entry(v)
            .and_modify(|e| {
                if e.1.is_none() && e.0 != m {
                    e.1 = Some(m);
                }
            })
            .or_insert((m, None));
    }
    let mut bigs = Vec::new();
    small_subsets(words, big, &mut bigs);
    for &(v, m) in &bigs {
        for &rho in spec.r.words() {
            if let Some(&(m1, m2)) = table.get(&(v ^ rho)) {
                let hit = if m1 != m { Some(m1) } else { m2 };
                if hit.is_some() {
                    return Ok(FamilyStatus::NotInFamily);
                }
            }
        }
    }
    Ok(FamilyStatus::InFamily)
}

/// Family test that settles the `R = {0}` case by elimination when `L` is
/// independent, and falls back to [`in_family`] otherwise.
pub fn check_family(l: &F2Set, spec: &FamilySpec, budget: u64) -> Result<FamilyStatus> {
    if spec.r.len() == 1 && is_dissociated(l) {
        return Ok(FamilyStatus::InFamily);
    }
    in_family(l, spec, budget)
}

/// Greedy rejection sampling of an `m`-element member of the family.
pub fn random_dissociated(n: u32, m: usize, spec: &FamilySpec, seed: u64) -> Result<F2Set> {
    if spec.r.dim() != n {
        return Err(Error::DimensionMismatch(n, spec.r.dim()));
    }
    if spec.r.len() == 1 && spec.k >= m && m > n as usize {
        return Err(Error::Parameter(format!("no {m} independent vectors in dimension {n}")));
    }
    let mut rng = seeded_rng(seed);
    let mut words: Vec<u32> = Vec::with_capacity(m);
    let retries = 1000 * (m as u64 + 1);
    let mut tries = 0;
    while words.len() < m {
        tries += 1;
        if tries > retries {
            return Err(Error::Budget(format!("gave up after {retries} draws with {} of {m} kept", words.len())));
        }
        let x: u32 = rng.gen_range(0..1u32 << n);
        if words.contains(&x) {
            continue;
        }
        words.push(x);
        let cand = F2Set::from_words(n, words.iter().copied())?;
        if check_family(&cand, spec, DEFAULT_BUDGET)? != FamilyStatus::InFamily {
            words.pop();
        }
    }
    F2Set::from_words(n, words)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(dim: u32, w: &[u32]) -> F2Set {
        F2Set::from_words(dim, w.iter().copied()).unwrap()
    }

    #[test]
    fn dissociated_examples() {
        assert!(is_dissociated(&F2Set::basis(5, 5).unwrap()));
        assert!(!is_dissociated(&set(3, &[1, 2, 3])));
        assert!(!is_dissociated(&set(3, &[0, 1])));
        let l = set(3, &[1, 2, 4, 3]);
        assert!(!is_dissociated(&l));
    }

    #[test]
    fn family_examples() {
        let l = set(3, &[1, 2, 4, 7]);
        let status = |k| in_family(&l, &FamilySpec::zero(k, 3).unwrap(), DEFAULT_BUDGET).unwrap();
        assert_eq!(status(3), FamilyStatus::InFamily);
        assert_eq!(status(4), FamilyStatus::NotInFamily);
        let basis = F2Set::basis(6, 6).unwrap();
        for k in 1..8 {
            assert_eq!(in_family(&basis, &FamilySpec::zero(k, 6).unwrap(), DEFAULT_BUDGET).unwrap(), FamilyStatus::InFamily);
        }
        let spec = FamilySpec::new(1, set(3, &[0, 2])).unwrap();
        assert_eq!(in_family(&set(3, &[1, 2]), &spec, DEFAULT_BUDGET).unwrap(), FamilyStatus::NotInFamily);
        let tight = in_family(&basis, &FamilySpec::zero(6, 6).unwrap(), 3).unwrap();
        assert_eq!(tight, FamilyStatus::UndecidedByBudget);
        assert!(FamilySpec::new(2, set(3, &[1])).is_err());
    }

    #[test]
    fn coordinates_recover_subsets() {
        let l = [0b0011u32, 0b0110, 0b1000];
        assert_eq!(coordinates(&l, 0b0101), Some(0b011));
        assert_eq!(coordinates(&l, 0b1011), Some(0b101));
        assert_eq!(coordinates(&l, 0b0001), None);
        assert_eq!(coordinates(&[1, 1], 0), None);
    }

    #[test]
    fn random_generation() {
        let spec = FamilySpec::zero(10, 10).unwrap();
        let a = random_dissociated(10, 10, &spec, 7).unwrap();
        assert!(is_dissociated(&a));
        assert_eq!(rank(a.words()), 10);
        assert_eq!(a, random_dissociated(10, 10, &spec, 7).unwrap());
        let spec4 = FamilySpec::zero(4, 8).unwrap();
        let b = random_dissociated(8, 12, &spec4, 1).unwrap();
        assert_eq!(in_family(&b, &spec4, DEFAULT_BUDGET).unwrap(), FamilyStatus::InFamily);
    }
}
