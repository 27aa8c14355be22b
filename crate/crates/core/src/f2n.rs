//! Elements and sets of F_2^n, distinct sumsets, and the set file format.
//!
//! Coordinate `i` (1-based in text form) is bit `i - 1` of the word. The
//! textual form writes coordinate 1 first, so `"10"` in dimension 2 is `e1`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest supported dimension.
pub const MAX_DIM: u32 = 30;

pub(crate) fn check_dim(dim: u32) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

/// A point of F_2^n stored as an n-bit word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F2Element {
    bits: u32,
    dim: u32,
}

impl F2Element {
    pub fn new(bits: u32, dim: u32) -> Result<Self> {
        check_dim(dim)?;
        if dim < 32 && bits >> dim != 0 {
            return Err(Error::ElementOutOfRange { bits: bits as u64, dim });
        }
        Ok(F2Element { bits, dim })
    }

    pub fn zero(dim: u32) -> Result<Self> {
        Self::new(0, dim)
    }

    /// The standard basis vector `e_i`, with `i` 1-based.
    pub fn basis(i: u32, dim: u32) -> Result<Self> {
        if i == 0 || i > dim {
            return Err(Error::Parameter(format!("basis index {i} outside 1..={dim}")));
        }
        Self::new(1 << (i - 1), dim)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let dim = s.len() as u32;
        check_dim(dim)?;
        let bits = parse_bits(s, dim).map_err(|msg| Error::Parse { line: 1, msg })?;
        Self::new(bits, dim)
    }
}

impl fmt::Display for F2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bitstring(self.bits, self.dim))
    }
}

/// Group law: coordinatewise addition mod 2.
pub fn add(x: F2Element, y: F2Element) -> Result<F2Element> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch(x.dim, y.dim));
    }
    Ok(F2Element { bits: x.bits ^ y.bits, dim: x.dim })
}

/// The pairing `<r, x>` as a bit.
pub fn dot(r: F2Element, x: F2Element) -> Result<u8> {
    if r.dim != x.dim {
        return Err(Error::DimensionMismatch(r.dim, x.dim));
    }
    Ok(((r.bits & x.bits).count_ones() & 1) as u8)
}

/// Renders a word as a {0,1} string, coordinate 1 first.
pub fn bitstring(bits: u32, dim: u32) -> String {
    (0..dim).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, dim: u32) -> std::result::Result<u32, String> {
    if s.len() != dim as usize {
        return Err(format!("expected {dim} characters, found {}", s.len()));
    }
    let mut bits = 0u32;
    for (i, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => bits |= 1 << i,
            other => return Err(format!("bad character {other:?} at column {}", i + 1)),
        }
    }
    Ok(bits)
}

/// A finite subset of F_2^n kept as a strictly increasing list of words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct F2Set {
    dim: u32,
    elems: Vec<u32>,
}

impl F2Set {
    pub fn empty(dim: u32) -> Result<Self> {
        check_dim(dim)?;
        Ok(F2Set { dim, elems: Vec::new() })
    }

    /// Builds a set from words, merging duplicates.
    pub fn from_words(dim: u32, words: impl IntoIterator<Item = u32>) -> Result<Self> {
        check_dim(dim)?;
        let mut elems: Vec<u32> = words.into_iter().collect();
        if let Some(&w) = elems.iter().find(|&&w| w >> dim != 0) {
            return Err(Error::ElementOutOfRange { bits: w as u64, dim });
        }
        elems.sort_unstable();
        elems.dedup();
        Ok(F2Set { dim, elems })
    }

    /// Builds a set from words, rejecting duplicates.
    pub fn from_distinct_words(dim: u32, words: impl IntoIterator<Item = u32>) -> Result<Self> {
        let words: Vec<u32> = words.into_iter().collect();
        let n = words.len();
        let set = Self::from_words(dim, words)?;
        if set.len() != n {
            return Err(Error::Parameter("duplicate element".into()));
        }
        Ok(set)
    }

    pub(crate) fn from_sorted_unchecked(dim: u32, elems: Vec<u32>) -> Self {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        F2Set { dim, elems }
    }

    /// The standard basis `{e_1, ..., e_m}` inside F_2^dim.
    pub fn basis(m: u32, dim: u32) -> Result<Self> {
        if m > dim {
            return Err(Error::Parameter(format!("basis of size {m} in dimension {dim}")));
        }
        Self::from_words(dim, (0..m).map(|i| 1u32 << i))
    }

    /// The whole group F_2^dim.
    pub fn full(dim: u32) -> Result<Self> {
        check_dim(dim)?;
        if dim > 26 {
            return Err(Error::Budget(format!("full group of dimension {dim}")));
        }
        Ok(F2Set { dim, elems: (0..1u32 << dim).collect() })
    }

    /// The span of the given words.
    pub fn span(dim: u32, gens: &[u32]) -> Result<Self> {
        let mut elems = vec![0u32];
        for &g in gens {
            if elems.binary_search(&g).is_ok() {
                continue;
            }
            let shifted: Vec<u32> = elems.iter().map(|&e| e ^ g).collect();
            elems.extend(shifted);
            elems.sort_unstable();
            elems.dedup();
        }
        Self::from_words(dim, elems)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn words(&self) -> &[u32] {
        &self.elems
    }

    pub fn iter(&self) -> impl Iterator<Item = F2Element> + '_ {
        let dim = self.dim;
        self.elems.iter().map(move |&bits| F2Element { bits, dim })
    }

    pub fn contains_word(&self, w: u32) -> bool {
        self.elems.binary_search(&w).is_ok()
    }

    pub fn contains(&self, x: F2Element) -> bool {
        x.dim == self.dim && self.contains_word(x.bits)
    }

    /// Density `|A| / 2^n` as numerator and denominator.
    pub fn density(&self) -> (u64, u64) {
        (self.elems.len() as u64, 1u64 << self.dim)
    }

    fn same_dim(&self, other: &F2Set) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn union(&self, other: &F2Set) -> Result<F2Set> {
        self.same_dim(other)?;
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.elems, &other.elems);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    v.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    v.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    v.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        v.extend_from_slice(&a[i..]);
        v.extend_from_slice(&b[j..]);
        Ok(F2Set::from_sorted_unchecked(self.dim, v))
    }

    pub fn intersection(&self, other: &F2Set) -> Result<F2Set> {
        self.same_dim(other)?;
        let v = self.elems.iter().copied().filter(|&w| other.contains_word(w)).collect();
        Ok(F2Set::from_sorted_unchecked(self.dim, v))
    }

    pub fn difference(&self, other: &F2Set) -> Result<F2Set> {
        self.same_dim(other)?;
        let v = self.elems.iter().copied().filter(|&w| !other.contains_word(w)).collect();
        Ok(F2Set::from_sorted_unchecked(self.dim, v))
    }

    pub fn is_subset(&self, other: &F2Set) -> bool {
        self.dim == other.dim && self.elems.iter().all(|&w| other.contains_word(w))
    }

    /// The translate `x + A`.
    pub fn translate(&self, x: u32) -> F2Set {
        let v = self.elems.iter().map(|&w| w ^ x);
        F2Set::from_words(self.dim, v).expect("translate stays in range")
    }

    /// The ordinary sumset `A + B`.
    pub fn sumset(&self, other: &F2Set) -> Result<F2Set> {
        self.same_dim(other)?;
        let mut v = Vec::with_capacity(self.len() * other.len());
        for &a in &self.elems {
            for &b in &other.elems {
                v.push(a ^ b);
            }
        }
        F2Set::from_words(self.dim, v)
    }

    /// Dense membership bitmap over all of F_2^n.
    ///
    /// # Panics
    ///
    /// Panics when the dimension exceeds 24.
    pub fn bitmap(&self) -> Vec<u64> {
        assert!(self.dim <= 24, "bitmap limited to n <= 24");
        let mut map = vec![0u64; ((1usize << self.dim) + 63) / 64];
        for &w in &self.elems {
            map[w as usize / 64] |= 1 << (w % 64);
        }
        map
    }

    /// Indicator function as a 0/1 vector of length 2^n.
    pub fn indicator(&self) -> Vec<i64> {
        let mut f = vec![0i64; 1usize << self.dim];
        for &w in &self.elems {
            f[w as usize] = 1;
        }
        f
    }
}

/// Distinct sumset `A_1 ∔ ... ∔ A_d`: sums of one element from each set,
/// with the chosen elements pairwise distinct.
pub fn dotplus(sets: &[F2Set]) -> Result<F2Set> {
    let first = sets.first().ok_or(Error::Empty("dotplus needs at least one set"))?;
    for s in sets {
        first.same_dim(s)?;
    }
    let work: f64 = sets.iter().map(|s| s.len() as f64).product();
    if work > 1e8 {
        return Err(Error::Budget(format!("dotplus over {work:.0} tuples")));
    }
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(sets.len());
    dotplus_rec(sets, 0, 0, &mut chosen, &mut out);
    F2Set::from_words(first.dim, out)
}

fn dotplus_rec(sets: &[F2Set], i: usize, acc: u32, chosen: &mut Vec<u32>, out: &mut Vec<u32>) {
    if i == sets.len() {
        out.push(acc);
        return;
    }
    for &w in &sets[i].elems {
        if chosen.contains(&w) {
            continue;
        }
        chosen.push(w);
        dotplus_rec(sets, i + 1, acc ^ w, chosen, out);
        chosen.pop();
    }
}

/// The d-fold distinct sumset `d·A`: sums of d distinct members of `A`.
pub fn dotplus_power(a: &F2Set, d: usize) -> Result<F2Set> {
    if d == 0 {
        return F2Set::from_words(a.dim, [0]);
    }
    if d > a.len() {
        return F2Set::empty(a.dim);
    }
    let count = crate::exact::binomial_f64(a.len() as u64, d as u64);
    if count > 1e8 {
        return Err(Error::Budget(format!("{count:.0} subsets in d-fold sumset")));
    }
    let mut out = Vec::with_capacity(count as usize);
    for_each_combination(a.len(), d, |idx| {
        out.push(idx.iter().fold(0u32, |acc, &i| acc ^ a.elems[i]));
    });
    F2Set::from_words(a.dim, out)
}

/// Calls `f` on every increasing index tuple of length `k` drawn from `0..n`,
/// in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Parses the set file format: a dimension line, then one element per line.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_set(text: &str) -> Result<F2Set> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "missing dimension header".into() })?;
    let dim_text = header.strip_prefix("dim").map(str::trim).unwrap_or(header);
    let dim: u32 = dim_text
        .parse()
        .map_err(|_| Error::Parse { line: hline, msg: format!("bad dimension header {header:?}") })?;
    check_dim(dim).map_err(|e| Error::Parse { line: hline, msg: e.to_string() })?;
    let mut seen = std::collections::HashMap::new();
    let mut elems = Vec::new();
    for (line, l) in lines {
        let bits = parse_bits(l, dim).map_err(|msg| Error::Parse { line, msg })?;
        if let Some(prev) = seen.insert(bits, line) {
            return Err(Error::Parse { line, msg: format!("duplicate element {l} (first on line {prev})") });
        }
        elems.push(bits);
    }
    F2Set::from_words(dim, elems)
}

/// Serializes a set in canonical (sorted) order.
pub fn serialize_set(s: &F2Set) -> String {
    let mut out = format!("{}\n", s.dim);
    for &w in &s.elems {
        out.push_str(&bitstring(w, s.dim));
        out.push('\n');
    }
    out
}

pub fn read_set(path: &std::path::Path) -> Result<F2Set> {
    parse_set(&std::fs::read_to_string(path)?)
}

pub fn write_set(path: &std::path::Path, s: &F2Set) -> Result<()> {
    std::fs::write(path, serialize_set(s))?;
    Ok(())
}

impl Serialize for F2Element {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&bitstring(self.bits, self.dim))
    }
}

impl<'de> Deserialize<'de> for F2Element {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        F2Element::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    dim: u32,
    elements: Vec<String>,
}

impl Serialize for F2Set {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let elements = self.elems.iter().map(|&w| bitstring(w, self.dim)).collect();
        SetRepr { dim: self.dim, elements }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for F2Set {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = SetRepr::deserialize(de)?;
        let words = repr
            .elements
            .iter()
            .map(|e| parse_bits(e, repr.dim))
            .collect::<std::result::Result<Vec<u32>, String>>()
            .map_err(serde::de::Error::custom)?;
        F2Set::from_distinct_words(repr.dim, words).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(s: &str) -> F2Element {
        F2Element::parse(s).unwrap()
    }

    #[test]
    fn add_and_dot() {
        assert_eq!(add(el("1010"), el("0110")).unwrap(), el("1100"));
        let x = el("1011");
        assert_eq!(add(x, x).unwrap(), el("0000"));
        assert_eq!(add(x, el("0000")).unwrap(), x);
        assert_eq!(dot(el("1100"), el("1000")).unwrap(), 1);
        assert_eq!(dot(x, el("0000")).unwrap(), 0);
        assert_eq!(dot(el("1111"), el("1111")).unwrap(), 0);
        assert!(add(el("10"), el("100")).is_err());
    }

    #[test]
    fn group_axioms_exhaustive() {
        let n = 4;
        for a in 0..16u32 {
            for b in 0..16u32 {
                let (x, y) = (F2Element::new(a, n).unwrap(), F2Element::new(b, n).unwrap());
                assert_eq!(add(x, y).unwrap(), add(y, x).unwrap());
                for c in 0..16u32 {
                    let z = F2Element::new(c, n).unwrap();
                    let l = add(add(x, y).unwrap(), z).unwrap();
                    let r = add(x, add(y, z).unwrap()).unwrap();
                    assert_eq!(l, r);
                }
            }
        }
    }

    #[test]
    fn dotplus_examples() {
        let b = F2Set::basis(3, 3).unwrap();
        let two = dotplus_power(&b, 2).unwrap();
        assert_eq!(two.words(), &[0b011, 0b101, 0b110]);
        let b4 = F2Set::basis(4, 4).unwrap();
        assert_eq!(dotplus_power(&b4, 2).unwrap().len(), 6);
        let s = F2Set::from_words(2, [0b01, 0b10, 0b11]).unwrap();
        assert_eq!(dotplus_power(&s, 2).unwrap().words(), &[1, 2, 3]);
        let via_list = dotplus(&[s.clone(), s.clone()]).unwrap();
        assert_eq!(via_list, dotplus_power(&s, 2).unwrap());
        assert!(dotplus(&[]).is_err());
    }

    #[test]
    fn dotplus_excludes_repeats() {
        let a = F2Set::from_words(3, [1]).unwrap();
        assert!(dotplus(&[a.clone(), a]).unwrap().is_empty());
    }

    #[test]
    fn combinations_count() {
        let mut n = 0;
        for_each_combination(6, 3, |_| n += 1);
        assert_eq!(n, 20);
        let mut m = 0;
        for_each_combination(4, 0, |c| {
            assert!(c.is_empty());
            m += 1
        });
        assert_eq!(m, 1);
        let mut first = Vec::new();
        for_each_combination(3, 2, |c| first.push(c.to_vec()));
        assert_eq!(first, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn set_file_round_trip() {
        let s = parse_set("2\n10\n01\n").unwrap();
        assert_eq!(s.words(), &[1, 2]);
        assert_eq!(serialize_set(&s), "2\n10\n01\n");
        let again = parse_set(&serialize_set(&s)).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn set_file_errors() {
        let e = parse_set("3\n102\n").unwrap_err().to_string();
        assert!(e.contains("bad character"), "{e}");
        assert!(parse_set("3\n10\n").unwrap_err().to_string().contains("expected 3"));
        let dup = parse_set("2\n10\n10\n").unwrap_err().to_string();
        assert!(dup.contains("duplicate") && dup.contains("line 3"), "{dup}");
        assert!(parse_set("").is_err());
        assert!(parse_set("31\n").is_err());
    }

    #[test]
    fn span_and_ops() {
        let h = F2Set::span(4, &[1, 2]).unwrap();
        assert_eq!(h.words(), &[0, 1, 2, 3]);
        let g = F2Set::from_words(4, [3, 8]).unwrap();
        assert_eq!(h.union(&g).unwrap().len(), 5);
        assert_eq!(h.intersection(&g).unwrap().words(), &[3]);
        assert_eq!(h.difference(&g).unwrap().words(), &[0, 1, 2]);
        assert!(F2Set::from_distinct_words(4, [1, 1]).is_err());
    }
}
