//! Permanents, Frobenius–König certificates and the permanent counting lemmas.

use crate::dissociation::{check_family, FamilySpec, FamilyStatus, DEFAULT_BUDGET};
use crate::energy::energy_multiset;
use crate::error::{Error, Result};
use crate::exact::{factorial, rat_int};
use crate::f2n::{for_each_combination, F2Set};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Nonnegative integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CombMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CombMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Parameter(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(CombMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parameter("ragged matrix rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(p: usize) -> Self {
        let mut data = vec![0; p * p];
        for i in 0..p {
            data[i * p + i] = 1;
        }
        CombMatrix { rows: p, cols: p, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> CombMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        CombMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Keeps the listed columns, in order.
    pub fn select_cols(&self, keep: &[usize]) -> CombMatrix {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            data.extend(keep.iter().map(|&j| self.get(i, j)));
        }
        CombMatrix { rows: self.rows, cols: keep.len(), data }
    }

    /// Parses the matrix file format: `"x y"` then `x` rows of integers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "missing \"x y\" header".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse { line: hl, msg: format!("bad size {t:?}") }))
            .collect::<Result<_>>()?;
        let [x, y] = dims[..] else {
            return Err(Error::Parse { line: hl, msg: "header must be \"x y\"".into() });
        };
        let mut data = Vec::with_capacity(x * y);
        let mut seen = 0;
        for (line, l) in lines {
            let row: Vec<u64> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse { line, msg: format!("bad entry {t:?}") }))
                .collect::<Result<_>>()?;
            if row.len() != y {
                return Err(Error::Parse { line, msg: format!("expected {y} entries, found {}", row.len()) });
            }
            data.extend(row);
            seen += 1;
        }
        if seen != x {
            return Err(Error::Parse { line: 0, msg: format!("expected {x} rows, found {seen}") });
        }
        Self::new(x, y, data)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Cap on the number of column subsets visited by [`permanent`].
pub const SUBSET_BUDGET: f64 = 5e7;

/// Exact permanent of an `x × y` matrix with `x <= y`, summed over injective
/// maps rows → columns.
///
/// Uses inclusion–exclusion over column sets `S` with `|S| <= x`, weighted by
/// `(-1)^{x-|S|} C(y-|S|, x-|S|)`.
pub fn permanent(h: &CombMatrix) -> Result<BigUint> {
    let (x, y) = (h.rows, h.cols);
    if x > y {
        return Err(Error::Parameter(format!("permanent needs rows <= cols, got {x}x{y}; transpose first")));
    }
    if x == 0 {
        return Ok(BigUint::one());
    }
    if x > 20 {
        return Err(Error::Budget(format!("permanent with {x} rows")));
    }
    let visits: f64 = (0..=x).map(|s| crate::exact::binomial_f64(y as u64, s as u64)).sum();
    if visits > SUBSET_BUDGET {
        return Err(Error::Budget(format!("{visits:.0} column subsets")));
    }
    let max_entry = h.data.iter().copied().max().unwrap_or(0) as f64;
    let small = (y as f64 * max_entry).log2() * x as f64 + (visits.log2() + 16.0) < 120.0;
    if small {
        let mut total: i128 = 0;
        let mut sums = vec![0u64; x];
        for s in 1..=x {
            let weight = crate::exact::binomial((y - s) as u64, (x - s) as u64).to_i128().unwrap();
            let sign = if (x - s) % 2 == 0 { 1 } else { -1 };
            for_each_combination(y, s, |cols| {
                for (i, slot) in sums.iter_mut().enumerate() {
                    *slot = cols.iter().map(|&j| h.get(i, j)).sum();
                }
                let prod: i128 = sums.iter().map(|&v| v as i128).product();
                total += sign * weight * prod;
            });
        }
        return Ok(BigUint::from(total as u128));
    }
    let mut total = BigInt::zero();
    for s in 1..=x {
        let weight = BigInt::from(crate::exact::binomial((y - s) as u64, (x - s) as u64));
        let negative = (x - s) % 2 == 1;
        for_each_combination(y, s, |cols| {
            let mut prod = BigInt::one();
            for i in 0..x {
                prod *= cols.iter().map(|&j| h.get(i, j)).sum::<u64>();
            }
            if negative {
                total -= &weight * prod;
            } else {
                total += &weight * prod;
            }
        });
    }
    Ok(total.to_biguint().expect("permanent is nonnegative"))
}

/// Outcome of the Frobenius–König test, in the input's coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum FkCertificate {
    /// `per = 0`: rows × cols is an all-zero block, with
    /// `|rows| + |cols| = max(x, y) + 1`.
    Zero { rows: Vec<usize>, cols: Vec<usize> },
    /// `per > 0`: a system of distinct representatives as (row, col) pairs.
    Positive { assignment: Vec<(usize, usize)> },
}

impl FkCertificate {
    pub fn is_zero(&self) -> bool {
        matches!(self, FkCertificate::Zero { .. })
    }
}

/// Maximum matching of rows into columns on the support; `match_row[i]` is
/// the column of row `i`.
fn max_matching(adj: &[Vec<usize>], cols: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], mr: &mut [Option<usize>], mc: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if mc[j].map_or(true, |i2| augment(i2, adj, seen, mr, mc)) {
                mr[i] = Some(j);
                mc[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut mr = vec![None; adj.len()];
    let mut mc = vec![None; cols];
    for i in 0..adj.len() {
        let mut seen = vec![false; cols];
        augment(i, adj, &mut seen, &mut mr, &mut mc);
    }
    (mr, mc)
}

/// Decides `per H = 0` by bipartite matching and returns a certificate.
pub fn fk_zero_test(h: &CombMatrix) -> FkCertificate {
    let transposed = h.rows > h.cols;
    let m = if transposed { h.transpose() } else { h.clone() };
    let (x, y) = (m.rows, m.cols);
    let adj: Vec<Vec<usize>> = (0..x).map(|i| (0..y).filter(|&j| m.get(i, j) > 0).collect()).collect();
    let (mr, mc) = max_matching(&adj, y);
    let orient = |r: usize, c: usize| if transposed { (c, r) } else { (r, c) };
    if mr.iter().all(Option::is_some) {
        let mut assignment: Vec<(usize, usize)> = mr.iter().enumerate().map(|(i, j)| orient(i, j.unwrap())).collect();
        assignment.sort_unstable();
        return FkCertificate::Positive { assignment };
    }
    // König: rows/cols reachable from free rows by alternating paths
    let mut row_in = vec![false; x];
    let mut col_in = vec![false; y];
    let mut stack: Vec<usize> = (0..x).filter(|&i| mr[i].is_none()).collect();
    for &i in &stack {
        row_in[i] = true;
    }
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !col_in[j] {
                col_in[j] = true;
                if let Some(i2) = mc[j] {
                    if !row_in[i2] {
                        row_in[i2] = true;
                        stack.push(i2);
                    }
                }
            }
        }
    }
    let zr: Vec<usize> = (0..x).filter(|&i| row_in[i]).collect();
    let mut zc: Vec<usize> = (0..y).filter(|&j| !col_in[j]).collect();
    zc.truncate(y + 1 - zr.len());
    let (rows, cols) = if transposed { (zc, zr) } else { (zr, zc) };
    FkCertificate::Zero { rows, cols }
}

/// Checks a certificate against the matrix.
pub fn verify_certificate(h: &CombMatrix, cert: &FkCertificate) -> bool {
    match cert {
        FkCertificate::Zero { rows, cols } => {
            rows.len() + cols.len() == h.rows.max(h.cols) + 1
                && rows.iter().all(|&i| cols.iter().all(|&j| h.get(i, j) == 0))
        }
        FkCertificate::Positive { assignment } => {
            let mut used_r = std::collections::HashSet::new();
            let mut used_c = std::collections::HashSet::new();
            assignment.len() == h.rows.min(h.cols)
                && assignment.iter().all(|&(i, j)| h.get(i, j) > 0 && used_r.insert(i) && used_c.insert(j))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerZeroReport {
    pub rows_at_least_two: bool,
    pub cols_at_least_one: bool,
    pub total_is_2p: bool,
    pub hypotheses_hold: bool,
    /// Columns of `H` kept in `H_0`.
    pub kept_cols: Vec<usize>,
    pub per_h0: Option<String>,
    pub per_h0_positive: Option<bool>,
}

/// Deletes columns of sum one and checks that the reduced matrix has a
/// positive permanent, provided the row, column and total hypotheses hold.
pub fn reduced_permanent_check(h: &CombMatrix) -> Result<PerZeroReport> {
    let p = h.rows;
    let rs = h.row_sums();
    let cs = h.col_sums();
    let rows_at_least_two = rs.iter().all(|&s| s >= 2);
    let cols_at_least_one = cs.iter().all(|&s| s >= 1);
    let total_is_2p = rs.iter().sum::<u64>() == 2 * p as u64;
    let hypotheses_hold = rows_at_least_two && cols_at_least_one && total_is_2p;
    let kept_cols: Vec<usize> = (0..h.cols).filter(|&j| cs[j] != 1).collect();
    let mut report = PerZeroReport {
        rows_at_least_two,
        cols_at_least_one,
        total_is_2p,
        hypotheses_hold,
        kept_cols: kept_cols.clone(),
        per_h0: None,
        per_h0_positive: None,
    };
    if !hypotheses_hold {
        return Ok(report);
    }
    let h0 = h.select_cols(&kept_cols);
    let oriented = if h0.rows > h0.cols { h0.transpose() } else { h0.clone() };
    let per = permanent(&oriented)?;
    let fk_positive = !fk_zero_test(&h0).is_zero();
    if fk_positive != !per.is_zero() {
        return Err(Error::Invariant("matching verdict disagrees with the permanent".into()));
    }
    report.per_h0 = Some(per.to_string());
    report.per_h0_positive = Some(fk_positive);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustivePerZero {
    pub p: usize,
    pub r: usize,
    pub matrices: u64,
    pub satisfying: u64,
    pub violations: Vec<CombMatrix>,
}

/// Runs [`reduced_permanent_check`] on every `{0,1,2}` matrix of shape `p × r`.
pub fn exhaustive_per_zero(p: usize, r: usize) -> Result<ExhaustivePerZero> {
    let cells = p * r;
    if cells > 16 {
        return Err(Error::Budget(format!("3^{cells} matrices")));
    }
    let total = 3u64.pow(cells as u32);
    let mut out = ExhaustivePerZero { p, r, matrices: total, satisfying: 0, violations: Vec::new() };
    let mut data = vec![0u64; cells];
    for code in 0..total {
        let mut c = code;
        for slot in data.iter_mut() {
            *slot = c % 3;
            c /= 3;
        }
        let h = CombMatrix::new(p, r, data.clone())?;
        let rep = reduced_permanent_check(&h)?;
        if rep.hypotheses_hold {
            out.satisfying += 1;
            if rep.per_h0_positive != Some(true) {
                out.violations.push(h);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiQuantity {
    pub t_max: u64,
    pub alphas: Vec<u64>,
    pub z: usize,
    pub q_z: u64,
    /// True when no cutoff satisfied the strict inequality and `π = T^p` was used.
    pub fallback: bool,
    pub pi: String,
}

/// The product `π = T^{α_0}(T-1)^{α_1}...(T-z)^{q_z}` for column sums `ts`.
pub fn pi_quantity(ts: &[u64], p: u64) -> Result<PiQuantity> {
    if ts.is_empty() || ts.iter().any(|&t| t < 2) {
        return Err(Error::Precondition("column sums must all be >= 2".into()));
    }
    let t = *ts.iter().max().unwrap();
    let alphas: Vec<u64> = (0..=t - 2).map(|i| ts.iter().filter(|&&tj| tj >= t - i).count() as u64).collect();
    let mut before = 0u64;
    let mut cut = None;
    for (z, &a) in alphas.iter().enumerate() {
        if before <= p && p < before + a {
            cut = Some((z, p - before));
            break;
        }
        before += a;
    }
    let (z, q_z, fallback) = match cut {
        Some((z, q)) => (z, q, false),
        None => (0, p, true),
    };
    let pi = if fallback {
        BigUint::from(t).pow(p as u32)
    } else {
        let mut acc = BigUint::one();
        for (i, &a) in alphas.iter().enumerate().take(z) {
            acc *= BigUint::from(t - i as u64).pow(a as u32);
        }
        acc * BigUint::from(t - z as u64).pow(q_z as u32)
    };
    Ok(PiQuantity { t_max: t, alphas, z, q_z, fallback, pi: pi.to_string() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiReport {
    pub quantity: PiQuantity,
    /// `floor(2^{3p} max(δ0^{4δ0}, 1))`; `π <= bound` iff `π` is at most the real bound.
    pub bound: String,
    pub holds: bool,
    /// For `δ0 < 1`, whether the sharper `π <= 2^{2p}` also holds.
    pub small_delta_bound_holds: Option<bool>,
}

/// `floor(2^{3p} δ^{4δ})` for rational `δ = a/b >= 1`.
fn floor_bound(p: u64, delta: &BigRational) -> BigUint {
    let a = delta.numer().magnitude().clone();
    let b = delta.denom().magnitude().clone();
    let e = 4 * a.to_u64().expect("small delta numerator");
    let bu = b.to_u32().expect("small delta denominator");
    // (2^{3p b} a^{4a} / b^{4a})^{1/b}
    let num = (BigUint::one() << (3 * p as usize * bu as usize)) * a.pow(e as u32);
    let den = b.pow(e as u32);
    (num / den).nth_root(bu)
}

/// π compared with `2^{3p} max(δ0^{4δ0}, 1)` after checking the lemma's
/// hypotheses `t_j >= 2`, `Σ t_j = 2p`, `r >= p - δ0` and `p >= 2δ0 + 3`.
pub fn pi_value(ts: &[u64], p: u64, delta0: &BigRational) -> Result<PiReport> {
    if !delta0.is_positive() {
        return Err(Error::Precondition("delta0 must be positive".into()));
    }
    if ts.iter().sum::<u64>() != 2 * p {
        return Err(Error::Precondition("column sums must total 2p".into()));
    }
    if rat_int(ts.len() as i64) < rat_int(p as i64) - delta0 {
        return Err(Error::Precondition("need r >= p - delta0".into()));
    }
    if rat_int(p as i64) < delta0 * rat_int(2) + rat_int(3) {
        return Err(Error::Precondition("need p >= 2 delta0 + 3".into()));
    }
    if delta0.denom().magnitude().bits() > 16 || delta0.numer().magnitude().bits() > 16 {
        return Err(Error::Budget("delta0 numerator and denominator limited to 16 bits".into()));
    }
    let quantity = pi_quantity(ts, p)?;
    let pi: BigUint = quantity.pi.parse().unwrap();
    let one = BigRational::one();
    let bound = if *delta0 >= one { floor_bound(p, delta0) } else { BigUint::one() << (3 * p as usize) };
    let holds = pi <= bound;
    let small_delta_bound_holds = (*delta0 < one).then(|| pi <= BigUint::one() << (2 * p as usize));
    Ok(PiReport { quantity, bound: bound.to_string(), holds, small_delta_bound_holds })
}

/// A partition of `0..2p` into nonempty classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionClasses {
    classes: Vec<Vec<usize>>,
}

impl PartitionClasses {
    pub fn new(size: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; size];
        for c in &classes {
            if c.is_empty() {
                return Err(Error::Parameter("empty partition class".into()));
            }
            for &i in c {
                if i >= size || seen[i] {
                    return Err(Error::Parameter(format!("index {i} repeated or out of range")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Parameter("classes do not cover the index range".into()));
        }
        Ok(PartitionClasses { classes })
    }

    pub fn singletons(size: usize) -> Self {
        PartitionClasses { classes: (0..size).map(|i| vec![i]).collect() }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SophisticatedReport {
    pub p: usize,
    /// Number of solutions of `λ_1 + ... + λ_{2p} = 0` with `λ_i ∈ E_i`.
    pub z: String,
    /// Sum of `per M(S*)` over admissible `S*`.
    pub bound: String,
    pub admissible_subsets: usize,
    pub holds: bool,
    /// `Z^2 <= (2^{2p} p!)^2 Π|E_α|`.
    pub corollary_holds: bool,
}

/// Compares the solution count `Z` with the permanent sum over index sets
/// `S*` of size `p` that meet every class of size at least two.
pub fn sophisticated_bound(es: &[F2Set], classes: &PartitionClasses, lambda: &F2Set) -> Result<SophisticatedReport> {
    let m = es.len();
    if m == 0 || m % 2 != 0 {
        return Err(Error::Parameter("need 2p sets".into()));
    }
    let p = m / 2;
    if p > 4 {
        return Err(Error::Budget(format!("p = {p} exceeds 4")));
    }
    if classes.classes.iter().map(Vec::len).sum::<usize>() != m {
        return Err(Error::Parameter("partition size differs from 2p".into()));
    }
    if let Some(e) = es.iter().find(|e| !e.is_subset(lambda)) {
        return Err(Error::Precondition(format!("a set of size {} is not inside Lambda", e.len())));
    }
    let spec = FamilySpec::zero(2 * p, lambda.dim())?;
    match check_family(lambda, &spec, DEFAULT_BUDGET)? {
        FamilyStatus::InFamily => {}
        other => return Err(Error::Precondition(format!("Lambda in Λ(2p) is {}", other.as_str()))),
    }
    let z = energy_multiset(es)?;
    let inter: Vec<Vec<u64>> =
        es.iter().map(|a| es.iter().map(|b| a.intersection(b).unwrap().len() as u64).collect()).collect();
    let big_classes: Vec<&Vec<usize>> = classes.classes.iter().filter(|c| c.len() >= 2).collect();
    let mut bound = BigUint::zero();
    let mut admissible = 0;
    let mut err = None;
    for_each_combination(m, p, |s| {
        if !big_classes.iter().all(|c| c.iter().any(|i| s.contains(i))) {
            return;
        }
        admissible += 1;
        let comp: Vec<usize> = (0..m).filter(|i| !s.contains(i)).collect();
        let rows: Vec<Vec<u64>> = s.iter().map(|&i| comp.iter().map(|&j| inter[i][j]).collect()).collect();
        match CombMatrix::from_rows(&rows).and_then(|h| permanent(&h)) {
            Ok(v) => bound += v,
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let holds = z <= bound;
    let lhs = &z * &z;
    let c = (BigUint::one() << (2 * p)) * factorial(p as u64);
    let rhs = es.iter().fold(&c * &c, |acc, e| acc * BigUint::from(e.len()));
    Ok(SophisticatedReport {
        p,
        z: z.to_string(),
        bound: bound.to_string(),
        admissible_subsets: admissible,
        holds,
        corollary_holds: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{big, rat};

    fn brute_per(h: &CombMatrix) -> BigUint {
        fn rec(h: &CombMatrix, i: usize, used: &mut Vec<bool>) -> BigUint {
            if i == h.rows() {
                return BigUint::one();
            }
            let mut acc = BigUint::zero();
            for j in 0..h.cols() {
                if !used[j] && h.get(i, j) > 0 {
                    used[j] = true;
                    acc += rec(h, i + 1, used) * h.get(i, j);
                    used[j] = false;
                }
            }
            acc
        }
        rec(h, 0, &mut vec![false; h.cols()])
    }

    #[test]
    fn small_permanents() {
        assert_eq!(permanent(&CombMatrix::identity(3)).unwrap(), big(1));
        let ones = CombMatrix::new(3, 3, vec![1; 9]).unwrap();
        assert_eq!(permanent(&ones).unwrap(), big(6));
        let rect = CombMatrix::new(2, 3, vec![1; 6]).unwrap();
        assert_eq!(permanent(&rect).unwrap(), big(6));
        assert!(permanent(&rect.transpose()).is_err());
        let m = CombMatrix::from_rows(&[vec![2, 0, 3, 1], vec![1, 4, 0, 2], vec![0, 1, 5, 1]]).unwrap();
        assert_eq!(permanent(&m).unwrap(), brute_per(&m));
        let big_entries = CombMatrix::new(3, 3, vec![u32::MAX as u64; 9]).unwrap();
        assert_eq!(permanent(&big_entries).unwrap(), brute_per(&big_entries));
    }

    #[test]
    fn fk_examples() {
        let m = CombMatrix::from_rows(&[vec![0, 0], vec![1, 1]]).unwrap();
        let c = fk_zero_test(&m);
        assert_eq!(c, FkCertificate::Zero { rows: vec![0], cols: vec![0, 1] });
        assert!(verify_certificate(&m, &c));
        let id = CombMatrix::identity(4);
        assert_eq!(fk_zero_test(&id), FkCertificate::Positive { assignment: (0..4).map(|i| (i, i)).collect() });
        let tall = CombMatrix::from_rows(&[vec![1, 0], vec![1, 0], vec![1, 0]]).unwrap();
        let c = fk_zero_test(&tall);
        assert!(c.is_zero() && verify_certificate(&tall, &c));
    }

    #[test]
    fn per_zero_lemma() {
        let h = CombMatrix::new(3, 3, vec![2, 0, 0, 0, 2, 0, 0, 0, 2]).unwrap();
        let r = reduced_permanent_check(&h).unwrap();
        assert!(r.hypotheses_hold);
        assert_eq!(r.per_h0.as_deref(), Some("8"));
        let bad = CombMatrix::new(2, 2, vec![1, 0, 0, 3]).unwrap();
        let r = reduced_permanent_check(&bad).unwrap();
        assert!(!r.rows_at_least_two && !r.hypotheses_hold);
        let ex = exhaustive_per_zero(2, 3).unwrap();
        assert!(ex.satisfying > 0 && ex.violations.is_empty());
    }

    #[test]
    fn pi_examples() {
        let q = pi_quantity(&[4, 2, 2], 4).unwrap();
        assert_eq!((q.t_max, q.alphas.clone(), q.z, q.q_z, q.pi.as_str()), (4, vec![1, 1, 3], 2, 2, "48"));
        let q = pi_quantity(&[2, 2, 2, 2, 2], 5).unwrap();
        assert!(q.fallback);
        assert_eq!(q.pi, "32");
        let r = pi_value(&[2, 2, 2, 2, 2], 5, &rat(1, 2)).unwrap();
        assert!(r.holds && r.small_delta_bound_holds == Some(true));
        let r = pi_value(&[3, 3, 2, 2, 2, 2, 2, 2], 9, &rat(3, 1)).unwrap();
        assert!(r.holds);
        assert_eq!(r.bound, (BigUint::from(2u32).pow(27) * BigUint::from(3u32).pow(12)).to_string());
        assert!(pi_value(&[4, 2, 2], 4, &rat(1, 1)).is_err());
    }

    #[test]
    fn sophisticated_examples() {
        let lam = F2Set::basis(4, 6).unwrap();
        let es = vec![lam.clone(); 4];
        let r = sophisticated_bound(&es, &PartitionClasses::singletons(4), &lam).unwrap();
        assert_eq!(r.z, "40");
        assert!(r.holds && r.corollary_holds);
        let dis: Vec<F2Set> = (0..4).map(|i| F2Set::from_words(6, [1u32 << i]).unwrap()).collect();
        let r = sophisticated_bound(&dis, &PartitionClasses::singletons(4), &lam).unwrap();
        assert_eq!(r.z, "0");
        let pair = vec![dis[0].clone(), dis[0].clone(), dis[1].clone(), dis[1].clone()];
        let classes = PartitionClasses::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let r = sophisticated_bound(&pair, &classes, &lam).unwrap();
        assert_eq!(r.z, "1");
        assert!(r.holds);
        let dep = F2Set::from_words(3, [1, 2, 3]).unwrap();
        assert!(sophisticated_bound(&[dep.clone(), dep.clone(), dep.clone(), dep.clone()], &PartitionClasses::singletons(4), &dep).is_err());
    }
}
