//! Instance-level checkers for the energy and spectrum inequalities, the
//! majority-set construction, and a seeded sweep harness.

use crate::dissociation::{check_family, is_dissociated, random_dissociated, FamilySpec, FamilyStatus, DEFAULT_BUDGET};
use crate::energy::energy_auto;
use crate::error::{Error, Result};
use crate::exact::{binomial, factorial, floor_log2, format_rational, le_coef_log_pow, log2_interval, rat, rat_int, rational_to_f64, slack, uint_to_rat};
use crate::f2n::{dotplus_power, F2Set};
use crate::seeded_rng;
use crate::spectrum::{large_spectrum, large_spectrum_of, spectrum_of_set};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// Outcome of one inequality check, oriented as `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: String,
    pub lhs: String,
    /// Exact value, or a rational lower bound when the bound involves logarithms.
    pub rhs: String,
    pub holds: bool,
    /// `rhs / lhs`.
    pub slack: f64,
    pub instance: String,
    /// Auxiliary quantities and secondary verdicts.
    pub extra: BTreeMap<String, String>,
    #[serde(skip)]
    pub runtime_ms: f64,
}

impl BoundReport {
    fn new(theorem: &str, instance: String, lhs: &BigRational, rhs: &BigRational, holds: bool) -> Self {
        BoundReport {
            theorem: theorem.into(),
            lhs: format_rational(lhs),
            rhs: format_rational(rhs),
            holds,
            slack: slack(lhs, rhs),
            instance,
            extra: BTreeMap::new(),
            runtime_ms: 0.0,
        }
    }

    fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.into(), value.to_string());
        self
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }
}

fn density(a: &F2Set) -> Result<BigRational> {
    if a.is_empty() {
        return Err(Error::Empty("density of the empty set"));
    }
    Ok(BigRational::new(BigInt::from(a.len()), BigInt::one() << a.dim() as usize))
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    BigRational::new(x.numer().pow(e as u32), x.denom().pow(e as u32))
}

fn big(x: usize) -> BigRational {
    rat_int(x as i64)
}

fn describe(a: &F2Set) -> String {
    format!("n={} |A|={}", a.dim(), a.len())
}

fn require_family(l: &F2Set, k: usize) -> Result<()> {
    match check_family(l, &FamilySpec::zero(k, l.dim())?, DEFAULT_BUDGET)? {
        FamilyStatus::InFamily => Ok(()),
        FamilyStatus::NotInFamily => Err(Error::Precondition(format!("Lambda is not in the weight-{k} family"))),
        FamilyStatus::UndecidedByBudget => Err(Error::Precondition(format!("weight-{k} family membership undecided"))),
    }
}

fn require_in_spectrum(b: &F2Set, a: &F2Set, alpha: &BigRational) -> Result<F2Set> {
    let r = large_spectrum(a, alpha)?;
    if !b.is_subset(&r) {
        return Err(Error::Precondition("set is not inside the large spectrum".into()));
    }
    Ok(r)
}

fn log_rhs(coef: &BigRational, arg: &BigRational, d: u32) -> BigRational {
    let (lo, _) = log2_interval(arg, 40);
    let lo = if lo.is_negative() { BigRational::zero() } else { lo };
    coef * lo.pow(d as i32)
}

fn log_slack(lhs: &BigRational, coef: &BigRational, arg: &BigRational, d: u32) -> f64 {
    let l = crate::exact::log2_rational(arg);
    let rhs = rational_to_f64(coef) * l.powi(d as i32);
    let lhs = rational_to_f64(lhs);
    if lhs == 0.0 {
        if rhs == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        rhs / lhs
    }
}

/// Size of a dissociated subset of the large spectrum against `2(δ/α)^2 log(1/δ)`.
pub fn check_chang(a: &F2Set, alpha: &BigRational, lambda: &F2Set) -> Result<BoundReport> {
    let start = Instant::now();
    let delta = density(a)?;
    if !is_dissociated(lambda) {
        return Err(Error::Precondition("Lambda is not dissociated".into()));
    }
    require_in_spectrum(lambda, a, alpha)?;
    let lhs = big(lambda.len());
    let coef = rat_int(2) * pow(&(&delta / alpha), 2);
    let arg = delta.recip();
    let holds = le_coef_log_pow(&lhs, &coef, &arg, 1)?;
    let mut rep = BoundReport::new("chang", format!("{} alpha={} |Lambda|={}", describe(a), format_rational(alpha), lambda.len()), &lhs, &log_rhs(&coef, &arg, 1), holds);
    rep.slack = log_slack(&lhs, &coef, &arg, 1);
    Ok(rep.timed(start))
}

/// `|R_α| <= δ/α^2`.
pub fn check_parseval_spectrum(a: &F2Set, alpha: &BigRational) -> Result<BoundReport> {
    let start = Instant::now();
    let delta = density(a)?;
    let r = large_spectrum(a, alpha)?;
    let lhs = big(r.len());
    let rhs = &delta / pow(alpha, 2);
    let holds = lhs <= rhs;
    Ok(BoundReport::new("parseval", format!("{} alpha={}", describe(a), format_rational(alpha)), &lhs, &rhs, holds).timed(start))
}

/// `T_p(Λ) <= p^p |Λ|^p` for `Λ` in the weight-`2p` family.
pub fn check_diss_energy(lambda: &F2Set, p: usize) -> Result<BoundReport> {
    let start = Instant::now();
    if p == 0 {
        return Err(Error::Parameter("p must be >= 1".into()));
    }
    if lambda.is_empty() {
        return Err(Error::Empty("Lambda"));
    }
    require_family(lambda, 2 * p)?;
    let lhs = uint_to_rat(&energy_auto(lambda, p)?);
    let rhs = uint_to_rat(&(BigUint::from(p).pow(p as u32) * BigUint::from(lambda.len()).pow(p as u32)));
    let holds = lhs <= rhs;
    Ok(BoundReport::new("diss", format!("n={} |Lambda|={} p={p}", lambda.dim(), lambda.len()), &lhs, &rhs, holds).timed(start))
}

/// Even moment `N^{-1} Σ_x |Σ_λ a_λ (-1)^{<λ,x>}|^{2p}` against `p^p (Σ a_λ^2)^p`.
///
/// For independent `Λ` the map `x -> (<λ,x>)_λ` is onto with equal fibers, so
/// the moment is computed over `F_2^{|Λ|}` with `Λ` replaced by the basis.
pub fn check_rudin_even(lambda: &F2Set, coeffs: &[i64], p: usize) -> Result<BoundReport> {
    let start = Instant::now();
    if p == 0 {
        return Err(Error::Parameter("p must be >= 1".into()));
    }
    if coeffs.len() != lambda.len() {
        return Err(Error::Parameter(format!("{} coefficients for {} frequencies", coeffs.len(), lambda.len())));
    }
    if !is_dissociated(lambda) {
        return Err(Error::Precondition("Lambda is not dissociated".into()));
    }
    let m = lambda.len();
    if m > 22 {
        return Err(Error::Budget(format!("moment over 2^{m} points")));
    }
    let l1: i64 = coeffs.iter().map(|a| a.abs()).sum();
    let wide = (l1.max(1) as f64).log2() * (2 * p) as f64 + (m as f64) < 126.0;
    let values = (0..1u64 << m).into_par_iter().map(|y| {
        (0..m).map(|i| if y >> i & 1 == 1 { -coeffs[i] } else { coeffs[i] }).sum::<i64>()
    });
    let total: BigUint = if wide {
        BigUint::from(values.map(|f| (f.unsigned_abs() as u128).pow(2 * p as u32)).sum::<u128>())
    } else {
        values.map(|f| BigUint::from(f.unsigned_abs()).pow(2 * p as u32)).reduce(BigUint::zero, |a, b| a + b)
    };
    let lhs = BigRational::new(BigInt::from(total), BigInt::one() << m);
    let l2: u128 = coeffs.iter().map(|a| (a.unsigned_abs() as u128).pow(2)).sum();
    let l2p = uint_to_rat(&BigUint::from(l2).pow(p as u32));
    let rhs = uint_to_rat(&BigUint::from(p).pow(p as u32)) * &l2p;
    let holds = lhs <= rhs;
    let constant = if l2p.is_zero() { BigRational::zero() } else { &lhs / &l2p };
    Ok(BoundReport::new("rudin", format!("|Lambda|={m} p={p} sum_a2={l2}"), &lhs, &rhs, holds)
        .note("smallest_constant", format_rational(&constant))
        .timed(start))
}

/// `T_p(Q) <= 2^{8dp} p^{dp} |Q|^p` for `Q` inside the `d`-fold distinct sumset.
///
/// The size condition `|Λ| >= 4d^2` is reported in `extra` rather than
/// enforced, so small instances can still be compared.
pub fn check_sumset_energy(q: &F2Set, lambda: &F2Set, d: usize, p: usize) -> Result<BoundReport> {
    let start = Instant::now();
    if d == 0 || p == 0 {
        return Err(Error::Parameter("d and p must be >= 1".into()));
    }
    if q.is_empty() {
        return Err(Error::Empty("Q"));
    }
    require_family(lambda, 2 * d * p)?;
    if !q.is_subset(&dotplus_power(lambda, d)?) {
        return Err(Error::Precondition("Q is not inside the d-fold distinct sumset".into()));
    }
    let lhs = uint_to_rat(&energy_auto(q, p)?);
    let (du, pu) = (d as u32, p as u32);
    let rhs = uint_to_rat(&((BigUint::one() << (8 * d * p)) * BigUint::from(p).pow(du * pu) * BigUint::from(q.len()).pow(pu)));
    let holds = lhs <= rhs;
    Ok(BoundReport::new("dissd", format!("|Lambda|={} d={d} p={p} |Q|={}", lambda.len(), q.len()), &lhs, &rhs, holds)
        .note("size_hypothesis", lambda.len() >= 4 * d * d)
        .timed(start))
}

/// `T_p(Q) >= 2^{-3pd} p^{pd} |Q|^p` for the full sumset `Q = d·Λ_1`, together
/// with the counting bound `T_p(Q) >= C(|Λ_1|, pd) ((pd)!/(d!)^p)^2`.
pub fn check_full_sumset_lower(lambda1: &F2Set, d: usize, p: usize) -> Result<BoundReport> {
    let start = Instant::now();
    if d == 0 || p == 0 {
        return Err(Error::Parameter("d and p must be >= 1".into()));
    }
    if 2 * d * p > lambda1.len() {
        return Err(Error::Precondition(format!("p = {p} exceeds |Lambda_1|/(2d)")));
    }
    require_family(lambda1, 2 * d)?;
    let q = dotplus_power(lambda1, d)?;
    let t = uint_to_rat(&energy_auto(&q, p)?);
    let (du, pu) = (d as u32, p as u32);
    let lower = BigRational::new(BigInt::from(p).pow(du * pu) * BigInt::from(q.len()).pow(pu), BigInt::one() << (3 * p * d));
    let multinomial = factorial((p * d) as u64) / factorial(d as u64).pow(pu);
    let counting = uint_to_rat(&(binomial(lambda1.len() as u64, (p * d) as u64) * &multinomial * &multinomial));
    let intermediate = counting <= t;
    let holds = lower <= t && intermediate;
    Ok(BoundReport::new("exact", format!("|Lambda_1|={} d={d} p={p} |Q|={}", lambda1.len(), q.len()), &lower, &t, holds)
        .note("intermediate_bound", format_rational(&counting))
        .note("intermediate_holds", intermediate)
        .timed(start))
}

/// `T_k(B) >= δ α^{2k} δ^{-2k} |B|^{2k}` for `B` inside `R_α(A)`.
pub fn check_spectrum_energy_lower(a: &F2Set, b: &F2Set, alpha: &BigRational, k: usize) -> Result<BoundReport> {
    let start = Instant::now();
    if k == 0 {
        return Err(Error::Parameter("k must be >= 1".into()));
    }
    if b.is_empty() {
        return Err(Error::Empty("B"));
    }
    let delta = density(a)?;
    require_in_spectrum(b, a, alpha)?;
    let lhs = &delta * pow(&(alpha / &delta), 2 * k) * pow(&big(b.len()), 2 * k);
    let rhs = uint_to_rat(&energy_auto(b, k)?);
    let holds = lhs <= rhs;
    Ok(BoundReport::new("maing", format!("{} alpha={} |B|={} k={k}", describe(a), format_rational(alpha), b.len()), &lhs, &rhs, holds).timed(start))
}

/// `|d·Λ ∩ R_α| <= (δ/α)^2 (2^{12} log(1/δ)/d)^d`.
pub fn check_bourgain_intersection(a: &F2Set, lambda: &F2Set, alpha: &BigRational, d: usize) -> Result<BoundReport> {
    let start = Instant::now();
    let delta = density(a)?;
    if d == 0 {
        return Err(Error::Parameter("d must be >= 1".into()));
    }
    if delta > rat(1, 4) {
        return Err(Error::Precondition("delta exceeds 1/4".into()));
    }
    if !alpha.is_positive() || *alpha > delta {
        return Err(Error::Precondition("need 0 < alpha <= delta".into()));
    }
    let inv = delta.recip();
    // d <= log(1/δ)/4  <=>  2^{4d} <= 1/δ
    if rat_int(BigInt::one() << (4 * d)) > inv {
        return Err(Error::Precondition(format!("d = {d} exceeds log(1/delta)/4")));
    }
    let weight = floor_log2(&pow(&inv, 2)) as usize;
    require_family(lambda, weight)?;
    let r = large_spectrum(a, alpha)?;
    let lhs = big(dotplus_power(lambda, d)?.intersection(&r)?.len());
    let coef = pow(&(&delta / alpha), 2) * pow(&rat(4096, d as i64), d);
    let holds = le_coef_log_pow(&lhs, &coef, &inv, d as u32)?;
    let mut rep = BoundReport::new("bourgain", format!("{} alpha={} |Lambda|={} d={d}", describe(a), format_rational(alpha), lambda.len()), &lhs, &log_rhs(&coef, &inv, d as u32), holds)
        .note("family_weight", weight);
    rep.slack = log_slack(&lhs, &coef, &inv, d as u32);
    Ok(rep.timed(start))
}

/// All weight-`l` vectors of `F_2^{n'}`.
pub fn hamming_sphere(nprime: u32, l: u32) -> Result<F2Set> {
    if l > nprime {
        return Err(Error::Parameter(format!("weight {l} exceeds {nprime}")));
    }
    F2Set::full(nprime)?.words().iter().copied().filter(|w| w.count_ones() == l).try_fold(Vec::new(), |mut v, w| {
        v.push(w);
        Ok::<_, Error>(v)
    }).and_then(|v| F2Set::from_words(nprime, v))
}

/// Majority set of weight at least `n'/2` in `F_2^{n'}`.
pub fn majority_core(nprime: u32) -> Result<F2Set> {
    let half = nprime.div_ceil(2);
    F2Set::from_words(nprime, (0..1u32 << nprime).filter(|w| w.count_ones() >= half))
}

/// `Σ_{s >= n'/2} ((2s - n')/n') C(n', s)`, the coefficient of the majority
/// set at any weight-one frequency.
pub fn majority_coefficient(nprime: u32) -> BigRational {
    let n = nprime as u64;
    (n.div_ceil(2)..=n)
        .map(|s| rat(2 * s as i64 - n as i64, n as i64) * uint_to_rat(&binomial(n, s)))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// The same coefficient as `|Σ_{s >= n'/2} (2 C(n'-1, s) - C(n', s))|`.
pub fn majority_coefficient_direct(nprime: u32) -> BigInt {
    let n = nprime as u64;
    let sum: BigInt = (n.div_ceil(2)..=n)
        .map(|s| BigInt::from(binomial(n - 1, s)) * 2 - BigInt::from(binomial(n, s)))
        .sum();
    sum.abs()
}

/// Formula value and the brute-force spectrum value at every weight-one
/// frequency of the majority set in `F_2^{n'}`.
pub fn majority_spectrum_agreement(nprime: u32) -> Result<(BigRational, Vec<BigInt>)> {
    let a = majority_core(nprime)?;
    let spec = spectrum_of_set(&a);
    let brute = (0..nprime).map(|i| spec.get(1 << i).abs()).collect();
    Ok((majority_coefficient(nprime), brute))
}

/// The majority-set construction inside `F_2^n`.
///
/// `H` is spanned by the first `n' = n - k` coordinates and `H^⊥` by the
/// last `k`. The threshold `α` is re-derived as the exact weight-one
/// coefficient over `N`; `alpha_constant_sq` is `c^2` for `α = cδ/√n`.
#[derive(Clone, Debug, Serialize)]
pub struct MajorityInstance {
    pub n: u32,
    #[serde(with = "crate::exact::rational_str")]
    pub delta: BigRational,
    pub k: u32,
    pub nprime: u32,
    /// Coordinates spanning `H` and `H^⊥`.
    pub h: (u32, u32),
    pub h_perp: (u32, u32),
    #[serde(skip)]
    pub a: F2Set,
    pub a_size: usize,
    #[serde(with = "crate::exact::rational_str")]
    pub alpha: BigRational,
    #[serde(with = "crate::exact::rational_str")]
    pub alpha_constant_sq: BigRational,
    /// `α >= 2^{-12} δ/√n`, decided by squaring.
    pub alpha_dominates_fixed: bool,
}

/// Builds the majority instance for `1/N <= δ <= 1/16`, `k = ⌊log 1/(4δ)⌋`.
pub fn build_majority(n: u32, delta: &BigRational) -> Result<MajorityInstance> {
    if !(3..=24).contains(&n) {
        return Err(Error::Parameter(format!("n = {n} outside 3..=24")));
    }
    let nn = BigRational::new(BigInt::one(), BigInt::one() << n as usize);
    if *delta < nn || *delta > rat(1, 16) {
        return Err(Error::Parameter("need 1/N <= delta <= 1/16".into()));
    }
    let k = floor_log2(&(rat(1, 4) / delta)) as u32;
    if k >= n {
        return Err(Error::Parameter("k = n leaves no majority coordinates".into()));
    }
    let nprime = n - k;
    let a = F2Set::from_words(n, majority_core(nprime)?.words().iter().copied())?;
    let coef = majority_coefficient(nprime);
    let alpha = &coef * &nn;
    let alpha_constant_sq = pow(&alpha, 2) * big(n as usize) / pow(delta, 2);
    let alpha_dominates_fixed = alpha_constant_sq >= BigRational::new(BigInt::one(), BigInt::one() << 24);
    Ok(MajorityInstance {
        n,
        delta: delta.clone(),
        k,
        nprime,
        h: (0, nprime),
        h_perp: (nprime, n),
        a_size: a.len(),
        a,
        alpha,
        alpha_constant_sq,
        alpha_dominates_fixed,
    })
}

/// Verifies the construction: the size of `A`, the weight-one spectrum
/// against the binomial formula, `|R_α| >= n' 2^k`, `H_1 + H^⊥ ⊆ R_α`, and
/// `|d·Λ ∩ R_α| >= n' C(k, d-1)` for `Λ` the standard basis.
pub fn verify_majority(inst: &MajorityInstance, d: usize) -> Result<BoundReport> {
    let start = Instant::now();
    if d == 0 {
        return Err(Error::Parameter("d must be >= 1".into()));
    }
    let (n, k, np) = (inst.n, inst.k, inst.nprime);
    let size = inst.a.len();
    let size_ok = (1usize << (n - k - 2)) <= size && size <= 1usize << (n - k);
    let nn = BigInt::one() << n as usize;
    let dens = rat_int(size as i64);
    let delta_n = &inst.delta * rat_int(nn.clone());
    let density_ok = delta_n <= dens && dens <= rat_int(8) * &delta_n;
    // Â(r + h) = Â'(r) since A has no support on H^⊥
    let core = F2Set::from_words(np, inst.a.words().iter().copied())?;
    let spec = spectrum_of_set(&core);
    let formula = majority_coefficient(np);
    let direct = majority_coefficient_direct(np);
    let agree = formula.is_integer()
        && formula.to_integer() == direct
        && (0..np).all(|i| rat_int(spec.get(1 << i).abs()) == formula);
    let alpha_prime = &inst.alpha * rat_int(BigInt::one() << k as usize);
    let r_core = large_spectrum_of(&spec, &alpha_prime)?;
    let r_size = BigUint::from(r_core.len()) << k as usize;
    let r_lower_ok = r_size >= BigUint::from(np) << k as usize;
    let contains = (0..np).all(|i| r_core.contains_word(1 << i));
    let structure = r_core.len() == np as usize + 1 && r_core.contains_word(0);
    // |d·Λ ∩ R_α| = Σ_j #{r' in R' of weight j} C(k, d - j)
    let mut by_weight = vec![0u64; np as usize + 1];
    for &w in r_core.words() {
        by_weight[w.count_ones() as usize] += 1;
    }
    let count: BigUint = (0..=d.min(np as usize))
        .map(|j| BigUint::from(by_weight[j]) * binomial(k as u64, (d - j) as u64))
        .sum();
    let path = BigUint::from(np) * binomial(k as u64, (d - 1) as u64);
    let lhs = uint_to_rat(&path);
    let rhs = uint_to_rat(&count);
    let holds = size_ok && density_ok && agree && r_lower_ok && contains && lhs <= rhs;
    Ok(BoundReport::new("majority", format!("n={n} delta={} k={k} d={d}", format_rational(&inst.delta)), &lhs, &rhs, holds)
        .note("a_size", size)
        .note("a_size_bounds", size_ok)
        .note("density_bounds", density_ok)
        .note("coefficient", format_rational(&formula))
        .note("spectrum_agrees", agree)
        .note("r_alpha_size", &r_size)
        .note("r_alpha_lower_holds", r_lower_ok)
        .note("h1_plus_hperp_inside", contains)
        .note("r_alpha_is_h1_structure", structure)
        .note("alpha", format_rational(&inst.alpha))
        .note("alpha_constant_sq", format_rational(&inst.alpha_constant_sq))
        .note("alpha_dominates_fixed", inst.alpha_dominates_fixed)
        .timed(start))
}

/// Largest independent subset of `s \ {0}`, taken greedily in word order.
pub fn maximal_dissociated_subset(s: &F2Set) -> F2Set {
    let mut basis = [0u32; 32];
    let mut kept = Vec::new();
    for &w in s.words() {
        let mut x = w;
        for b in (0..32).rev() {
            if x >> b & 1 == 0 {
                continue;
            }
            if basis[b] == 0 {
                basis[b] = x;
                kept.push(w);
                break;
            }
            x ^= basis[b];
        }
    }
    F2Set::from_sorted_unchecked(s.dim(), kept)
}

/// Theorems covered by [`sweep`].
pub const THEOREMS: [&str; 9] = ["chang", "parseval", "diss", "rudin", "dissd", "exact", "maing", "bourgain", "majority"];

/// Seeded family of random instances for one theorem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub theorem: String,
    pub instances: usize,
    pub seed: u64,
    /// Largest ambient dimension of random sets.
    pub max_dim: u32,
    /// Largest dissociated set.
    pub max_lambda: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { theorem: "diss".into(), instances: 100, seed: 0, max_dim: 10, max_lambda: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: usize,
    pub report: BoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub violations: usize,
    /// Instances whose preconditions could not be established, with the reason.
    pub skipped: Vec<(usize, String)>,
}

fn instance_seed(seed: u64, id: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (id as u64).wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17)
}

fn random_set(rng: &mut impl Rng, dim: u32) -> F2Set {
    let n = 1usize << dim;
    let size = rng.gen_range(1..=n / 2);
    let words: Vec<u32> = (0..n as u32).collect::<Vec<_>>().choose_multiple(rng, size).copied().collect();
    F2Set::from_words(dim, words).unwrap()
}

/// A threshold that puts a random nonzero frequency into the large spectrum.
fn random_alpha(rng: &mut impl Rng, a: &F2Set) -> BigRational {
    let spec = spectrum_of_set(a);
    let nz: Vec<BigInt> = spec.values().iter().skip(1).filter(|v| !v.is_zero()).map(|v| v.abs()).collect();
    let top = match nz.choose(rng) {
        Some(v) => v.clone(),
        None => BigInt::from(a.len()),
    };
    BigRational::new(top, BigInt::one() << a.dim() as usize)
}

fn random_subset(rng: &mut impl Rng, s: &F2Set) -> F2Set {
    let size = rng.gen_range(1..=s.len());
    F2Set::from_words(s.dim(), s.words().choose_multiple(rng, size).copied()).unwrap()
}

fn random_lambda(rng: &mut impl Rng, dim: u32, size: usize) -> Result<F2Set> {
    random_dissociated(dim, size, &FamilySpec::zero(size, dim)?, rng.gen())
}

fn sparse_set(rng: &mut impl Rng, dim: u32, max_density_log: u32) -> F2Set {
    let n = 1usize << dim;
    let cap = (n >> max_density_log).max(1);
    let size = rng.gen_range(1..=cap);
    F2Set::from_words(dim, (0..n as u32).collect::<Vec<_>>().choose_multiple(rng, size).copied()).unwrap()
}

/// Runs one random instance of the named theorem.
pub fn sweep_instance(cfg: &SweepConfig, id: usize) -> Result<BoundReport> {
    let mut rng = seeded_rng(instance_seed(cfg.seed, id));
    let max_dim = cfg.max_dim.clamp(3, 16);
    let max_l = cfg.max_lambda.clamp(1, 14);
    let tag = |mut r: BoundReport| {
        r.instance = format!("{id}: {}", r.instance);
        r
    };
    let rep = match cfg.theorem.as_str() {
        "chang" => {
            let dim = rng.gen_range(2..=max_dim);
            let a = random_set(&mut rng, dim);
            let alpha = random_alpha(&mut rng, &a);
            let r = large_spectrum(&a, &alpha)?;
            check_chang(&a, &alpha, &maximal_dissociated_subset(&r))?
        }
        "parseval" => {
            let dim = rng.gen_range(2..=max_dim);
            let a = random_set(&mut rng, dim);
            let alpha = random_alpha(&mut rng, &a);
            check_parseval_spectrum(&a, &alpha)?
        }
        "diss" => {
            let size = rng.gen_range(1..=max_l);
            let dim = rng.gen_range(size.max(3) as u32..=(size as u32 + 2).max(max_dim));
            let lam = random_lambda(&mut rng, dim, size)?;
            check_diss_energy(&lam, rng.gen_range(2..=3))?
        }
        "rudin" => {
            let size = rng.gen_range(1..=max_l);
            let lam = random_lambda(&mut rng, (size as u32 + 2).max(max_dim), size)?;
            let mut coeffs: Vec<i64> = (0..size).map(|_| rng.gen_range(-3..=3)).collect();
            if coeffs.iter().all(|&c| c == 0) {
                coeffs[0] = 1;
            }
            check_rudin_even(&lam, &coeffs, rng.gen_range(1..=3))?
        }
        "dissd" => {
            let d = rng.gen_range(1..=3usize);
            let size = rng.gen_range(d..=max_l.max(d));
            let lam = random_lambda(&mut rng, (size as u32 + 2).max(max_dim), size)?;
            let full = dotplus_power(&lam, d)?;
            let q = random_subset(&mut rng, &full);
            check_sumset_energy(&q, &lam, d, rng.gen_range(2..=3))?
        }
        "exact" => {
            let size = rng.gen_range(4..=max_l.max(4));
            let combos: Vec<(usize, usize)> = [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2), (3, 3)]
                .into_iter()
                .filter(|&(d, p)| 2 * d * p <= size)
                .collect();
            let &(d, p) = combos.choose(&mut rng).unwrap();
            let lam = random_lambda(&mut rng, (size as u32 + 2).max(max_dim), size)?;
            check_full_sumset_lower(&lam, d, p)?
        }
        "maing" => {
            let dim = rng.gen_range(2..=max_dim.min(12));
            let a = random_set(&mut rng, dim);
            let alpha = random_alpha(&mut rng, &a);
            let r = large_spectrum(&a, &alpha)?;
            let b = random_subset(&mut rng, &r);
            check_spectrum_energy_lower(&a, &b, &alpha, rng.gen_range(1..=3))?
        }
        "bourgain" => {
            let dim = rng.gen_range(6..=max_dim.max(6));
            let a = sparse_set(&mut rng, dim, 4);
            let alpha = random_alpha(&mut rng, &a);
            let inv = density(&a)?.recip();
            let dmax = (floor_log2(&inv) / 4).max(1) as usize;
            let d = rng.gen_range(1..=dmax);
            let size = rng.gen_range(d..=(dim as usize).min(max_l).max(d));
            let lam = random_lambda(&mut rng, dim, size)?;
            check_bourgain_intersection(&a, &lam, &alpha, d)?
        }
        "majority" => {
            let n = rng.gen_range(6..=max_dim.max(6));
            let j = rng.gen_range(4..=n);
            let inst = build_majority(n, &BigRational::new(BigInt::one(), BigInt::one() << j))?;
            verify_majority(&inst, rng.gen_range(1..=3))?
        }
        other => return Err(Error::Parameter(format!("unknown theorem {other:?}"))),
    };
    Ok(tag(rep))
}

/// Runs `cfg.instances` seeded instances in parallel; rows are ordered by id.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if !THEOREMS.contains(&cfg.theorem.as_str()) {
        return Err(Error::Parameter(format!("unknown theorem {:?}", cfg.theorem)));
    }
    let outcomes: Vec<(usize, Result<BoundReport>)> = (0..cfg.instances).into_par_iter().map(|id| (id, sweep_instance(cfg, id))).collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (id, out) in outcomes {
        match out {
            Ok(report) => rows.push(SweepRow { id, report }),
            Err(e @ (Error::Precondition(_) | Error::Budget(_))) => skipped.push((id, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let violations = rows.iter().filter(|r| !r.report.holds).count();
    Ok(SweepResult { config: cfg.clone(), rows, violations, skipped })
}

/// CSV with columns `instance, lhs, rhs, holds, slack`.
pub fn reports_to_csv(reports: &[BoundReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "lhs", "rhs", "holds", "slack"]).map_err(csv_err)?;
    for r in reports {
        w.write_record([r.instance.as_str(), &r.lhs, &r.rhs, if r.holds { "true" } else { "false" }, &format!("{:e}", r.slack)]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Integer `⌊log2(1/δ)⌋` helper for callers choosing `d`.
pub fn log_inverse_floor(delta: &BigRational) -> i64 {
    floor_log2(&delta.recip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_small_values() {
        assert_eq!(majority_core(4).unwrap().len(), 11);
        let (f, brute) = majority_spectrum_agreement(4).unwrap();
        assert_eq!(f, rat_int(3));
        assert!(brute.iter().all(|b| *b == BigInt::from(3)));
        assert_eq!(majority_coefficient_direct(4), BigInt::from(3));
    }

    #[test]
    fn majority_instance_checks() {
        let inst = build_majority(12, &rat(1, 64)).unwrap();
        assert_eq!(inst.k, 4);
        let r = verify_majority(&inst, 2).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.extra["spectrum_agrees"], "true");
        // full spectrum of A agrees with the lifted core spectrum
        let full = large_spectrum(&inst.a, &inst.alpha).unwrap();
        assert_eq!(full.len().to_string(), r.extra["r_alpha_size"]);
    }

    #[test]
    fn diss_basis_three() {
        let r = check_diss_energy(&F2Set::basis(3, 3).unwrap(), 2).unwrap();
        assert_eq!((r.lhs.as_str(), r.rhs.as_str(), r.holds), ("21", "36", true));
    }

    #[test]
    fn rudin_matches_diss_with_unit_coefficients() {
        let lam = F2Set::basis(3, 5).unwrap();
        let r = check_rudin_even(&lam, &[1, 1, 1], 2).unwrap();
        let t = energy_auto(&lam, 2).unwrap();
        assert_eq!(r.lhs, t.to_string());
        let single = check_rudin_even(&lam, &[0, 5, 0], 3).unwrap();
        assert_eq!(single.extra["smallest_constant"], "1");
    }

    #[test]
    fn subspace_equality_cases() {
        // A = H of codimension 2 in F_2^5: spectrum is H^⊥ with |Â| = δN
        let h = F2Set::span(5, &[1, 2, 4]).unwrap();
        let alpha = rat(1, 4);
        let perp = large_spectrum(&h, &alpha).unwrap();
        assert_eq!(perp.len(), 4);
        let r = check_spectrum_energy_lower(&h, &perp, &alpha, 2).unwrap();
        assert_eq!(r.lhs, r.rhs);
        let p = check_parseval_spectrum(&h, &alpha).unwrap();
        assert_eq!((p.lhs.as_str(), p.rhs.as_str()), ("4", "4"));
        let c = check_chang(&h, &alpha, &maximal_dissociated_subset(&perp)).unwrap();
        assert!(c.holds);
        assert_eq!(c.lhs, "2");
    }

    #[test]
    fn sumset_checks() {
        let lam = F2Set::basis(8, 8).unwrap();
        let r = check_full_sumset_lower(&lam, 2, 2).unwrap();
        assert!(r.holds);
        assert_eq!(r.extra["intermediate_holds"], "true");
        let q = dotplus_power(&F2Set::basis(6, 6).unwrap(), 2).unwrap();
        let s = check_sumset_energy(&q, &F2Set::basis(6, 6).unwrap(), 2, 2).unwrap();
        assert!(s.holds);
        assert_eq!(s.extra["size_hypothesis"], "false");
    }

    #[test]
    fn sweeps_are_clean_and_deterministic() {
        for th in THEOREMS {
            let cfg = SweepConfig { theorem: th.into(), instances: 6, seed: 7, max_dim: 8, max_lambda: 8 };
            let a = sweep(&cfg).unwrap();
            assert_eq!(a.violations, 0, "{th}");
            assert!(a.skipped.is_empty(), "{th}: {:?}", a.skipped);
            let b = sweep(&cfg).unwrap();
            assert_eq!(reports_to_csv(&a.rows.iter().map(|r| r.report.clone()).collect::<Vec<_>>()).unwrap(), reports_to_csv(&b.rows.iter().map(|r| r.report.clone()).collect::<Vec<_>>()).unwrap());
        }
    }

    #[test]
    fn hamming_spheres() {
        assert_eq!(hamming_sphere(5, 0).unwrap().words(), &[0]);
        assert_eq!(hamming_sphere(5, 1).unwrap(), F2Set::basis(5, 5).unwrap());
        assert_eq!(hamming_sphere(6, 3).unwrap().len(), 20);
    }
}
