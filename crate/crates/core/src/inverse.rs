//! Connectedness refinement, near-disjoint supports, Bombieri intersections
//! and rectangle extraction for subsets of sumsets of dissociated sets.

use crate::dissociation::{check_family, random_dissociated, FamilySpec, FamilyStatus, DEFAULT_BUDGET};
use crate::energy::{dk_zeta_from, energy_auto, energy_of_words};
use crate::error::{Error, Result};
use crate::exact::{binomial, binomial_f64, factorial, floor_root, format_rational, opt_rational_str, rat, rat_int, rational_str, uint_to_rat};
use crate::f2n::{for_each_combination, F2Set};
use crate::seeded_rng;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Largest `|Q|` for which the violation search enumerates every `B`.
pub const EXHAUSTIVE_LIMIT: usize = 14;

/// Parameters of `(β_1, β_2)`-connectedness of degree `k` with constant `C`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectednessParams {
    pub k: usize,
    /// Fold `d` of the ambient sumset; only enters the step-count bound.
    pub d: usize,
    #[serde(with = "rational_str")]
    pub beta1: BigRational,
    #[serde(with = "rational_str")]
    pub beta2: BigRational,
    #[serde(with = "rational_str")]
    pub c: BigRational,
    /// Candidate subsets examined per round on the randomized path.
    pub search_budget: u64,
    pub seed: u64,
}

impl ConnectednessParams {
    pub fn new(k: usize, beta1: BigRational, beta2: BigRational, c: BigRational) -> Result<Self> {
        let p = ConnectednessParams { k, d: 2, beta1, beta2, c, search_budget: 2000, seed: 0 };
        p.validate()?;
        Ok(p)
    }

    /// `β_1 = 1/4`, `β_2 = 1/2`, `C = 1/8`.
    pub fn standard(k: usize) -> Self {
        ConnectednessParams { k, d: 2, beta1: rat(1, 4), beta2: rat(1, 2), c: rat(1, 8), search_budget: 2000, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = BigRational::zero();
        let one = BigRational::one();
        if self.k < 2 {
            return Err(Error::Parameter("connectedness degree k must be >= 2".into()));
        }
        if self.d == 0 {
            return Err(Error::Parameter("fold d must be >= 1".into()));
        }
        if self.beta1 <= zero || self.beta1 > self.beta2 || self.beta2 >= one {
            return Err(Error::Parameter("need 0 < beta1 <= beta2 < 1".into()));
        }
        if self.c <= zero || self.c > one {
            return Err(Error::Parameter("need C in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Scratch {
    cur: Vec<u32>,
    next: Vec<u32>,
}

/// `T_k` of distinct words; sorts k-fold sums when there are few of them.
fn energy_words(words: &[u32], k: usize, dim: u32, scratch: &mut Scratch) -> BigUint {
    if (words.len() as f64).powi(k as i32) > (1u64 << 22) as f64 {
        let set = F2Set::from_sorted_unchecked(dim, {
            let mut w = words.to_vec();
            w.sort_unstable();
            w
        });
        return energy_auto(&set, k).unwrap_or_else(|_| energy_of_words(words, k));
    }
    let Scratch { cur, next, .. } = scratch;
    cur.clear();
    cur.push(0);
    for _ in 0..k {
        next.clear();
        for &s in cur.iter() {
            next.extend(words.iter().map(|&w| s ^ w));
        }
        std::mem::swap(cur, next);
    }
    cur.sort_unstable();
    let t: u128 = cur.chunk_by(|a, b| a == b).map(|r| (r.len() as u128).pow(2)).sum();
    BigUint::from(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineStep {
    pub removed: F2Set,
    pub size_before: usize,
    pub size_after: usize,
    pub t_before: String,
    pub t_after: String,
    pub d_before: f64,
    pub d_after: f64,
    /// Exact `T_k(Q̄)|Q|^k > T_k(Q)|Q̄|^k`, i.e. `D_k` strictly increased.
    pub d_increased: bool,
    /// Whether the violating `B` came from exhaustive enumeration.
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBoundCheck {
    /// `ρ = 1 + β_1(1 - 4C)`.
    pub rho: String,
    /// The bound only says something when `ρ > 1`.
    pub applicable: bool,
    /// `ρ^{sk} T_k(Q) <= d^{8d} k^{kd} |Q|^k`.
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub output: F2Set,
    pub steps: Vec<RefineStep>,
    /// `"certified"` when the final set passed an exhaustive search, else `"best-effort"`.
    pub label: String,
    pub certified: bool,
    pub candidates_examined: u64,
    pub step_bound: StepBoundCheck,
    /// `|Q'| >= (1 - β_2)^s |Q|`.
    pub size_bound_holds: bool,
    pub params: ConnectednessParams,
}

struct Candidate {
    t: BigUint,
    words: Vec<u32>,
}

/// True when `a` has the smaller ratio `T(B)/|B|^{2k}`; ties go to the
/// lexicographically smaller word list.
fn more_violating(a: &Candidate, b: &Candidate, k: usize) -> bool {
    let e = 2 * k as u32;
    let lhs = &a.t * BigUint::from(b.words.len()).pow(e);
    let rhs = &b.t * BigUint::from(a.words.len()).pow(e);
    lhs < rhs || (lhs == rhs && a.words < b.words)
}

struct Window {
    lo: usize,
    hi: usize,
    /// `B` of size `b` violates iff `T_k(B) < thresholds[b - lo]`.
    thresholds: Vec<BigUint>,
}

fn window(m: usize, t_q: &BigUint, p: &ConnectednessParams) -> Option<Window> {
    let mm = rat_int(m as i64);
    let lo = (&p.beta1 * &mm).ceil().to_integer().to_usize().unwrap().max(1);
    let hi = (&p.beta2 * &mm).floor().to_integer().to_usize().unwrap().min(m.saturating_sub(1));
    if lo > hi {
        return None;
    }
    let e = 2 * p.k as u32;
    let cn = p.c.numer().magnitude().clone();
    let cd = p.c.denom().magnitude().clone();
    let den = (cd * BigUint::from(m)).pow(e);
    let thresholds = (lo..=hi)
        .map(|b| {
            let num = (&cn * BigUint::from(b)).pow(e) * t_q;
            (&num + &den - 1u32) / &den
        })
        .collect();
    Some(Window { lo, hi, thresholds })
}

/// Solutions of the k-energy equation whose first coordinate is `x`.
fn participation(words: &[u32], k: usize) -> Option<Vec<u128>> {
    if (words.len() as f64).powi(k as i32) > 2e6 {
        return None;
    }
    let counts = |j: usize| {
        let mut m: HashMap<u32, u128> = HashMap::from([(0, 1)]);
        for _ in 0..j {
            let mut next = HashMap::new();
            for (&s, &c) in &m {
                for &w in words {
                    *next.entry(s ^ w).or_insert(0) += c;
                }
            }
            m = next;
        }
        m
    };
    let rk1 = counts(k - 1);
    let rk = counts(k);
    Some(
        words
            .iter()
            .map(|&x| rk1.iter().map(|(&y, &c)| c * rk.get(&(x ^ y)).copied().unwrap_or(0)).sum())
            .collect(),
    )
}

fn consider(best: &mut Option<Candidate>, cand: Candidate, k: usize) {
    if best.as_ref().map_or(true, |b| more_violating(&cand, b, k)) {
        *best = Some(cand);
    }
}

/// Looks for the most violating `B`. Returns it, the number of candidates
/// examined and whether the search was exhaustive.
fn find_violation(
    q: &[u32],
    dim: u32,
    t_q: &BigUint,
    p: &ConnectednessParams,
    rng: &mut impl Rng,
    scratch: &mut Scratch,
) -> (Option<Vec<u32>>, u64, bool) {
    let m = q.len();
    let Some(win) = window(m, t_q, p) else {
        return (None, 0, true);
    };
    let k = p.k;
    let mut best: Option<Candidate> = None;
    let counter = std::cell::Cell::new(0u64);
    let examined = || counter.get();
    let eval = |words: Vec<u32>, scratch: &mut Scratch, best: &mut Option<Candidate>| -> BigUint {
        counter.set(counter.get() + 1);
        let t = energy_words(&words, k, dim, scratch);
        if t < win.thresholds[words.len() - win.lo] {
            consider(best, Candidate { t: t.clone(), words }, k);
        }
        t
    };
    if m <= EXHAUSTIVE_LIMIT {
        for b in win.lo..=win.hi {
            for_each_combination(m, b, |idx| {
                let words: Vec<u32> = idx.iter().map(|&i| q[i]).collect();
                eval(words, scratch, &mut best);
            });
        }
        return (best.map(|c| c.words), examined(), true);
    }
    let budget = p.search_budget.max(1);
    // low-participation prefixes
    if let Some(part) = participation(q, k) {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| part[a].cmp(&part[b]).then(q[a].cmp(&q[b])));
        for b in win.lo..=win.hi {
            if examined() >= budget / 4 {
                break;
            }
            let mut words: Vec<u32> = order[..b].iter().map(|&i| q[i]).collect();
            words.sort_unstable();
            eval(words, scratch, &mut best);
        }
    }
    // random subsets, keeping the lowest-ratio one for local moves
    let mut anchor: Option<Candidate> = None;
    let random_budget = budget - budget / 4;
    let mut idx: Vec<usize> = (0..m).collect();
    while examined() < budget - random_budget / 2 {
        let b = rng.gen_range(win.lo..=win.hi);
        idx.shuffle(rng);
        let mut words: Vec<u32> = idx[..b].iter().map(|&i| q[i]).collect();
        words.sort_unstable();
        let t = eval(words.clone(), scratch, &mut best);
        consider(&mut anchor, Candidate { t, words }, k);
    }
    // local swap moves around the anchor
    if let Some(mut cur) = anchor {
        while examined() < budget {
            let inside: HashSet<u32> = cur.words.iter().copied().collect();
            let outside: Vec<u32> = q.iter().copied().filter(|w| !inside.contains(w)).collect();
            if outside.is_empty() {
                break;
            }
            let i = rng.gen_range(0..cur.words.len());
            let o = outside[rng.gen_range(0..outside.len())];
            let mut words = cur.words.clone();
            words[i] = o;
            words.sort_unstable();
            let t = eval(words.clone(), scratch, &mut best);
            let cand = Candidate { t, words };
            if more_violating(&cand, &cur, k) {
                cur = cand;
            }
        }
    }
    (best.map(|c| c.words), examined(), false)
}

fn pow_rat(x: &BigRational, e: u32) -> BigRational {
    BigRational::new(x.numer().pow(e), x.denom().pow(e))
}

/// Repeatedly removes a subset `B` that violates connectedness until none is
/// found. Sets with at most [`EXHAUSTIVE_LIMIT`] elements are searched
/// exhaustively; larger ones by seeded random subsets and local moves.
pub fn refine_connected(q: &F2Set, params: &ConnectednessParams) -> Result<RefineReport> {
    params.validate()?;
    if q.len() <= 2 {
        return Err(Error::Precondition("refinement needs |Q| > 2".into()));
    }
    let k = params.k;
    let dim = q.dim();
    let mut scratch = Scratch::default();
    let mut rng = seeded_rng(params.seed);
    let mut cur: Vec<u32> = q.words().to_vec();
    let t0 = energy_words(&cur, k, dim, &mut scratch);
    let mut t_cur = t0.clone();
    let mut steps = Vec::new();
    let mut examined = 0;
    let certified;
    loop {
        let (found, n, exhaustive) = find_violation(&cur, dim, &t_cur, params, &mut rng, &mut scratch);
        examined += n;
        let Some(b) = found else {
            certified = exhaustive;
            break;
        };
        let removed: HashSet<u32> = b.iter().copied().collect();
        let next: Vec<u32> = cur.iter().copied().filter(|w| !removed.contains(w)).collect();
        let t_next = energy_words(&next, k, dim, &mut scratch);
        let e = k as u32;
        let d_increased = &t_next * BigUint::from(cur.len()).pow(e) > &t_cur * BigUint::from(next.len()).pow(e);
        steps.push(RefineStep {
            removed: F2Set::from_sorted_unchecked(dim, b),
            size_before: cur.len(),
            size_after: next.len(),
            t_before: t_cur.to_string(),
            t_after: t_next.to_string(),
            d_before: dk_zeta_from(&t_cur, cur.len(), k).d_k,
            d_after: dk_zeta_from(&t_next, next.len(), k).d_k,
            d_increased,
            exhaustive,
        });
        cur = next;
        t_cur = t_next;
    }
    let s = steps.len() as u32;
    let m0 = q.len();
    let rho = BigRational::one() + &params.beta1 * (BigRational::one() - rat_int(4) * &params.c);
    let applicable = rho > BigRational::one();
    let holds = applicable.then(|| {
        let d = params.d as u32;
        let lhs = pow_rat(&rho, s * k as u32) * uint_to_rat(&t0);
        let rhs = BigUint::from(d).pow(8 * d) * BigUint::from(k).pow((k as u32) * d) * BigUint::from(m0).pow(k as u32);
        lhs <= uint_to_rat(&rhs)
    });
    let keep = BigRational::one() - &params.beta2;
    let size_bound_holds = rat_int(cur.len() as i64) >= pow_rat(&keep, s) * rat_int(m0 as i64);
    Ok(RefineReport {
        output: F2Set::from_sorted_unchecked(dim, cur),
        steps,
        label: if certified { "certified" } else { "best-effort" }.into(),
        certified,
        candidates_examined: examined,
        step_bound: StepBoundCheck { rho: format_rational(&rho), applicable, holds },
        size_bound_holds,
        params: params.clone(),
    })
}

/// `λ ∈ Λ_1` together with its fiber `D(λ) = {λ' ∈ Λ_2 : λ + λ' ∈ Q}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fiber {
    pub lambda: crate::F2Element,
    pub d: F2Set,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberDecomposition {
    pub lambda1: F2Set,
    pub lambda2: F2Set,
    /// Nonempty fibers ordered by `λ`.
    pub fibers: Vec<Fiber>,
    pub s1: usize,
    pub s2: usize,
}

impl FiberDecomposition {
    pub fn new(q: &F2Set, lambda1: &F2Set, lambda2: &F2Set) -> Result<Self> {
        if !lambda1.intersection(lambda2)?.is_empty() {
            return Err(Error::Parameter("Lambda_1 and Lambda_2 must be disjoint".into()));
        }
        if q.dim() != lambda1.dim() {
            return Err(Error::DimensionMismatch(q.dim(), lambda1.dim()));
        }
        let mut fibers = Vec::new();
        for &l in lambda1.words() {
            let d: Vec<u32> = lambda2.words().iter().copied().filter(|&l2| q.contains_word(l ^ l2)).collect();
            if !d.is_empty() {
                fibers.push(Fiber {
                    lambda: crate::F2Element::new(l, q.dim())?,
                    d: F2Set::from_sorted_unchecked(q.dim(), d),
                });
            }
        }
        Ok(FiberDecomposition {
            lambda1: lambda1.clone(),
            lambda2: lambda2.clone(),
            s1: fibers.len(),
            s2: lambda2.len(),
            fibers,
        })
    }

    /// `Σ_λ |D(λ)|`.
    pub fn mass(&self) -> usize {
        self.fibers.iter().map(|f| f.d.len()).sum()
    }

    /// Checks that the fibers count `Q ∩ (Λ_1 + Λ_2)` once each, that the
    /// sets `Q(λ)` are disjoint and that `Σ|D|^x <= s_2^{x-1} m` for `x = 1..=4`.
    pub fn check_invariants(&self, q: &F2Set) -> Result<()> {
        let part = q.intersection(&self.lambda1.sumset(&self.lambda2)?)?;
        let mut seen = HashSet::new();
        for f in &self.fibers {
            for &w in f.d.words() {
                if !seen.insert(w ^ f.lambda.bits()) {
                    return Err(Error::Invariant("fibers Q(lambda) overlap".into()));
                }
            }
        }
        let m = self.mass();
        if m != part.len() {
            return Err(Error::Invariant(format!("fiber mass {m} differs from |Q ∩ (L1+L2)| = {}", part.len())));
        }
        for x in 1..=4u32 {
            let lhs: BigUint = self.fibers.iter().map(|f| BigUint::from(f.d.len()).pow(x)).sum();
            let rhs = BigUint::from(self.s2).pow(x - 1) * m;
            if lhs > rhs {
                return Err(Error::Invariant(format!("power-sum bound fails at x = {x}")));
            }
        }
        Ok(())
    }

    fn intersections(&self) -> Vec<Vec<u64>> {
        self.fibers
            .iter()
            .map(|a| self.fibers.iter().map(|b| a.d.intersection(&b.d).unwrap().len() as u64).collect())
            .collect()
    }
}

/// `Σ_{|S| = r} Π_{α∈S} Σ_{β∈S} |D_α ∩ D_β|` over subsets of `0..s`.
fn support_sum(inter: &[Vec<u64>], r: usize) -> BigUint {
    let mut total = BigUint::zero();
    if r == 0 {
        return BigUint::one();
    }
    for_each_combination(inter.len(), r, |s| {
        let mut prod = BigUint::one();
        for &a in s {
            prod *= s.iter().map(|&b| inter[a][b]).sum::<u64>();
        }
        total += prod;
    });
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inverse2Report {
    /// `"ok"` or `"hypothesis-not-met"`.
    pub status: String,
    pub q_size: usize,
    pub s1: usize,
    pub s2: usize,
    pub p: usize,
    #[serde(with = "rational_str")]
    pub m: BigRational,
    /// Rational lower bound on `δ_0`.
    pub delta0_lower: Option<String>,
    /// Rational lower bound on `X`.
    pub x_lower: Option<String>,
    pub r_range: Option<(usize, usize)>,
    pub t_p: Option<String>,
    /// Lower bound on the right-hand side; `holds` compares against it.
    pub rhs_lower: Option<String>,
    pub holds: Option<bool>,
    pub slack: Option<f64>,
}

/// Lower bound on `X = max(δ^{4δ}, 1)` for rational `δ = a/b >= 1`.
fn x_lower(delta: &BigRational) -> BigRational {
    if *delta <= BigRational::one() {
        return BigRational::one();
    }
    let a = delta.numer().magnitude().clone();
    let b = delta.denom().magnitude().to_u32().unwrap();
    let e = 4 * a.to_u32().unwrap();
    const SHIFT: usize = 40;
    let inner = a.pow(e) * (BigUint::one() << (SHIFT * b as usize)) / BigUint::from(b).pow(e);
    let root = floor_root(&inner, b);
    BigRational::new(root.into(), (BigUint::one() << SHIFT).into()).max(BigRational::one())
}

/// Evaluates both sides of the fiber-intersection bound on `T_p(Q)`.
///
/// `δ_0` involves logarithms, so a rational lower bound is used. Both `X` and
/// the range of `r` grow with `δ_0`, so the evaluated right-hand side is a
/// lower bound of the true one and `holds` is sound.
pub fn inverse2_bound(q: &F2Set, decomp: &FiberDecomposition, p: usize, m: &BigRational) -> Result<Inverse2Report> {
    if p < 5 {
        return Err(Error::Precondition(format!("p = {p} < 5")));
    }
    if p > 6 || decomp.s1 > 14 {
        return Err(Error::Budget(format!("p = {p}, s1 = {} exceeds p <= 6, s1 <= 14", decomp.s1)));
    }
    if !m.is_positive() {
        return Err(Error::Parameter("M must be positive".into()));
    }
    if decomp.mass() != q.len() {
        return Err(Error::Precondition("Q is not inside Lambda_1 + Lambda_2".into()));
    }
    let (size, s2) = (q.len(), decomp.s2);
    let mut report = Inverse2Report {
        status: "hypothesis-not-met".into(),
        q_size: size,
        s1: decomp.s1,
        s2,
        p,
        m: m.clone(),
        delta0_lower: None,
        x_lower: None,
        r_range: None,
        t_p: None,
        rhs_lower: None,
        holds: None,
        slack: None,
    };
    let qr = rat_int(size as i64);
    let sp = rat_int((s2 * p) as i64);
    let hyp = qr >= rat_int(2) * &sp && qr >= rat_int(256) * &sp * pow_rat(m, 8);
    if !hyp {
        return Ok(report);
    }
    report.status = "ok".into();
    let mf = crate::exact::rational_to_f64(m);
    let num = (2.0 * std::f64::consts::E * mf).log2();
    let den = (size as f64 / (s2 * p) as f64).log2();
    let raw = p as f64 * num / den;
    let delta0 = if raw.is_finite() && raw > 1.0 {
        let scaled = (raw * 64.0 * (1.0 - 1e-9)).floor();
        BigRational::new((scaled as i64).into(), 64.into()).max(BigRational::one())
    } else {
        BigRational::one()
    };
    let x = x_lower(&delta0);
    let ceil_d = delta0.ceil().to_integer().to_usize().unwrap();
    let r_lo = p.saturating_sub(ceil_d);
    let inter = decomp.intersections();
    let mut sum = BigRational::zero();
    let unit = rat_int((p * s2) as i64);
    for r in r_lo..=p {
        let s = support_sum(&inter, r);
        sum += uint_to_rat(&s) / pow_rat(&unit, r as u32);
    }
    let pu = p as u32;
    let front = uint_to_rat(&((BigUint::one() << (5 * p)) * BigUint::from(p).pow(3 * pu) * BigUint::from(s2).pow(pu)));
    let tail = uint_to_rat(&(BigUint::from(p).pow(2 * pu) * BigUint::from(size).pow(pu))) / (rat_int(2) * pow_rat(m, pu));
    let rhs = front * &x * sum + tail;
    let t = energy_auto(q, p)?;
    let lhs = uint_to_rat(&t);
    report.delta0_lower = Some(format_rational(&delta0));
    report.x_lower = Some(format_rational(&x));
    report.r_range = Some((r_lo, p));
    report.t_p = Some(t.to_string());
    report.holds = Some(lhs <= rhs);
    report.slack = Some(crate::exact::slack(&lhs, &rhs));
    report.rhs_lower = Some(format_rational(&rhs.floor()));
    Ok(report)
}

fn check_zeta(zeta: &BigRational) -> Result<()> {
    if !zeta.is_positive() || *zeta > BigRational::one() {
        return Err(Error::Parameter("zeta must lie in (0, 1]".into()));
    }
    Ok(())
}

/// Greedy choice of up to `w` supports, each meeting the union of the
/// earlier ones in at most `ζp` indices. The first feasible index wins.
pub fn greedy_disjoint_supports(ss: &[Vec<usize>], zeta: &BigRational, w: usize) -> Result<Vec<usize>> {
    check_zeta(zeta)?;
    if ss.is_empty() || w == 0 {
        return Ok(Vec::new());
    }
    let p = ss[0].len();
    if ss.iter().any(|s| s.len() != p) {
        return Err(Error::Parameter("all supports must have the same size".into()));
    }
    let sets: Vec<HashSet<usize>> = ss.iter().map(|s| s.iter().copied().collect()).collect();
    if sets.iter().any(|s| s.len() != p) {
        return Err(Error::Parameter("support with repeated index".into()));
    }
    let limit = zeta * rat_int(p as i64);
    let mut chosen = vec![0usize];
    let mut union: HashSet<usize> = sets[0].clone();
    while chosen.len() < w {
        let next = (0..ss.len()).find(|&i| {
            !chosen.contains(&i)
                && chosen.iter().all(|&c| sets[c] != sets[i])
                && rat_int(sets[i].intersection(&union).count() as i64) <= limit
        });
        let Some(i) = next else { break };
        union.extend(sets[i].iter().copied());
        chosen.push(i);
    }
    Ok(chosen)
}

/// The count `2σ*` above which the greedy lemma promises `w` supports.
/// `groups` lists `(|A*_i|, l_i)` for the distinct blocks.
pub fn greed_threshold(p: usize, zeta: &BigRational, w: usize, groups: &[(u64, usize)]) -> Result<BigRational> {
    check_zeta(zeta)?;
    // coefficients of Π_i Σ_{n <= l_i} a_i^n / n! x^n
    let mut poly = vec![BigRational::one()];
    for &(a, l) in groups {
        let mut next = vec![BigRational::zero(); poly.len() + l];
        for (i, c) in poly.iter().enumerate() {
            for n in 0..=l {
                let term = uint_to_rat(&BigUint::from(a).pow(n as u32)) / uint_to_rat(&factorial(n as u64));
                next[i + n] += c * term;
            }
        }
        poly = next;
    }
    let start = (zeta * rat_int(p as i64)).ceil().to_integer().to_usize().unwrap();
    let pw = BigUint::from(p * w);
    let mut sigma = BigRational::zero();
    for omega in start..=p {
        let coef = poly.get(p - omega).cloned().unwrap_or_else(BigRational::zero);
        sigma += uint_to_rat(&pw.pow(omega as u32)) / uint_to_rat(&factorial(omega as u64)) * coef;
    }
    Ok(sigma * rat_int(2))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BombieriResult {
    pub indices: Vec<usize>,
    pub intersection: F2Set,
    /// `(λ - t/q) C(q,t)^{-1} |B|`.
    pub bound: String,
    pub meets_bound: bool,
    pub exhaustive: bool,
}

const BOMBIERI_EXHAUSTIVE: f64 = 1e6;

fn to_bits(set: &F2Set, universe: &F2Set) -> Vec<u64> {
    let mut bits = vec![0u64; universe.len().div_ceil(64).max(1)];
    for (i, w) in universe.words().iter().enumerate() {
        if set.contains_word(*w) {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

fn and_count(a: &[u64], b: &[u64], out: &mut [u64]) -> u32 {
    let mut c = 0;
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x & y;
        c += o.count_ones();
    }
    c
}

/// Picks `t` of the sets with the largest common intersection.
pub fn bombieri_intersection(bs: &[F2Set], b: &F2Set, lambda: &BigRational, t: usize) -> Result<BombieriResult> {
    let q = bs.len();
    if q == 0 || t == 0 {
        return Err(Error::Precondition("need q >= 1 and t >= 1".into()));
    }
    if !lambda.is_positive() {
        return Err(Error::Precondition("lambda must be positive".into()));
    }
    if rat_int(t as i64) > lambda * rat_int(q as i64) {
        return Err(Error::Precondition(format!("t = {t} exceeds lambda q")));
    }
    let size = rat_int(b.len() as i64);
    for bi in bs {
        if !bi.is_subset(b) {
            return Err(Error::Precondition("B_i is not inside B".into()));
        }
        if rat_int(bi.len() as i64) < lambda * &size {
            return Err(Error::Precondition("some |B_i| < lambda |B|".into()));
        }
    }
    let bits: Vec<Vec<u64>> = bs.iter().map(|s| to_bits(s, b)).collect();
    let width = bits[0].len();
    let exhaustive = binomial_f64(q as u64, t as u64) <= BOMBIERI_EXHAUSTIVE;
    let best_idx: Vec<usize>;
    let best_count: i64;
    if exhaustive {
        fn dfs(
            bits: &[Vec<u64>],
            start: usize,
            left: usize,
            cur: &[u64],
            count: u32,
            chosen: &mut Vec<usize>,
            best: &mut (Vec<usize>, i64),
        ) {
            if (count as i64) <= best.1 {
                return;
            }
            if left == 0 {
                *best = (chosen.clone(), count as i64);
                return;
            }
            let mut next = vec![0u64; cur.len()];
            for i in start..=bits.len() - left {
                let c = and_count(cur, &bits[i], &mut next);
                chosen.push(i);
                dfs(bits, i + 1, left - 1, &next, c, chosen, best);
                chosen.pop();
            }
        }
        let full = vec![u64::MAX; width];
        let mut best = (Vec::new(), -1i64);
        dfs(&bits, 0, t, &full, u32::MAX, &mut Vec::new(), &mut best);
        best_idx = best.0;
        best_count = best.1;
    } else {
        let mut chosen: Vec<usize> = Vec::new();
        let mut cur = vec![u64::MAX; width];
        let mut scratch = vec![0u64; width];
        for _ in 0..t {
            let mut pick = None;
            for i in (0..q).filter(|i| !chosen.contains(i)) {
                let c = and_count(&cur, &bits[i], &mut scratch) as i64;
                if pick.map_or(true, |(_, bc)| c > bc) {
                    pick = Some((i, c));
                }
            }
            let (i, _) = pick.unwrap();
            chosen.push(i);
            let prev = cur.clone();
            and_count(&prev, &bits[i], &mut cur);
        }
        let eval = |idx: &[usize]| -> i64 {
            let mut acc = vec![u64::MAX; width];
            let mut tmp = vec![0u64; width];
            for &i in idx {
                and_count(&acc, &bits[i], &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            acc.iter().map(|w| w.count_ones() as i64).sum()
        };
        let mut value = eval(&chosen);
        'improve: loop {
            for pos in 0..chosen.len() {
                for j in (0..q).filter(|j| !chosen.contains(j)) {
                    let mut trial = chosen.clone();
                    trial[pos] = j;
                    let v = eval(&trial);
                    if v > value {
                        chosen = trial;
                        value = v;
                        continue 'improve;
                    }
                }
            }
            break;
        }
        chosen.sort_unstable();
        best_idx = chosen;
        best_count = value;
    }
    let inter_words: Vec<u32> = b
        .words()
        .iter()
        .enumerate()
        .filter(|(i, _)| best_idx.iter().all(|&j| bits[j][i / 64] >> (i % 64) & 1 == 1))
        .map(|(_, &w)| w)
        .collect();
    debug_assert_eq!(inter_words.len() as i64, best_count);
    let bound = (lambda - rat(t as i64, q as i64)) / uint_to_rat(&binomial(q as u64, t as u64)) * size;
    let meets_bound = rat_int(inter_words.len() as i64) >= bound;
    if exhaustive && !meets_bound {
        return Err(Error::Invariant("exhaustive intersection below the Bombieri bound".into()));
    }
    Ok(BombieriResult {
        indices: best_idx,
        intersection: F2Set::from_sorted_unchecked(b.dim(), inter_words),
        bound: format_rational(&bound),
        meets_bound,
        exhaustive,
    })
}

/// `(Σ prefix) + L + L'`, with `L ∩ L' = ∅`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub prefix: F2Set,
    pub l: F2Set,
    pub lp: F2Set,
}

impl Rectangle {
    pub fn shift(&self) -> u32 {
        self.prefix.words().iter().fold(0, |a, &w| a ^ w)
    }

    pub fn area(&self) -> usize {
        self.l.len() * self.lp.len()
    }

    /// The set `(Σ prefix) + L + L'`.
    pub fn points(&self) -> F2Set {
        let s = self.shift();
        let words = self.l.words().iter().flat_map(|&a| self.lp.words().iter().map(move |&b| s ^ a ^ b));
        F2Set::from_words(self.l.dim(), words).expect("same dimension")
    }

    /// Disjointness of `L`, `L'` and the prefix, and containment in `q`.
    pub fn check(&self, q: &F2Set) -> Result<()> {
        if !self.l.intersection(&self.lp)?.is_empty() {
            return Err(Error::Invariant("L and L' intersect".into()));
        }
        if !self.prefix.intersection(&self.l.union(&self.lp)?)?.is_empty() {
            return Err(Error::Invariant("prefix meets L or L'".into()));
        }
        let pts = self.points();
        if pts.len() != self.area() {
            return Err(Error::Invariant("rectangle sums collide".into()));
        }
        if !pts.is_subset(q) {
            return Err(Error::Invariant("rectangle not contained in Q".into()));
        }
        Ok(())
    }
}

/// Checks every rectangle against `q` and their pairwise disjointness.
pub fn verify_rectangles(rects: &[Rectangle], q: &F2Set) -> Result<()> {
    let mut seen = HashSet::new();
    for r in rects {
        r.check(q)?;
        for &w in r.points().words() {
            if !seen.insert(w) {
                return Err(Error::Invariant("emitted rectangles overlap".into()));
            }
        }
    }
    Ok(())
}

/// Union of the rectangles' points.
pub fn covered_points(rects: &[Rectangle], dim: u32) -> F2Set {
    let words: Vec<u32> = rects.iter().flat_map(|r| r.points().words().to_vec()).collect();
    F2Set::from_words(dim, words).expect("same dimension")
}

/// Fraction of the planted mass covered by `found`.
pub fn planted_coverage(found: &[Rectangle], planted: &[Rectangle], dim: u32) -> BigRational {
    let mass = covered_points(planted, dim);
    if mass.is_empty() {
        return BigRational::one();
    }
    let hit = mass.intersection(&covered_points(found, dim)).unwrap().len();
    rat(hit as i64, mass.len() as i64)
}

/// Parameters of the extraction pipeline. `None` fields take their
/// derived defaults, which are echoed in every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseParams {
    pub p: usize,
    #[serde(rename = "K", with = "rational_str")]
    pub k_const: BigRational,
    #[serde(with = "rational_str")]
    pub eta: BigRational,
    /// Heavy-overlap threshold; defaults to `1/(16 K_1)`.
    #[serde(with = "opt_rational_str")]
    pub epsilon: Option<BigRational>,
    #[serde(with = "rational_str")]
    pub zeta: BigRational,
    /// Greedy width; defaults to `s_1`.
    pub w: Option<usize>,
    /// Bombieri depth; defaults to `max(1, ⌊εw/2⌋)`.
    pub t: Option<usize>,
    pub rounds: usize,
    pub split_trials: usize,
    pub min_area: usize,
    /// Cut the split part down to `⌈m_1/2⌉` points, heaviest fibers first.
    pub trim_q3: bool,
    pub connectedness: ConnectednessParams,
    pub seed: u64,
}

impl Default for InverseParams {
    fn default() -> Self {
        InverseParams {
            p: 2,
            k_const: BigRational::one(),
            eta: rat(1, 2),
            epsilon: None,
            zeta: rat(3, 4),
            w: None,
            t: None,
            rounds: 12,
            split_trials: 32,
            min_area: 4,
            trim_q3: false,
            connectedness: ConnectednessParams::standard(2),
            seed: 0,
        }
    }
}

impl InverseParams {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Parameter("p must be >= 1".into()));
        }
        if !self.k_const.is_positive() {
            return Err(Error::Parameter("K must be positive".into()));
        }
        if !self.eta.is_positive() || self.eta > rat(1, 2) {
            return Err(Error::Parameter("eta must lie in (0, 1/2]".into()));
        }
        check_zeta(&self.zeta)?;
        if let Some(e) = &self.epsilon {
            if !e.is_positive() || *e > BigRational::one() {
                return Err(Error::Parameter("epsilon must lie in (0, 1]".into()));
            }
        }
        if self.rounds == 0 || self.split_trials == 0 {
            return Err(Error::Parameter("rounds and split_trials must be >= 1".into()));
        }
        Ok(())
    }

    fn connectedness_for(&self, d: usize) -> ConnectednessParams {
        ConnectednessParams { k: self.p.max(2), d, seed: self.seed, ..self.connectedness.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub residual: usize,
    pub split_mass: usize,
    /// The best split reached half the residual, as the averaging argument promises.
    pub half_mass_reached: bool,
    pub m3: usize,
    pub s1: usize,
    pub s2: usize,
    pub p1: Option<usize>,
    pub epsilon: Option<String>,
    /// `ε >= 16/(ηp)`.
    pub epsilon_condition: Option<bool>,
    pub supports: usize,
    pub alpha: Option<crate::F2Element>,
    pub greedy_selected: usize,
    pub bombieri_t: Option<usize>,
    pub bombieri_size: Option<usize>,
    pub e_size: usize,
    pub z_size: usize,
    pub l_min: usize,
    pub rectangle: Option<usize>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub rectangles: Vec<Rectangle>,
    pub covered: usize,
    pub q_size: usize,
    /// `covered / |Q|` as `"a/b"`.
    pub coverage: String,
    pub family_status: FamilyStatus,
    pub refine: Option<RefineReport>,
    pub trace: Vec<RoundTrace>,
    pub warnings: Vec<String>,
    pub params: InverseParams,
}

/// Index decomposition of each point of `q` as a sum of `d` distinct
/// elements of `lambda`, as a bit mask over `lambda`'s positions.
fn decompose(lambda: &F2Set, q: &[u32], d: usize) -> Result<Vec<u64>> {
    let n = lambda.len();
    if n > 64 {
        return Err(Error::Budget(format!("|Lambda| = {n} > 64")));
    }
    if binomial_f64(n as u64, d as u64) > 5e6 {
        return Err(Error::Budget("too many d-subsets of Lambda".into()));
    }
    let words = lambda.words();
    let mut map: HashMap<u32, Option<u64>> = HashMap::new();
    for_each_combination(n, d, |idx| {
        let sum = idx.iter().fold(0, |a, &i| a ^ words[i]);
        let mask = idx.iter().fold(0u64, |a, &i| a | 1 << i);
        map.entry(sum).and_modify(|e| *e = None).or_insert(Some(mask));
    });
    q.iter()
        .map(|&x| match map.get(&x) {
            Some(Some(m)) => Ok(*m),
            Some(None) => Err(Error::Precondition(format!("point {x:#b} has two decompositions over Lambda"))),
            None => Err(Error::Precondition(format!("point {x:#b} is not a sum of {d} distinct elements of Lambda"))),
        })
        .collect()
}

/// Number of masks that meet every part exactly once.
fn split_score(masks: &[u64], parts: &[u64]) -> usize {
    masks.iter().filter(|&&m| parts.iter().all(|&p| (m & p).count_ones() == 1)).count()
}

/// Swap hill-climb on a partition, best swap first, lexicographic ties.
fn hill_climb(masks: &[u64], parts: &mut [u64]) -> usize {
    let mut score = split_score(masks, parts);
    loop {
        let mut best: Option<(usize, usize, usize, usize, usize)> = None;
        for a in 0..parts.len() {
            for b in a + 1..parts.len() {
                let (ia, ib) = (parts[a], parts[b]);
                for i in (0..64).filter(|i| ia >> i & 1 == 1) {
                    for j in (0..64).filter(|j| ib >> j & 1 == 1) {
                        let (pa, pb) = (parts[a], parts[b]);
                        parts[a] = pa ^ (1 << i) ^ (1 << j);
                        parts[b] = pb ^ (1 << i) ^ (1 << j);
                        let s = split_score(masks, parts);
                        parts[a] = pa;
                        parts[b] = pb;
                        if s > score && best.map_or(true, |bb| s > bb.0) {
                            best = Some((s, a, b, i, j));
                        }
                    }
                }
            }
        }
        let Some((s, a, b, i, j)) = best else { return score };
        parts[a] ^= (1 << i) ^ (1 << j);
        parts[b] ^= (1 << i) ^ (1 << j);
        score = s;
    }
}

/// Best of `trials` seeded random partitions of `0..n` into parts of the
/// given sizes, each improved by swaps. Ties go to the smaller part masks.
fn best_partition(masks: &[u64], n: usize, sizes: &[usize], trials: usize, rng: &mut impl Rng) -> (Vec<u64>, usize) {
    let seeds: Vec<u64> = (0..trials).map(|_| rng.gen()).collect();
    seeds
        .par_iter()
        .map(|&s| {
            let mut r = seeded_rng(s);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut r);
            let mut parts = Vec::with_capacity(sizes.len());
            let mut at = 0;
            for &sz in sizes {
                parts.push(order[at..at + sz].iter().fold(0u64, |a, &i| a | 1 << i));
                at += sz;
            }
            let score = hill_climb(masks, &mut parts);
            (parts, score)
        })
        .reduce_with(|a, b| match a.1.cmp(&b.1) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if a.0 <= b.0 {
                    a
                } else {
                    b
                }
            }
        })
        .expect("at least one trial")
}

fn bucket(size: usize) -> u32 {
    (usize::BITS - (size.max(1) - 1).leading_zeros()).max(1)
}

fn round_seed(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct RoundInput<'a> {
    lambda: &'a F2Set,
    /// Residual points with their pair masks.
    points: &'a [(u32, u64)],
    /// Fixed two-part split, as a mask of the first part.
    fixed_split: Option<u64>,
    m1: usize,
}

/// One pass of the pipeline on the residual: split, fibers, supports,
/// greedy, Bombieri, then the largest rectangle over the greedy union.
fn extraction_round(input: &RoundInput, params: &InverseParams, round: usize, trace: &mut RoundTrace) -> Result<Option<Rectangle>> {
    let n = input.lambda.len();
    let words = input.lambda.words();
    let dim = input.lambda.dim();
    let masks: Vec<u64> = input.points.iter().map(|p| p.1).collect();
    let mut rng = seeded_rng(round_seed(params.seed, round));
    let (split, mass) = match input.fixed_split {
        Some(m) => {
            let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let parts = [m, full & !m];
            (m, split_score(&masks, &parts))
        }
        None => {
            let a = n.div_ceil(2);
            let (parts, score) = best_partition(&masks, n, &[a, n - a], params.split_trials, &mut rng);
            (parts[0], score)
        }
    };
    trace.split_mass = mass;
    trace.half_mass_reached = 2 * mass >= input.points.len();
    let mut q2: Vec<u64> = masks.iter().copied().filter(|m| (m & split).count_ones() == 1).collect();
    if q2.is_empty() {
        trace.note = "split captured no points".into();
        return Ok(None);
    }
    // fibers keyed by the Λ_1 index, as masks over Λ indices
    let fiber_of = |pts: &[u64]| {
        let mut f: BTreeMap<usize, u64> = BTreeMap::new();
        for &m in pts {
            let i = (m & split).trailing_zeros() as usize;
            *f.entry(i).or_insert(0) |= m & !split;
        }
        f
    };
    if params.trim_q3 {
        let target = input.m1.div_ceil(2).min(q2.len());
        let f = fiber_of(&q2);
        let mut order: Vec<(usize, u64)> = f.into_iter().collect();
        order.sort_by(|a, b| b.1.count_ones().cmp(&a.1.count_ones()).then(a.0.cmp(&b.0)));
        let mut kept = Vec::with_capacity(target);
        'fill: for (i, d) in order {
            for j in (0..64).filter(|j| d >> j & 1 == 1) {
                if kept.len() == target {
                    break 'fill;
                }
                kept.push(1u64 << i | 1 << j);
            }
        }
        q2 = kept;
    }
    let fibers: Vec<(usize, u64)> = fiber_of(&q2).into_iter().collect();
    let m3 = q2.len();
    let s1 = fibers.len();
    let s2 = n - split.count_ones() as usize;
    trace.m3 = m3;
    trace.s1 = s1;
    trace.s2 = s2;
    let p = params.p;
    let size = |a: usize| fibers[a].1.count_ones() as u64;
    let inter = |a: usize, b: usize| (fibers[a].1 & fibers[b].1).count_ones() as u64;
    // δ_0, K_1 and ε with M = 2^7 K
    let kf = crate::exact::rational_to_f64(&params.k_const);
    let mf = 128.0 * kf;
    let ratio = m3 as f64 / (s2 * p).max(1) as f64;
    let delta0 = if ratio > 1.0 { (p as f64 * (2.0 * std::f64::consts::E * mf).log2() / ratio.log2()).max(1.0) } else { f64::INFINITY };
    let epsilon = match &params.epsilon {
        Some(e) => e.clone(),
        None => {
            let xp = if delta0.is_finite() { (4.0 * delta0 * delta0.log2() / p as f64).exp2() } else { f64::INFINITY };
            let den = (16.0 * 8192.0 * kf * xp).ceil();
            let den = if den.is_finite() && den < 1e18 { den as i64 } else { 1i64 << 60 };
            rat(1, den.max(1))
        }
    };
    trace.epsilon = Some(format_rational(&epsilon));
    trace.epsilon_condition = Some(&epsilon * &params.eta * rat_int(p as i64) >= rat_int(16));
    let en = epsilon.numer().to_u128().unwrap();
    let ed = epsilon.denom().to_u128().unwrap();
    // p_1 maximizing the normalized support sum
    let r_lo = if delta0.is_finite() { p.saturating_sub(delta0.ceil() as usize).max(1) } else { 1 };
    let r_hi = p.min(s1);
    let inter_table: Vec<Vec<u64>> = (0..s1).map(|a| (0..s1).map(|b| inter(a, b)).collect()).collect();
    let mut p1 = None;
    let mut best_val = BigRational::zero();
    for r in r_lo..=r_hi {
        if binomial_f64(s1 as u64, r as u64) > 2e6 {
            continue;
        }
        let v = uint_to_rat(&support_sum(&inter_table, r)) / pow_rat(&rat_int((p * s2) as i64), r as u32);
        if p1.is_none() || v >= best_val {
            best_val = v;
            p1 = Some(r);
        }
    }
    let Some(p1) = p1 else {
        trace.note = "no admissible p1".into();
        return Ok(None);
    };
    trace.p1 = Some(p1);
    // supports S with a qualifying α, grouped by bucket pattern
    let qualifies = |s: &[usize], a: usize| -> bool {
        let da = fibers[a].1;
        let g = (0..64)
            .filter(|x| da >> x & 1 == 1)
            .filter(|x| {
                let c = s.iter().filter(|&&b| fibers[b].1 >> x & 1 == 1).count() as u128;
                c * ed >= en * p1 as u128
            })
            .count() as u128;
        g * ed >= en * size(a) as u128 && size(a) as u128 * ed * s2 as u128 >= en * m3 as u128
    };
    let mut groups: BTreeMap<Vec<u32>, (u128, Vec<(Vec<usize>, Vec<usize>)>)> = BTreeMap::new();
    for_each_combination(s1, p1, |s| {
        let good: Vec<usize> = s.iter().copied().filter(|&a| qualifies(s, a)).collect();
        if good.is_empty() {
            return;
        }
        let mut key: Vec<u32> = s.iter().map(|&a| bucket(size(a) as usize)).collect();
        key.sort_unstable();
        let weight: u128 = s.iter().map(|&a| size(a) as u128).product();
        let e = groups.entry(key).or_insert((0, Vec::new()));
        e.0 += weight;
        e.1.push((s.to_vec(), good));
    });
    trace.supports = groups.values().map(|g| g.1.len()).sum();
    let Some((_, (_, family))) = groups.into_iter().fold(None::<(Vec<u32>, (u128, Vec<_>))>, |acc, (k, v)| match acc {
        Some(a) if a.1 .0 >= v.0 => Some(a),
        _ => Some((k, v)),
    }) else {
        trace.note = "support family empty".into();
        return Ok(None);
    };
    let mut counts = vec![0usize; s1];
    for (_, good) in &family {
        for &a in good {
            counts[a] += 1;
        }
    }
    let alpha = (0..s1).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).unwrap();
    trace.alpha = Some(crate::F2Element::new(words[fibers[alpha].0], dim)?);
    let supports: Vec<Vec<usize>> = family.into_iter().filter(|(_, g)| g.contains(&alpha)).map(|(s, _)| s).collect();
    let w = params.w.unwrap_or(s1).max(1);
    let chosen = greedy_disjoint_supports(&supports, &params.zeta, w)?;
    trace.greedy_selected = chosen.len();
    let chosen: Vec<&Vec<usize>> = chosen.iter().map(|&i| &supports[i]).collect();
    // Bombieri over the heavy-overlap sets G_{S*, α} ⊆ D_α
    let to_set = |mask: u64| F2Set::from_words(dim, (0..64).filter(|j| mask >> j & 1 == 1).map(|j| words[j])).unwrap();
    let da = fibers[alpha].1;
    let g_sets: Vec<F2Set> = chosen
        .iter()
        .map(|s| {
            let g = (0..64).filter(|x| da >> x & 1 == 1).filter(|x| {
                let c = s.iter().filter(|&&b| fibers[b].1 >> x & 1 == 1).count() as u128;
                c * ed >= en * p1 as u128
            });
            to_set(g.fold(0u64, |acc, x| acc | 1 << x))
        })
        .collect();
    let d_set = to_set(da);
    let min_g = g_sets.iter().map(F2Set::len).min().unwrap_or(0);
    let mut t_used = 0;
    if min_g > 0 {
        let lam = rat(min_g as i64, d_set.len() as i64);
        let cap = (&lam * rat_int(g_sets.len() as i64)).floor().to_integer().to_usize().unwrap();
        let default_t = (&epsilon * rat_int(w as i64) / rat_int(2)).floor().to_integer().to_usize().unwrap().max(1);
        let t = params.t.unwrap_or(default_t).min(cap);
        if t >= 1 {
            let res = bombieri_intersection(&g_sets, &d_set, &lam, t)?;
            trace.bombieri_t = Some(t);
            trace.bombieri_size = Some(res.intersection.len());
            t_used = t;
        }
    }
    // E, Z and the final rectangle over subsets of E
    let mut e: Vec<usize> = chosen.iter().flat_map(|s| s.iter().copied()).collect();
    e.sort_unstable();
    e.dedup();
    trace.e_size = e.len();
    let z_need = &epsilon * rat_int((p1 * t_used) as i64) / rat_int(2);
    trace.z_size = (0..64)
        .filter(|x| da >> x & 1 == 1)
        .filter(|x| rat_int(e.iter().filter(|&&b| fibers[b].1 >> x & 1 == 1).count() as i64) >= z_need)
        .count();
    let l_min = (&epsilon * rat_int((p1 * t_used) as i64) / rat_int(4)).floor().to_integer().to_usize().unwrap().max(1);
    trace.l_min = l_min;
    // rows for the final rectangle: E plus every fiber meeting D_α
    for b in 0..fibers.len() {
        if inter(b, alpha) > 0 && !e.contains(&b) {
            e.push(b);
        }
    }
    e.sort_unstable();
    if e.len() > 20 {
        e.sort_by(|&a, &b| inter(b, alpha).cmp(&inter(a, alpha)).then(a.cmp(&b)));
        e.truncate(20);
        e.sort_unstable();
    }
    let ne = e.len();
    let mut inter_masks = vec![u64::MAX; 1 << ne];
    let mut best: Option<(usize, usize, u32, u32)> = None; // (area, short side, rows, mask)
    for mask in 1u32..(1 << ne) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        inter_masks[mask as usize] = inter_masks[rest as usize] & fibers[e[low]].1;
        let rows = mask.count_ones();
        if (rows as usize) < l_min {
            continue;
        }
        let cols = inter_masks[mask as usize].count_ones() as usize;
        let area = rows as usize * cols;
        let short = cols.min(rows as usize);
        let key = (area, short, rows, mask.reverse_bits());
        let better = match best {
            None => area > 0,
            Some((ba, bs, br, bm)) => key > (ba, bs, br, bm.reverse_bits()),
        };
        if better {
            best = Some((area, short, rows, mask));
        }
    }
    let Some((area, _, _, mask)) = best.filter(|b| b.0 >= params.min_area) else {
        trace.note = "no rectangle reaches the minimum area".into();
        return Ok(None);
    };
    let rows: Vec<usize> = (0..ne).filter(|i| mask >> i & 1 == 1).map(|i| fibers[e[i]].0).collect();
    let rect = Rectangle {
        prefix: F2Set::empty(dim)?,
        l: F2Set::from_words(dim, rows.iter().map(|&i| words[i]))?,
        lp: to_set(inter_masks[mask as usize]),
    };
    debug_assert_eq!(rect.area(), area);
    Ok(Some(rect))
}

fn family_gate(lambda: &F2Set, k: usize, warnings: &mut Vec<String>) -> Result<FamilyStatus> {
    let status = check_family(lambda, &FamilySpec::zero(k, lambda.dim())?, DEFAULT_BUDGET)?;
    match status {
        FamilyStatus::NotInFamily => Err(Error::Precondition(format!("Lambda is not in the family of weight {k}"))),
        FamilyStatus::UndecidedByBudget => {
            warnings.push(format!("membership of Lambda in the weight-{k} family is undecided"));
            Ok(status)
        }
        FamilyStatus::InFamily => Ok(status),
    }
}

fn extract_pair_inner(q: &F2Set, lambda: &F2Set, params: &InverseParams, fixed_split: Option<u64>, refine: bool) -> Result<ExtractionReport> {
    params.validate()?;
    if q.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch(q.dim(), lambda.dim()));
    }
    let mut warnings = Vec::new();
    let family_status = family_gate(lambda, 4 * params.p, &mut warnings)?;
    let masks = decompose(lambda, q.words(), 2)?;
    let refine_report = if refine && q.len() > 2 {
        Some(refine_connected(q, &params.connectedness_for(2))?)
    } else {
        None
    };
    let start: &F2Set = refine_report.as_ref().map_or(q, |r| &r.output);
    let index: HashMap<u32, u64> = q.words().iter().copied().zip(masks).collect();
    let mut residual: Vec<(u32, u64)> = start.words().iter().map(|w| (*w, index[w])).collect();
    let m1 = residual.len();
    let mut rectangles = Vec::new();
    let mut trace = Vec::new();
    let mut failures = 0;
    for round in 0..params.rounds {
        if residual.is_empty() || failures >= 3 {
            break;
        }
        let mut t = RoundTrace {
            round,
            residual: residual.len(),
            split_mass: 0,
            half_mass_reached: false,
            m3: 0,
            s1: 0,
            s2: 0,
            p1: None,
            epsilon: None,
            epsilon_condition: None,
            supports: 0,
            alpha: None,
            greedy_selected: 0,
            bombieri_t: None,
            bombieri_size: None,
            e_size: 0,
            z_size: 0,
            l_min: 0,
            rectangle: None,
            note: String::new(),
        };
        let input = RoundInput { lambda, points: &residual, fixed_split, m1 };
        match extraction_round(&input, params, round, &mut t)? {
            Some(rect) => {
                let pts = rect.points();
                let before = residual.len();
                residual.retain(|(w, _)| !pts.contains_word(*w));
                if before - residual.len() != pts.len() {
                    return Err(Error::Invariant("rectangle left the residual set".into()));
                }
                t.rectangle = Some(rectangles.len());
                rectangles.push(rect);
                failures = 0;
            }
            None => failures += 1,
        }
        trace.push(t);
    }
    verify_rectangles(&rectangles, q)?;
    let covered = covered_points(&rectangles, q.dim()).len();
    Ok(ExtractionReport {
        rectangles,
        covered,
        q_size: q.len(),
        coverage: format_rational(&rat(covered as i64, q.len().max(1) as i64)),
        family_status,
        refine: refine_report,
        trace,
        warnings,
        params: params.clone(),
    })
}

/// Rectangle extraction for `Q ⊆ Λ ∔ Λ`: refinement, best-of-T balanced
/// splits, fibers, dyadic buckets, supports, greedy selection, Bombieri
/// intersection; the emitted rectangle is removed and the loop repeats.
pub fn extract_rectangles_pair(q: &F2Set, lambda: &F2Set, params: &InverseParams) -> Result<ExtractionReport> {
    extract_pair_inner(q, lambda, params, None, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DFoldReport {
    pub d: usize,
    pub rectangle: Option<Rectangle>,
    pub parts: Vec<F2Set>,
    pub partition_mass: usize,
    /// Chosen `(d-2)`-prefix and the number of points it carries.
    pub prefix: F2Set,
    pub prefix_mass: usize,
    /// `D_p` of the prefix slice, when it has at least two points.
    pub prefix_d_p: Option<f64>,
    pub refine: Option<RefineReport>,
    pub pair: Option<ExtractionReport>,
    pub warnings: Vec<String>,
}

/// Rectangle extraction for `Q` inside the `d`-fold distinct sumset: split
/// `Λ` into `d` parts, fix the most popular `(d-2)`-prefix and extract a
/// rectangle from the slice over the last two parts.
pub fn extract_rectangles_d(q: &F2Set, lambda: &F2Set, d: usize, params: &InverseParams) -> Result<DFoldReport> {
    params.validate()?;
    if d < 2 {
        return Err(Error::Parameter("d must be >= 2".into()));
    }
    if d == 2 {
        let pair = extract_rectangles_pair(q, lambda, params)?;
        let rectangle = pair.rectangles.iter().max_by(|a, b| a.area().cmp(&b.area()).then(b.l.words().cmp(a.l.words()))).cloned();
        return Ok(DFoldReport {
            d,
            rectangle,
            parts: Vec::new(),
            partition_mass: q.len(),
            prefix: F2Set::empty(q.dim())?,
            prefix_mass: q.len(),
            prefix_d_p: None,
            refine: None,
            warnings: pair.warnings.clone(),
            pair: Some(pair),
        });
    }
    let mut warnings = Vec::new();
    family_gate(lambda, 2 * d * params.p, &mut warnings)?;
    let n = lambda.len();
    let a = n.div_ceil(d);
    if a * (d - 1) >= n {
        return Err(Error::Parameter(format!("|Lambda| = {n} too small for {d} parts")));
    }
    let masks_all = decompose(lambda, q.words(), d)?;
    let refine = if q.len() > 2 { Some(refine_connected(q, &params.connectedness_for(d))?) } else { None };
    let q1 = refine.as_ref().map_or(q, |r| &r.output);
    let index: HashMap<u32, u64> = q.words().iter().copied().zip(masks_all).collect();
    let masks: Vec<u64> = q1.words().iter().map(|w| index[w]).collect();
    let mut sizes = vec![a; d - 1];
    sizes.push(n - a * (d - 1));
    let mut rng = seeded_rng(params.seed);
    let (parts, mass) = best_partition(&masks, n, &sizes, params.split_trials, &mut rng);
    let words = lambda.words();
    let dim = q.dim();
    let mask_set = |m: u64| F2Set::from_words(dim, (0..n).filter(|i| m >> i & 1 == 1).map(|i| words[i])).unwrap();
    // any two parts may carry the rectangle; the rest index the prefix
    let mut groups: BTreeMap<((usize, usize), Vec<usize>), Vec<u32>> = BTreeMap::new();
    for u in 0..d {
        for v in u + 1..d {
            for (&m, &w) in masks.iter().zip(q1.words()) {
                if parts.iter().all(|&p| (m & p).count_ones() == 1) {
                    let key: Vec<usize> = (0..d).filter(|&i| i != u && i != v).map(|i| (m & parts[i]).trailing_zeros() as usize).collect();
                    let shift = key.iter().fold(0, |acc, &i| acc ^ words[i]);
                    groups.entry(((u, v), key)).or_default().push(w ^ shift);
                }
            }
        }
    }
    let parts_sets: Vec<F2Set> = parts.iter().map(|&m| mask_set(m)).collect();
    let best = groups.into_iter().fold(None::<(((usize, usize), Vec<usize>), Vec<u32>)>, |acc, (k, v)| match acc {
        Some(b) if b.1.len() >= v.len() => Some(b),
        _ => Some((k, v)),
    });
    let Some((((u, v), key), slice)) = best else {
        return Ok(DFoldReport {
            d,
            rectangle: None,
            parts: parts_sets,
            partition_mass: mass,
            prefix: F2Set::empty(dim)?,
            prefix_mass: 0,
            prefix_d_p: None,
            refine,
            pair: None,
            warnings,
        });
    };
    let prefix = F2Set::from_words(dim, key.iter().map(|&i| words[i]))?;
    let slice = F2Set::from_words(dim, slice)?;
    let prefix_d_p = (slice.len() >= 2).then(|| energy_auto(&slice, params.p.max(1)).map(|t| dk_zeta_from(&t, slice.len(), params.p.max(1)).d_k)).transpose()?;
    let sub_lambda = parts_sets[u].union(&parts_sets[v])?;
    let split = sub_lambda
        .words()
        .iter()
        .enumerate()
        .filter(|(_, w)| parts_sets[u].contains_word(**w))
        .fold(0u64, |acc, (i, _)| acc | 1 << i);
    let pair = extract_pair_inner(&slice, &sub_lambda, params, Some(split), false)?;
    let rectangle = pair
        .rectangles
        .iter()
        .max_by(|a, b| a.area().cmp(&b.area()).then(b.l.words().cmp(a.l.words())))
        .map(|r| Rectangle { prefix: prefix.clone(), l: r.l.clone(), lp: r.lp.clone() });
    if let Some(r) = &rectangle {
        r.check(q)?;
    }
    warnings.extend(pair.warnings.iter().cloned());
    Ok(DFoldReport {
        d,
        rectangle,
        parts: parts_sets,
        partition_mass: mass,
        prefix_mass: slice.len(),
        prefix,
        prefix_d_p,
        refine,
        pair: Some(pair),
        warnings,
    })
}

/// A planted instance: `Q` is a union of disjoint rectangles plus noise pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub lambda: F2Set,
    pub q: F2Set,
    pub planted: Vec<Rectangle>,
    pub noise: F2Set,
    pub seed: u64,
}

fn random_lambda(size: usize, seed: u64) -> Result<F2Set> {
    let dim = size as u32;
    random_dissociated(dim, size, &FamilySpec::zero(size, dim)?, seed)
}

fn sample(rng: &mut impl Rng, pool: &[usize], k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = pool.choose_multiple(rng, k).copied().collect();
    v.sort_unstable();
    v
}

/// Plants `h` rectangles `L_i + L'_i` with `|L_i| = lsize`, `|L'_i| = lpsize`
/// over a random independent `Λ` of the given size, all `L_i` on one side of
/// a hidden split, then adds `⌊noise · mass⌋` random pairs.
pub fn plant(h: usize, lsize: usize, lpsize: usize, lambda_size: usize, noise: &BigRational, seed: u64) -> Result<PlantedInstance> {
    if h == 0 || lsize == 0 || lpsize == 0 {
        return Err(Error::Parameter("h, lsize and lpsize must be positive".into()));
    }
    if lambda_size > 30 || lambda_size < 2 {
        return Err(Error::Parameter("Lambda size must lie in 2..=30".into()));
    }
    if noise.is_negative() || *noise > BigRational::one() {
        return Err(Error::Parameter("noise must lie in [0, 1]".into()));
    }
    let a = lambda_size.div_ceil(2);
    if lsize > a || lpsize > lambda_size - a {
        return Err(Error::Parameter("rectangle sides do not fit the split".into()));
    }
    let lambda = random_lambda(lambda_size, seed)?;
    let dim = lambda.dim();
    let words = lambda.words();
    let mut rng = seeded_rng(seed.wrapping_add(1));
    let mut idx: Vec<usize> = (0..lambda_size).collect();
    idx.shuffle(&mut rng);
    let (side_a, side_b) = idx.split_at(a);
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    let mut planted: Vec<Rectangle> = Vec::new();
    let mut tries = 0;
    while planted.len() < h {
        tries += 1;
        if tries > 10_000 {
            return Err(Error::Budget("could not place disjoint rectangles".into()));
        }
        let l = sample(&mut rng, side_a, lsize);
        let lp = sample(&mut rng, side_b, lpsize);
        let cells: Vec<(usize, usize)> = l.iter().flat_map(|&x| lp.iter().map(move |&y| (x, y))).collect();
        if cells.iter().any(|c| pairs.contains(c)) {
            continue;
        }
        pairs.extend(cells);
        planted.push(Rectangle {
            prefix: F2Set::empty(dim)?,
            l: F2Set::from_words(dim, l.iter().map(|&i| words[i]))?,
            lp: F2Set::from_words(dim, lp.iter().map(|&i| words[i]))?,
        });
    }
    let mass = pairs.len();
    let noise_count = (noise * rat_int(mass as i64)).floor().to_integer().to_usize().unwrap();
    let mut noise_words = Vec::new();
    let mut taken: HashSet<(usize, usize)> = pairs.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
    let mut tries = 0;
    while noise_words.len() < noise_count && tries < 100_000 {
        tries += 1;
        let x = rng.gen_range(0..lambda_size);
        let y = rng.gen_range(0..lambda_size);
        if x == y || !taken.insert((x.min(y), x.max(y))) {
            continue;
        }
        noise_words.push(words[x] ^ words[y]);
    }
    let noise_set = F2Set::from_words(dim, noise_words)?;
    let q = covered_points(&planted, dim).union(&noise_set)?;
    Ok(PlantedInstance { lambda, q, planted, noise: noise_set, seed })
}

/// `Σ prefix + L + L'` inside the `d`-fold distinct sumset of a random
/// independent `Λ`, with the rectangle drawn from the elements outside the prefix.
pub fn plant_prefixed(d: usize, lsize: usize, lpsize: usize, lambda_size: usize, seed: u64) -> Result<PlantedInstance> {
    if d < 2 || d - 2 + lsize + lpsize > lambda_size {
        return Err(Error::Parameter("rectangle and prefix do not fit in Lambda".into()));
    }
    let lambda = random_lambda(lambda_size, seed)?;
    let dim = lambda.dim();
    let words = lambda.words();
    let mut rng = seeded_rng(seed.wrapping_add(1));
    let mut idx: Vec<usize> = (0..lambda_size).collect();
    idx.shuffle(&mut rng);
    let set = |ix: &[usize]| F2Set::from_words(dim, ix.iter().map(|&i| words[i]));
    let rect = Rectangle {
        prefix: set(&idx[..d - 2])?,
        l: set(&idx[d - 2..d - 2 + lsize])?,
        lp: set(&idx[d - 2 + lsize..d - 2 + lsize + lpsize])?,
    };
    let q = rect.points();
    Ok(PlantedInstance { lambda, q, planted: vec![rect], noise: F2Set::empty(dim)?, seed })
}

/// A uniformly random `size`-subset of the `d`-fold distinct sumset of `lambda`.
pub fn random_sumset_subset(lambda: &F2Set, d: usize, size: usize, seed: u64) -> Result<F2Set> {
    let full = crate::f2n::dotplus_power(lambda, d)?;
    if size > full.len() {
        return Err(Error::Parameter(format!("only {} points available", full.len())));
    }
    let mut rng = seeded_rng(seed);
    let picked: Vec<u32> = full.words().choose_multiple(&mut rng, size).copied().collect();
    F2Set::from_words(lambda.dim(), picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(dim: u32, w: &[u32]) -> F2Set {
        F2Set::from_words(dim, w.iter().copied()).unwrap()
    }

    #[test]
    fn subgroup_is_connected() {
        let h = F2Set::span(4, &[1, 2, 4]).unwrap();
        let r = refine_connected(&h, &ConnectednessParams::standard(2)).unwrap();
        assert!(r.steps.is_empty() && r.certified);
        assert_eq!(r.output, h);
        assert!(r.size_bound_holds);
        assert_eq!(r.step_bound.holds, Some(true));
    }

    #[test]
    fn refinement_fires_with_large_c() {
        // C = 1: every B of lower energy density than Q is a violation
        let lam = F2Set::basis(6, 6).unwrap();
        let q = crate::f2n::dotplus_power(&lam, 2).unwrap();
        let q = F2Set::from_words(6, q.words()[..12].iter().copied()).unwrap();
        let p = ConnectednessParams::new(2, rat(1, 4), rat(1, 2), rat(1, 1)).unwrap();
        let r = refine_connected(&q, &p).unwrap();
        assert!(r.size_bound_holds);
        assert!(r.output.is_subset(&q));
        assert!(r.certified);
        assert!(!r.step_bound.applicable);
        assert!(refine_connected(&set(3, &[1, 2]), &p).is_err());
    }

    #[test]
    fn fibers_and_invariants() {
        let lam = F2Set::basis(6, 6).unwrap();
        let l1 = set(6, &[1, 2, 4]);
        let l2 = set(6, &[8, 16, 32]);
        let q = set(6, &[1 ^ 8, 1 ^ 16, 2 ^ 8, 4 ^ 32]);
        let f = FiberDecomposition::new(&q, &l1, &l2).unwrap();
        assert_eq!((f.s1, f.s2, f.mass()), (3, 3, 4));
        f.check_invariants(&q).unwrap();
        assert!(FiberDecomposition::new(&q, &lam, &l2).is_err());
    }

    #[test]
    fn greedy_examples() {
        let disjoint = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        assert_eq!(greedy_disjoint_supports(&disjoint, &rat(1, 2), 2).unwrap(), vec![0, 1]);
        let same = vec![vec![0, 1], vec![0, 1], vec![0, 1]];
        assert_eq!(greedy_disjoint_supports(&same, &rat(1, 2), 3).unwrap(), vec![0]);
        let t = greed_threshold(2, &rat(1, 2), 2, &[(3, 2)]).unwrap();
        // ω = 1: 4 * 3 = 12; ω = 2: 16 / 2 = 8
        assert_eq!(t, rat_int(40));
    }

    #[test]
    fn bombieri_examples() {
        let b = set(4, &[1, 2, 3, 4, 5, 6]);
        let res = bombieri_intersection(&[b.clone(), b.clone()], &b, &rat(1, 1), 2).unwrap();
        assert_eq!(res.intersection, b);
        let bs = vec![set(4, &[1, 2, 3]), set(4, &[2, 3, 4]), set(4, &[3, 4, 5]), set(4, &[1, 3, 6])];
        let res = bombieri_intersection(&bs, &b, &rat(1, 2), 2).unwrap();
        assert_eq!(res.indices, vec![0, 1]);
        assert_eq!(res.intersection.len(), 2);
        assert!(res.exhaustive && res.meets_bound);
        assert!(bombieri_intersection(&bs, &b, &rat(1, 2), 3).is_err());
    }

    #[test]
    fn single_planted_rectangle() {
        let inst = plant(1, 4, 4, 16, &rat(0, 1), 3).unwrap();
        assert_eq!(inst.q.len(), 16);
        let rep = extract_rectangles_pair(&inst.q, &inst.lambda, &InverseParams::default()).unwrap();
        assert_eq!(planted_coverage(&rep.rectangles, &inst.planted, inst.q.dim()), rat(1, 1));
        verify_rectangles(&rep.rectangles, &inst.q).unwrap();
    }

    #[test]
    fn prefixed_rectangle() {
        let inst = plant_prefixed(3, 3, 3, 10, 5).unwrap();
        let rep = extract_rectangles_d(&inst.q, &inst.lambda, 3, &InverseParams::default()).unwrap();
        let r = rep.rectangle.unwrap();
        r.check(&inst.q).unwrap();
        assert_eq!(r.prefix, inst.planted[0].prefix);
    }

    #[test]
    fn inverse2_guard_and_product() {
        let l1 = set(8, &[1, 2]);
        let l2 = set(8, &[4, 8, 16, 32, 64, 128]);
        let q = l1.sumset(&l2).unwrap();
        let f = FiberDecomposition::new(&q, &l1, &l2).unwrap();
        let r = inverse2_bound(&q, &f, 5, &rat(1, 2)).unwrap();
        assert_eq!(r.status, "hypothesis-not-met");
        assert!(inverse2_bound(&q, &f, 4, &rat(1, 2)).is_err());
    }
}
