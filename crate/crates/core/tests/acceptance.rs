//! Acceptance criteria 1–10, one PASS/FAIL line each.

use f2comb::bench::{build_majority, majority_core, majority_spectrum_agreement, sweep, verify_majority, SweepConfig};
use f2comb::cli::{replay_value, run, Command, ExperimentConfig, Format};
use f2comb::dissociation::{random_dissociated, FamilySpec};
use f2comb::energy::{energy_bruteforce, energy_function, energy_spectral};
use f2comb::exact::rat;
use f2comb::f2n::{dotplus_power, write_set, F2Set};
use f2comb::inverse::{extract_rectangles_pair, plant, planted_coverage, refine_connected, ConnectednessParams, InverseParams};
use f2comb::permanent::{exhaustive_per_zero, fk_zero_test, permanent, sophisticated_bound, verify_certificate, CombMatrix, PartitionClasses};
use f2comb::spectrum::{wht, IntFunction};
use f2comb::seeded_rng;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn naive_wht(vals: &[i64]) -> Vec<i64> {
    (0..vals.len())
        .map(|r| vals.iter().enumerate().map(|(x, v)| if (r & x).count_ones() % 2 == 0 { *v } else { -*v }).sum())
        .collect()
}

fn naive_energy(words: &[u32], k: usize) -> u64 {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    let mut idx = vec![0usize; k];
    loop {
        let s = idx.iter().fold(0, |a, &i| a ^ words[i]);
        *counts.entry(s).or_default() += 1;
        let mut j = 0;
        while j < k {
            idx[j] += 1;
            if idx[j] < words.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == k {
            break;
        }
    }
    counts.values().map(|c| c * c).sum()
}

fn criterion1() -> Outcome {
    let mut rng = seeded_rng(1);
    let mut cases = 0;
    for n in 1..=8u32 {
        for _ in 0..30 {
            let vals: Vec<i64> = (0..1usize << n).map(|_| rng.gen_range(-1000..=1000)).collect();
            let f = IntFunction::from_i64(n, &vals).map_err(|e| e.to_string())?;
            let fast: Vec<i64> = wht(&f).values().iter().map(|v| i64::try_from(v).unwrap()).collect();
            if fast != naive_wht(&vals) {
                return Err(format!("transform mismatch at n = {n}"));
            }
            let lhs: i128 = fast.iter().map(|&v| (v as i128).pow(2)).sum();
            let rhs: i128 = (1i128 << n) * vals.iter().map(|&v| (v as i128).pow(2)).sum::<i128>();
            if lhs != rhs {
                return Err(format!("Parseval fails at n = {n}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} random functions, n = 1..8"))
}

fn criterion2() -> Outcome {
    let check = |a: &F2Set, k: usize| -> Result<u64, String> {
        let b = energy_bruteforce(a, k).map_err(|e| e.to_string())?;
        let s = energy_spectral(a, k).map_err(|e| e.to_string())?;
        let c = energy_function(&IntFunction::indicator(a), k).map_err(|e| e.to_string())?;
        if b != s || b != c {
            return Err(format!("methods disagree on {a:?}, k = {k}"));
        }
        Ok(u64::try_from(&b).unwrap())
    };
    let mut exhaustive = 0;
    for mask in 0u32..1 << 16 {
        if mask.count_ones() > 5 {
            continue;
        }
        let a = F2Set::from_words(4, (0..16).filter(|i| mask >> i & 1 == 1)).unwrap();
        if a.is_empty() {
            continue;
        }
        for k in [2, 3] {
            let v = check(&a, k)?;
            if v != naive_energy(a.words(), k) {
                return Err(format!("oracle mismatch on {a:?}"));
            }
            exhaustive += 1;
        }
    }
    let mut rng = seeded_rng(2);
    for _ in 0..500 {
        let n = rng.gen_range(1..=12u32);
        let size = rng.gen_range(1..=(1usize << n).min(40));
        let words: Vec<u32> = (0..1u32 << n).collect::<Vec<_>>().choose_multiple(&mut rng, size).copied().collect();
        let a = F2Set::from_words(n, words).unwrap();
        let k = rng.gen_range(2..=3);
        let v = check(&a, k)?;
        if size <= 20 && v != naive_energy(a.words(), k) {
            return Err("random oracle mismatch".into());
        }
    }
    let basis = F2Set::basis(3, 3).unwrap();
    let sub = F2Set::span(3, &[1]).unwrap();
    if check(&basis, 2)? != 21 || check(&sub, 2)? != 8 {
        return Err("known values wrong".into());
    }
    Ok(format!("{exhaustive} exhaustive + 500 random cases, T2(basis3) = 21, T2(subgroup) = 8"))
}

fn clean_sweep(theorem: &str, instances: usize, max_dim: u32, max_lambda: usize) -> Result<f2comb::bench::SweepResult, String> {
    let cfg = SweepConfig { theorem: theorem.into(), instances, seed: 2024, max_dim, max_lambda };
    let res = sweep(&cfg).map_err(|e| e.to_string())?;
    if res.violations > 0 || !res.skipped.is_empty() {
        return Err(format!("{theorem}: {} violations, {} skipped", res.violations, res.skipped.len()));
    }
    Ok(res)
}

fn criterion3() -> Outcome {
    clean_sweep("diss", 300, 12, 10)?;
    clean_sweep("dissd", 300, 12, 10)?;
    let exact = clean_sweep("exact", 300, 12, 10)?;
    if exact.rows.iter().any(|r| r.report.extra["intermediate_holds"] != "true") {
        return Err("intermediate counting bound fails".into());
    }
    Ok("900 instances, zero violations".into())
}

fn criterion4() -> Outcome {
    clean_sweep("maing", 1000, 12, 10)?;
    for (n, gens) in [(5u32, vec![1u32, 2, 4]), (6, vec![1, 2]), (8, vec![1, 2, 4, 8, 16])] {
        let h = F2Set::span(n, &gens).unwrap();
        let alpha = rat(h.len() as i64, 1 << n);
        let perp = f2comb::spectrum::large_spectrum(&h, &alpha).unwrap();
        for k in 1..=3 {
            let r = f2comb::bench::check_spectrum_energy_lower(&h, &perp, &alpha, k).map_err(|e| e.to_string())?;
            if r.lhs != r.rhs {
                return Err(format!("subspace equality fails: {} vs {}", r.lhs, r.rhs));
            }
        }
    }
    Ok("1000 instances, subspace equality exact".into())
}

fn criterion5() -> Outcome {
    for np in 3..=16u32 {
        let (formula, brute) = majority_spectrum_agreement(np).map_err(|e| e.to_string())?;
        if brute.iter().any(|b| f2comb::exact::rat_int(b.clone()) != formula) {
            return Err(format!("formula disagrees with spectrum at n' = {np}"));
        }
    }
    let (v4, _) = majority_spectrum_agreement(4).unwrap();
    if v4 != rat(3, 1) || majority_core(4).unwrap().len() != 11 {
        return Err("n' = 4 values wrong".into());
    }
    let mut count = 0;
    for n in 6..=20u32 {
        for j in 4..=n.min(12) {
            let inst = build_majority(n, &rat(1, 1 << j)).map_err(|e| e.to_string())?;
            for d in 1..=3 {
                let r = verify_majority(&inst, d).map_err(|e| e.to_string())?;
                if !r.holds || r.extra["a_size_bounds"] != "true" || r.extra["r_alpha_lower_holds"] != "true" {
                    return Err(format!("majority check fails at n = {n}, delta = 2^-{j}"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("n' = 3..16 agree, {count} constructed instances verified"))
}

fn criterion6() -> Outcome {
    let bad4 = (0u32..1 << 16).into_par_iter().filter(|&mask| {
        let h = CombMatrix::new(4, 4, (0..16).map(|i| (mask >> i & 1) as u64).collect()).unwrap();
        let cert = fk_zero_test(&h);
        !verify_certificate(&h, &cert) || cert.is_zero() != permanent(&h).unwrap().is_zero()
    });
    if bad4.count() > 0 {
        return Err("4x4 mismatch".into());
    }
    let bad8 = (0u64..10_000).into_par_iter().filter(|&s| {
        let mut rng = seeded_rng(600 + s);
        let density = rng.gen_range(5..=60);
        let h = CombMatrix::new(8, 8, (0..64).map(|_| (rng.gen_range(0..100) < density) as u64).collect()).unwrap();
        let cert = fk_zero_test(&h);
        !verify_certificate(&h, &cert) || cert.is_zero() != permanent(&h).unwrap().is_zero()
    });
    if bad8.count() > 0 {
        return Err("8x8 mismatch".into());
    }
    let mut satisfying = 0;
    for p in 1..=3 {
        for r in 1..=4 {
            let rep = exhaustive_per_zero(p, r).map_err(|e| e.to_string())?;
            if !rep.violations.is_empty() {
                return Err(format!("reduced permanent vanishes at p = {p}, r = {r}"));
            }
            satisfying += rep.satisfying;
        }
    }
    Ok(format!("65536 + 10000 matrices agree; {satisfying} hypothesis-satisfying matrices, none falsify"))
}

fn criterion7() -> Outcome {
    let mut fails = Vec::new();
    for s in 0..200u64 {
        let mut rng = seeded_rng(700 + s);
        let p = 2 + (s % 2) as usize;
        let size = rng.gen_range(3..=8);
        let lam = random_dissociated(10, size, &FamilySpec::zero(size, 10).unwrap(), rng.gen()).unwrap();
        let es: Vec<F2Set> = (0..2 * p)
            .map(|_| {
                let k = rng.gen_range(1..=size);
                F2Set::from_words(10, lam.words().choose_multiple(&mut rng, k).copied()).unwrap()
            })
            .collect();
        let r = rng.gen_range(1..=2 * p);
        let labels: Vec<usize> = (0..2 * p).map(|_| rng.gen_range(0..r)).collect();
        let classes: Vec<Vec<usize>> = (0..r).map(|c| (0..2 * p).filter(|&i| labels[i] == c).collect()).filter(|c: &Vec<usize>| !c.is_empty()).collect();
        let part = PartitionClasses::new(2 * p, classes).unwrap();
        let rep = sophisticated_bound(&es, &part, &lam).map_err(|e| e.to_string())?;
        if !rep.holds || !rep.corollary_holds {
            fails.push(format!("seed {} (Z = {}, bound = {})", 700 + s, rep.z, rep.bound));
        }
    }
    if fails.is_empty() {
        Ok("200 instances, zero violations".into())
    } else {
        Err(format!("{} violations: {}", fails.len(), fails.join(", ")))
    }
}

fn criterion8() -> Outcome {
    let lam = F2Set::basis(6, 6).unwrap();
    let full = dotplus_power(&lam, 2).unwrap();
    let pts = full.words().to_vec();
    let masks: Vec<u32> = (0u32..1 << pts.len()).filter(|m| (3..=12).contains(&m.count_ones())).collect();
    let check = |c: BigRational| -> Result<(usize, usize), String> {
        let params = ConnectednessParams::new(2, rat(1, 4), rat(1, 2), c).unwrap();
        let (fired, bad): (usize, usize) = masks
            .par_iter()
            .map(|&m| {
                let q = F2Set::from_words(6, (0..pts.len()).filter(|i| m >> i & 1 == 1).map(|i| pts[i])).unwrap();
                let r = refine_connected(&q, &params).unwrap();
                let ok = r.certified
                    && r.steps.iter().all(|s| s.d_increased)
                    && r.step_bound.holds != Some(false)
                    && r.size_bound_holds;
                (r.steps.len(), usize::from(!ok))
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        if bad > 0 {
            return Err(format!("{bad} sets fail"));
        }
        Ok((masks.len(), fired))
    };
    let (sets, fired_std) = check(rat(1, 8))?;
    let (_, fired_edge) = check(rat(1, 4))?;
    Ok(format!("{sets} sets certified; fired steps: {fired_std} at C = 1/8, {fired_edge} at C = 1/4"))
}

fn criterion9() -> Outcome {
    let results: Vec<Result<bool, String>> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let h = 1 + (s % 3) as usize;
            let noise = rat((s % 11) as i64, 100);
            let inst = plant(h, 4, 4, 16, &noise, s).map_err(|e| e.to_string())?;
            let params = InverseParams { seed: s, ..InverseParams::default() };
            let rep = extract_rectangles_pair(&inst.q, &inst.lambda, &params).map_err(|e| e.to_string())?;
            // independent containment and disjointness check
            let mut seen = std::collections::HashSet::new();
            for r in &rep.rectangles {
                if !r.l.intersection(&r.lp).unwrap().is_empty() {
                    return Err(format!("seed {s}: L meets L'"));
                }
                for &a in r.l.words() {
                    for &b in r.lp.words() {
                        if !inst.q.contains_word(a ^ b) || !seen.insert(a ^ b) {
                            return Err(format!("seed {s}: rectangle leaves Q or overlaps"));
                        }
                    }
                }
            }
            Ok(planted_coverage(&rep.rectangles, &inst.planted, inst.q.dim()) >= rat(9, 10))
        })
        .collect();
    let mut good = 0;
    for r in results {
        good += usize::from(r?);
    }
    if good >= 90 {
        Ok(format!("{good}/100 instances reach coverage 0.9; all rectangles valid"))
    } else {
        Err(format!("only {good}/100 instances reach coverage 0.9"))
    }
}

fn criterion10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inst = plant(3, 4, 4, 16, &rat(1, 10), 99).unwrap();
    let qp = dir.path().join("q.set");
    let lp = dir.path().join("l.set");
    write_set(&qp, &inst.q).unwrap();
    write_set(&lp, &inst.lambda).unwrap();
    let configs = vec![
        ExperimentConfig { command: Command::Extract { q: qp.clone(), lambda: lp.clone(), d: 2, params: InverseParams::default() }, seed: 17, out: None, format: Format::Json },
        ExperimentConfig {
            command: Command::Bench { theorem: "maing".into(), sweep: Some(SweepConfig { theorem: "maing".into(), instances: 40, seed: 5, max_dim: 10, max_lambda: 8 }), n: None, delta: None, d: None },
            seed: 5,
            out: None,
            format: Format::Json,
        },
        ExperimentConfig { command: Command::Energy { set: qp.clone(), k: 3, method: "all".into() }, seed: 0, out: None, format: Format::Json },
        ExperimentConfig { command: Command::Plant { h: 2, lsize: 4, lpsize: 4, lambda_size: 16, noise: rat(1, 10), d: 2, q_out: None, lambda_out: None }, seed: 8, out: None, format: Format::Json },
    ];
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (p1, p4) = (pool(1), pool(4));
    for cfg in &configs {
        let a = p1.install(|| run(cfg)).map_err(|e| e.to_string())?;
        let b = p4.install(|| run(cfg)).map_err(|e| e.to_string())?;
        let (sa, sb) = (serde_json::to_string(&a.report.result).unwrap(), serde_json::to_string(&b.report.result).unwrap());
        if sa != sb {
            return Err("results differ across thread counts".into());
        }
        let recorded = serde_json::to_value(&a.report).unwrap();
        let re = p4.install(|| replay_value(&recorded)).map_err(|e| e.to_string())?;
        if !re.identical {
            return Err("replay differs".into());
        }
    }
    Ok(format!("{} configs identical under 1 and 4 threads and on replay", configs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("transform correctness", criterion1, 10),
        ("energy oracle equivalence", criterion2, 60),
        ("dissociated energy bounds", criterion3, 300),
        ("spectrum energy lower bound", criterion4, 300),
        ("majority construction", criterion5, 60),
        ("permanent and matching test", criterion6, 300),
        ("permanent-sum solution bound", criterion7, 300),
        ("connectedness refinement", criterion8, 600),
        ("planted rectangle recovery", criterion9, 600),
        ("determinism", criterion10, 600),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*limit);
        match (&out, over) {
            (Ok(msg), false) => println!("PASS criterion {}: {name}: {msg} ({:.1}s)", i + 1, took.as_secs_f64()),
            (Ok(msg), true) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {msg} but took {:.1}s > {limit}s", i + 1, took.as_secs_f64());
            }
            (Err(msg), _) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {msg} ({:.1}s)", i + 1, took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
