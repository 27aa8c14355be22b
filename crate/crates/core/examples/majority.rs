//! The majority-type set showing the energy lower bound is tight up to
//! constants: spectrum of a Hamming ball lifted to F_2^n.

use f2comb::bench::{build_majority, majority_spectrum_agreement, verify_majority};
use f2comb::exact::rat;

fn main() -> f2comb::Result<()> {
    for m in [3, 5, 8, 11] {
        let (coef, values) = majority_spectrum_agreement(m)?;
        println!("n' = {m:>2}: coefficient {coef}, {} weight-one values agree", values.len());
    }

    let inst = build_majority(14, &rat(1, 64))?;
    println!("{}", serde_json::to_string_pretty(&inst).unwrap());
    for d in 1..=3 {
        let r = verify_majority(&inst, d)?;
        println!("d = {d}: lhs {} rhs {} holds {}", r.lhs, r.rhs, r.holds);
    }
    Ok(())
}
