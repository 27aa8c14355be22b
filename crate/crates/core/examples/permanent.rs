//! Permanents of nonnegative integer matrices, the Frobenius–König zero
//! test with a checkable certificate, and the reduced-matrix lemma.

use f2comb::exact::rat;
use f2comb::permanent::{exhaustive_per_zero, fk_zero_test, permanent, pi_value, reduced_permanent_check, verify_certificate, CombMatrix};

fn main() -> f2comb::Result<()> {
    let h = CombMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]])?;
    println!("per(H) = {}", permanent(&h)?);

    let z = CombMatrix::from_rows(&[vec![1, 1, 1], vec![0, 0, 1], vec![0, 0, 1]])?;
    for m in [&h, &z] {
        let cert = fk_zero_test(m);
        println!("{} -> {:?} (certificate ok: {})", m.serialize().trim().replace('\n', " | "), cert, verify_certificate(m, &cert));
    }

    // two 2's per row, every column used, total 2p
    let h = CombMatrix::from_rows(&[vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1]])?;
    let rep = reduced_permanent_check(&h)?;
    println!("hypotheses {} kept columns {:?} per(H_0) = {:?}", rep.hypotheses_hold, rep.kept_cols, rep.per_h0);

    let ex = exhaustive_per_zero(3, 4)?;
    println!("exhaustive p = 3, r = 4: {} matrices, {} satisfy, {} violations", ex.matrices, ex.satisfying, ex.violations.len());

    for (ts, p, d0) in [(vec![2, 2, 2, 2], 4, rat(1, 2)), (vec![4, 2, 2, 2], 5, rat(1, 1))] {
        let r = pi_value(&ts, p, &d0)?;
        println!("t = {ts:?}: pi = {} <= {} : {}", r.quantity.pi, r.bound, r.holds);
    }
    Ok(())
}
