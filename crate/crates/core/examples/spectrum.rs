//! Walsh–Hadamard spectrum of a small set and its large spectrum.

use f2comb::exact::rat;
use f2comb::spectrum::{inverse_wht, large_spectrum, spectrum_of_set, IntFunction};
use f2comb::{f2n, F2Set};

fn main() -> f2comb::Result<()> {
    // a 3-dimensional subspace of F_2^5 plus one stray point
    let mut a = F2Set::span(5, &[0b00011, 0b00101, 0b01000])?;
    a = a.union(&F2Set::from_words(5, [0b10000])?)?;
    println!("A = {}", f2n::serialize_set(&a).trim().replace('\n', " "));

    let spec = spectrum_of_set(&a);
    for r in 0..32u32 {
        let v = spec.get(r);
        if v.magnitude() > &num_bigint::BigUint::from(1u8) {
            println!("  1_A^({}) = {}", f2n::bitstring(r, 5), v);
        }
    }

    let back = inverse_wht(&spec)?;
    assert_eq!(back, IntFunction::indicator(&a));

    for alpha in [rat(1, 4), rat(1, 2), rat(9, 10)] {
        let big = large_spectrum(&a, &alpha)?;
        println!("alpha = {alpha}: |Spec| = {}", big.len());
    }
    Ok(())
}
