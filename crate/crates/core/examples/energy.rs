//! Additive energies T_k computed three ways.

use f2comb::energy::{dk_zeta, energy, EnergyMethod};
use f2comb::F2Set;

fn main() -> f2comb::Result<()> {
    let sets = [
        ("basis(3)", F2Set::basis(3, 3)?),
        ("subgroup of size 8", F2Set::span(6, &[1, 2, 4])?),
        ("basis(8)", F2Set::basis(8, 8)?),
    ];
    for (name, a) in &sets {
        for k in 2..=3 {
            let b = energy(a, k, EnergyMethod::Bruteforce)?;
            let s = energy(a, k, EnergyMethod::Spectral)?;
            let c = energy(a, k, EnergyMethod::Convolution)?;
            assert!(b.value == s.value && s.value == c.value);
            let z = dk_zeta(a, k)?;
            println!("{name:>20}  k = {k}  T_k = {:>8}  D_k = {:.4}  zeta_k = {:.4}", b.value, z.d_k, z.zeta_k);
        }
    }
    Ok(())
}
