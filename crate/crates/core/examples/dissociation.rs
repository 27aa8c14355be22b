//! Dissociativity, coordinates over a dissociated set, and the budgeted
//! family test with a forbidden set R.

use f2comb::dissociation::{coordinates, in_family, is_dissociated, random_dissociated, rank, FamilySpec, DEFAULT_BUDGET};
use f2comb::F2Set;

fn main() -> f2comb::Result<()> {
    let l = F2Set::from_words(6, [0b000011, 0b000110, 0b011000, 0b100001])?;
    println!("rank {} of {} vectors, dissociated: {}", rank(l.words()), l.len(), is_dissociated(&l));
    let x = l.words()[0] ^ l.words()[2];
    println!("coordinates of {x:06b}: {:?}", coordinates(l.words(), x).map(|m| format!("{m:04b}")));

    let dependent = l.union(&F2Set::from_words(6, [0b011011])?)?;
    println!("after adding a sum: dissociated = {}", is_dissociated(&dependent));

    // Λ_R(k): no sum of at most k elements lands in R
    let r = F2Set::from_words(8, [0, 0b1111_0000])?;
    for k in 1..=4 {
        let spec = FamilySpec::new(k, r.clone())?;
        let s = random_dissociated(8, 6, &spec, 7)?;
        let status = in_family(&s, &spec, DEFAULT_BUDGET)?;
        println!("k = {k}: sampled {:?} -> {}", s.words(), status.as_str());
    }
    Ok(())
}
