//! Connectedness refinement: repeatedly pass to a subset with a larger
//! normalized energy until the set is connected.

use f2comb::dissociation::{random_dissociated, FamilySpec};
use f2comb::inverse::{random_sumset_subset, refine_connected, ConnectednessParams};
use f2comb::F2Set;

fn main() -> f2comb::Result<()> {
    let lambda = random_dissociated(10, 10, &FamilySpec::zero(10, 10)?, 3)?;
    let params = ConnectednessParams::standard(2);
    for (i, size) in [6, 10, 14].into_iter().enumerate() {
        let q = random_sumset_subset(&lambda, 2, size, i as u64)?;
        let rep = refine_connected(&q, &params)?;
        println!(
            "|Q| = {:>2}  steps = {}  |Q'| = {:>2}  {}  step bound {:?}  size bound {}",
            q.len(),
            rep.steps.len(),
            rep.output.len(),
            rep.label,
            rep.step_bound.holds,
            rep.size_bound_holds
        );
    }

    // a subgroup is already connected
    let g = F2Set::span(6, &[1, 2, 4, 8])?;
    let rep = refine_connected(&g, &ConnectednessParams::standard(3))?;
    println!("subgroup of size {}: {} steps", g.len(), rep.steps.len());
    Ok(())
}
