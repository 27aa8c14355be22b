//! Plant disjoint rectangles L + L' inside the 2-fold sumset of a
//! dissociated set, add noise, and recover them.

use f2comb::exact::rat;
use f2comb::inverse::{extract_rectangles_d, extract_rectangles_pair, plant, plant_prefixed, planted_coverage, verify_rectangles, InverseParams};

fn main() -> f2comb::Result<()> {
    let params = InverseParams::default();
    for (seed, h) in [(0, 1), (1, 2), (2, 3)] {
        let inst = plant(h, 4, 4, 24, &rat(1, 20), seed)?;
        let rep = extract_rectangles_pair(&inst.q, &inst.lambda, &params)?;
        verify_rectangles(&rep.rectangles, &inst.q)?;
        let cov = planted_coverage(&rep.rectangles, &inst.planted, inst.q.dim());
        let shapes: Vec<_> = rep.rectangles.iter().map(|r| (r.l.len(), r.lp.len())).collect();
        println!("h = {h}  |Q| = {:>2}  found {shapes:?}  planted coverage {cov}  Q coverage {}", inst.q.len(), rep.coverage);
    }

    let inst = plant_prefixed(3, 4, 4, 18, 5)?;
    let rep = extract_rectangles_d(&inst.q, &inst.lambda, 3, &params)?;
    match rep.rectangle {
        Some(r) => println!("d = 3: prefix of size {}, rectangle {} x {}", r.prefix.len(), r.l.len(), r.lp.len()),
        None => println!("d = 3: nothing found ({:?})", rep.warnings),
    }
    Ok(())
}
