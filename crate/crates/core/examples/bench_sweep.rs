//! Seeded sweeps of the inequality checkers, printed as CSV.

use f2comb::bench::{reports_to_csv, sweep, SweepConfig, THEOREMS};

fn main() -> f2comb::Result<()> {
    for theorem in THEOREMS.iter().filter(|t| **t != "majority") {
        let cfg = SweepConfig { theorem: theorem.to_string(), instances: 20, seed: 1, max_dim: 8, max_lambda: 8 };
        let res = sweep(&cfg)?;
        let min_slack = res.rows.iter().map(|r| r.report.slack).fold(f64::INFINITY, f64::min);
        println!("{theorem:>9}: {} rows, {} violations, {} skipped, min slack {min_slack:.3}", res.rows.len(), res.violations, res.skipped.len());
    }

    let cfg = SweepConfig { theorem: "chang".into(), instances: 5, ..SweepConfig::default() };
    let reports: Vec<_> = sweep(&cfg)?.rows.into_iter().map(|r| r.report).collect();
    print!("{}", reports_to_csv(&reports)?);
    Ok(())
}
