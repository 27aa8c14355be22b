//! Run an experiment from a config, then replay the report and check the
//! result is byte-identical.

use f2comb::cli::{replay_value, run, Command, ExperimentConfig, Format};
use f2comb::{f2n, F2Set};

fn main() -> f2comb::Result<()> {
    let dir = std::env::temp_dir().join(format!("f2comb-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let set = dir.join("a.txt");
    f2n::write_set(&set, &F2Set::span(6, &[3, 12, 48])?)?;

    let cfg = ExperimentConfig {
        command: Command::Energy { set, k: 2, method: "spectral".into() },
        seed: 42,
        out: None,
        format: Format::Json,
    };
    println!("config: {}", serde_json::to_string(&cfg)?);
    let outcome = run(&cfg)?;
    println!("result: {}  verdict {:?}", outcome.report.result, outcome.verdict);

    let value = serde_json::to_value(&outcome.report)?;
    let rep = replay_value(&value)?;
    println!("replay identical: {}", rep.identical);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
