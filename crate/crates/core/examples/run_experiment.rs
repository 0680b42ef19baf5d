//! Builds an experiment config in code, runs it into a temporary directory and
//! lists the files named in the manifest.
//!
//! The same runs are available from the command line:
//! `aptransport run examples/configs/batch.json --out out --workers 4`.

use aptransport::experiments::{run_experiment, ExperimentConfig};

fn main() -> aptransport::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{"kind": "amplification-check", "nx": 33, "ny": 33, "eps": [1, 1e-4], "modes": [[1, 0], [2, 3]]}"#,
    )?;
    let dir = std::env::temp_dir().join("aptransport-example");
    let m = run_experiment(&cfg, &dir, 2)?;
    println!("wrote {} ({:.2} s)", dir.display(), m.wall_time_s);
    for o in &m.outputs {
        println!("  {:<28} {}", o.path, &o.sha256[..16]);
    }
    for (k, v) in &m.summary {
        println!("  {k} = {v:.3e}");
    }
    Ok(())
}
