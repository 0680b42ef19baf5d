//! Runs the four aligned-model schemes on the default setup and prints the
//! final-time errors against the exact and the limit solution.

use aptransport::model_aligned::AlignedModel;
use aptransport::schemes_aligned::{run_aligned, AlignedScheme, AlignedSchemeConfig};
use aptransport::Grid2D;

fn main() -> aptransport::Result<()> {
    let grid = Grid2D::periodic_2pi(201, 201)?;
    println!(
        "{:<12} {:>8} {:>12} {:>12} {:>10}",
        "scheme", "eps", "eta", "gamma", "peak"
    );
    for eps in [1.0, 1e-2, 1e-6] {
        for scheme in AlignedScheme::ALL {
            let cfg = AlignedSchemeConfig::new(AlignedModel::standard(eps), grid, 0.01, scheme)?;
            let run = run_aligned(&cfg, 100, &[1.0])?;
            let e = run.errors.last().expect("one error pair per snapshot");
            let peak = run.final_snapshot().expect("final snapshot").field.max();
            println!(
                "{:<12} {eps:>8.0e} {:>12.4e} {:>12.4e} {peak:>10.4}",
                scheme.name(),
                e.eta,
                e.gamma
            );
        }
    }
    Ok(())
}
