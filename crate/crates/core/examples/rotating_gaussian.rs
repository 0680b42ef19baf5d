//! Gaussian bump in the rotating flow. For small eps the fully implicit scheme
//! smears the bump out while the Lagrange scheme keeps its radial profile.

use aptransport::model_rotating::RotatingModel;
use aptransport::schemes_rotating::{run_rotating, RotatingScheme, RotatingSchemeConfig};
use aptransport::Grid2D;

fn main() -> aptransport::Result<()> {
    let grid = Grid2D::new(-3.0, 3.0, -3.0, 3.0, 80, 80)?;
    println!(
        "initial peak {:.4}",
        RotatingModel::standard(1.0).ic.sample(grid)?.max()
    );
    for eps in [1.0, 1e-2, 1e-8] {
        for scheme in RotatingScheme::ALL {
            let cfg = RotatingSchemeConfig::new(RotatingModel::standard(eps), grid, 1.0 / 64.0, scheme)?;
            let run = run_rotating(&cfg, 64, &[1.0])?;
            let e = run.errors.last().expect("final errors");
            let peak = run.final_snapshot().expect("final snapshot").field.max();
            println!(
                "eps {eps:7.0e} {:<10} peak {peak:.4}  eta {:.3e}  gamma {:.3e}  mass drift {:.1e}",
                scheme.name(),
                e.eta,
                e.gamma,
                run.mass_drift(1.0)
            );
        }
    }
    Ok(())
}
