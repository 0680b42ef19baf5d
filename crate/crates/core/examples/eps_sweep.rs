//! Final-time errors of every aligned scheme as eps goes from 1 to 1e-6.
//! `eta` measures the distance to the exact solution and `gamma` the distance
//! to the limit solution.

use aptransport::analysis::{eps_sweep_aligned, logspace};
use aptransport::model_aligned::AlignedModel;
use aptransport::schemes_aligned::{AlignedScheme, AlignedSchemeConfig};
use aptransport::Grid2D;

fn main() -> aptransport::Result<()> {
    let grid = Grid2D::periodic_2pi(101, 101)?;
    let eps = logspace(-6.0, 0.0, 7);
    for scheme in [
        AlignedScheme::Fourier,
        AlignedScheme::MicroMacro,
        AlignedScheme::Lagrange,
    ] {
        let base = AlignedSchemeConfig::new(AlignedModel::standard(1.0), grid, 0.01, scheme)?;
        println!("{}", scheme.name());
        for e in eps_sweep_aligned(&base, &eps, 100)? {
            println!("  eps {:8.1e}  eta {:.4e}  gamma {:.4e}", e.eps, e.eta, e.gamma);
        }
    }
    Ok(())
}
