//! Measured one-step amplification factor of the IMEX scheme against the
//! closed form, and what happens just past the CFL limit.

use aptransport::analysis::{angular, measure_xi, xi_imex};
use aptransport::model_aligned::{AlignedModel, InitialCondition};
use aptransport::schemes_aligned::{AlignedScheme, AlignedSchemeConfig};
use aptransport::Grid2D;

fn config(alpha: f64, eps: f64) -> aptransport::Result<AlignedSchemeConfig> {
    let grid = Grid2D::periodic_2pi(65, 65)?;
    let dt = 0.01;
    let model = AlignedModel::new(alpha * grid.dx / dt, 1.0, eps, InitialCondition::SinCos)?;
    AlignedSchemeConfig::new(model, grid, dt, AlignedScheme::Imex)
}

fn main() -> aptransport::Result<()> {
    let c = config(0.5, 1e-3)?;
    for (k, l) in [(1, 0), (0, 1), (3, 5), (31, -7)] {
        let (kk, ll) = angular(&c.grid, k, l);
        let closed = xi_imex(c.alpha(), c.beta(), 1e-3, kk, ll, c.grid.dx, c.grid.dy);
        println!(
            "k = {k:3}, l = {l:3}: measured {:.12}  closed form {closed:.12}",
            measure_xi(&c, k, l)?
        );
    }
    for alpha in [1.0, 1.05] {
        let c = config(alpha, 1.0)?;
        let top = (-31..=31)
            .map(|k| measure_xi(&c, k, 0))
            .collect::<aptransport::Result<Vec<_>>>()?;
        println!(
            "alpha = {alpha}: max_k |xi| = {:.6}",
            top.into_iter().fold(0.0, f64::max)
        );
    }
    Ok(())
}
