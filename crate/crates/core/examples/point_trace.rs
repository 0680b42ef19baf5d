//! One-dimensional sub-case (`a = 0`, `f0 = 1 + cos 2y`): the value at the last
//! stored node over time for each scheme. The exact solution oscillates with
//! angular frequency `2b / eps` and no damping.

use aptransport::experiments::runner::trace_node;
use aptransport::model_aligned::{AlignedModel, InitialCondition};
use aptransport::schemes_aligned::{AlignedScheme, AlignedSchemeConfig};
use aptransport::Grid2D;

fn main() -> aptransport::Result<()> {
    let grid = Grid2D::periodic_2pi(3, 201)?;
    let node = (grid.mx() - 1, grid.my() - 1);
    for eps in [1.0, 0.1] {
        let model = AlignedModel::new(0.0, 1.0, eps, InitialCondition::CosY)?;
        println!("eps = {eps}");
        for scheme in AlignedScheme::ALL {
            let cfg = AlignedSchemeConfig::new(model.clone(), grid, 0.02, scheme)?;
            let (trace, _) = trace_node(&cfg, 500, node)?;
            // The column mean of 1 + cos 2y is 1.
            let amp = |from: usize, to: usize| trace[from..to].iter().fold(0.0f64, |m, p| m.max((p.1 - 1.0).abs()));
            let n = trace.len();
            let (t, v, exact) = trace[trace.len() - 1];
            println!(
                "  {:<12} f({t}) = {v:+.5} (exact {exact:+.5})  amplitude first tenth {:.3e}  second half {:.3e}",
                scheme.name(),
                amp(n / 20, n / 10),
                amp(n / 2, n)
            );
        }
    }
    Ok(())
}
