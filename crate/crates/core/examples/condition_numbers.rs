//! 2-norm condition numbers of the implicit matrices as eps shrinks. The
//! reformulated schemes stay bounded while the direct discretizations grow
//! like 1/eps.

use aptransport::analysis::{cond_sweep, logspace, AlignedFamily};
use aptransport::linalg::cond::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use aptransport::schemes_rotating::{assemble_imp, assemble_lagrange_rot, DEFAULT_GAMMA};
use aptransport::Grid2D;
use std::f64::consts::PI;

fn main() -> aptransport::Result<()> {
    let eps = logspace(-6.0, -2.0, 5);
    println!("column matrices, 63 unknowns, beta = 1/pi");
    for f in AlignedFamily::ALL {
        let t = cond_sweep(|e| Ok(f.matrix(63, 1.0 / PI, e)), &eps, DEFAULT_MAX_ITER, DEFAULT_TOL);
        report(f.name(), &t)?;
    }
    let grid = Grid2D::new(-3.0, 3.0, -3.0, 3.0, 40, 40)?;
    let dt = 1.0 / 64.0;
    println!("rotating model, 40 x 40 nodes");
    report(
        "imp",
        &cond_sweep(|e| assemble_imp(&grid, e, dt), &eps, DEFAULT_MAX_ITER, DEFAULT_TOL),
    )?;
    let la = cond_sweep(
        |e| assemble_lagrange_rot(&grid, e, dt, DEFAULT_GAMMA),
        &eps,
        DEFAULT_MAX_ITER,
        DEFAULT_TOL,
    );
    report("lagrange", &la)
}

fn report(name: &str, t: &aptransport::analysis::CondTable) -> aptransport::Result<()> {
    let conds: Vec<String> = t.points().iter().map(|p| format!("{:.3e}", p.1)).collect();
    println!("  {name:<12} slope {:+.3}  [{}]", t.slope()?, conds.join(", "));
    Ok(())
}
