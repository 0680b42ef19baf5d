//! Error against grid spacing for the IMEX scheme, refining one direction at
//! a time while the others stay fixed.

use aptransport::analysis::{convergence_study, SweepDirection};
use aptransport::model_aligned::AlignedModel;
use aptransport::schemes_aligned::AlignedScheme;

fn main() -> aptransport::Result<()> {
    let model = AlignedModel::standard(1.0);
    let ns = [65, 129, 257, 513];
    for d in [SweepDirection::Dt, SweepDirection::Dx, SweepDirection::Dy] {
        let st = convergence_study(&model, AlignedScheme::Imex, d, &ns, 513, 1.0)?;
        println!(
            "{} sweep: fitted slope {:.3} over points {:?}",
            d.name(),
            st.exact.fitted_slope,
            st.exact.window
        );
        for (h, e) in st.exact.step_sizes.iter().zip(&st.exact.errors) {
            println!("  h = {h:.4e}  eta = {e:.4e}");
        }
        if let Some(s) = &st.successive {
            println!("  successive differences: slope {:.3}", s.fitted_slope);
        }
    }
    Ok(())
}
