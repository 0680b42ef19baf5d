//! Error metrics, convergence orders, Von Neumann factors and condition-number sweeps.

use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::linalg::{cond2_estimate, SparseMatrix};
use crate::model_aligned::{exact_aligned, AlignedModel};
use crate::schemes_aligned::{
    imex_column_matrix, lagrange_column_matrix, micromacro_column_matrix, run_aligned, AlignedScheme,
    AlignedSchemeConfig, AlignedState, AlignedStepper,
};
use serde::{Deserialize, Serialize};

/// Errors against the exact solution (`eta`) and the limit solution (`gamma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub eta: f64,
    pub gamma: f64,
    pub t: f64,
    pub eps: f64,
}

/// `max_{i,j} |f_num - f_ex|`.
pub fn error_eta(f_num: &Field2D, f_ex: &Field2D) -> Result<f64> {
    f_num.max_abs_diff(f_ex)
}

/// `max_{i,j} |f_num(i, j) - f0(i)|`.
pub fn error_gamma(f_num: &Field2D, f0: &[f64]) -> Result<f64> {
    let g = f_num.grid;
    if f0.len() != g.mx() {
        return Err(Error::LengthMismatch {
            expected: g.mx(),
            got: f0.len(),
        });
    }
    let mut e: f64 = 0.0;
    for (i, &l) in f0.iter().enumerate() {
        for &v in f_num.column(i) {
            e = e.max((v - l).abs());
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub step_sizes: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_slope: f64,
    /// Half-open index range of the points used by the fit.
    pub window: (usize, usize),
}

impl ConvergenceTable {
    pub fn new(step_sizes: Vec<f64>, errors: Vec<f64>) -> Self {
        let n = errors.len();
        Self {
            step_sizes,
            errors,
            fitted_slope: f64::NAN,
            window: (0, n),
        }
    }
}

/// Least-squares line through `(log h, log e)`; returns slope, intercept and
/// the largest relative misfit `|e / e_fit - 1|`.
fn loglog_fit(h: &[f64], e: &[f64]) -> (f64, f64, f64) {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let misfit = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| ((y - (icept + slope * x)).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    (slope, icept, misfit)
}

/// Relative misfit above which the head or tail of a table is treated as
/// outside the asymptotic range.
pub const KNEE_MISFIT: f64 = 0.05;

/// Fits the log-log slope of `errors` against `step_sizes`.
///
/// When the fit over all points misses some point by more than 5%, the widest
/// contiguous window of at least three points that fits within 5% is used
/// instead (best misfit among equally wide windows); the chosen window is
/// stored in the table.
pub fn fit_loglog_slope(table: &mut ConvergenceTable) -> Result<f64> {
    let n = table.errors.len();
    if n < 3 || table.step_sizes.len() != n {
        return Err(Error::DegenerateData(format!(
            "need at least 3 matching points, got {} sizes and {} errors",
            table.step_sizes.len(),
            n
        )));
    }
    if table
        .errors
        .iter()
        .chain(&table.step_sizes)
        .any(|v| !(v.is_finite() && *v > 0.0))
    {
        return Err(Error::DegenerateData("errors and step sizes must be positive".into()));
    }
    if table.step_sizes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DegenerateData("step sizes must be strictly decreasing".into()));
    }
    let (mut slope, _, misfit) = loglog_fit(&table.step_sizes, &table.errors);
    let mut window = (0, n);
    if misfit > KNEE_MISFIT {
        'outer: for len in (3..n).rev() {
            let mut best: Option<(f64, f64, usize)> = None;
            for start in 0..=n - len {
                let (s, _, m) = loglog_fit(&table.step_sizes[start..start + len], &table.errors[start..start + len]);
                if m <= KNEE_MISFIT && best.is_none_or(|b| m < b.1) {
                    best = Some((s, m, start));
                }
            }
            if let Some((s, _, start)) = best {
                slope = s;
                window = (start, start + len);
                break 'outer;
            }
        }
    }
    table.fitted_slope = slope;
    table.window = window;
    Ok(slope)
}

/// Plain least-squares log-log slope of `y` against `x`, no windowing.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::DegenerateData("log-log slope needs positive paired data".into()));
    }
    Ok(loglog_fit(x, y).0)
}

/// Modulus of the IMEX amplification factor for angular wavenumbers `(k, l)`.
pub fn xi_imex(alpha: f64, beta: f64, eps: f64, k: f64, l: f64, dx: f64, dy: f64) -> f64 {
    let sx = (k * dx / 2.0).sin().powi(2);
    let sy = (l * dy / 2.0).sin().powi(2);
    let num = 1.0 - 4.0 * alpha * (1.0 - alpha) * sx;
    let den = eps * eps + 4.0 * beta * (eps + beta) * sy;
    if den == 0.0 {
        // eps = 0 and l = 0: the eps-free limit of the ratio is 1 in y.
        return num.max(0.0).sqrt();
    }
    eps * (num / den).sqrt()
}

/// Angular wavenumbers of integer mode indices on a grid.
pub fn angular(grid: &Grid2D, k: i64, l: i64) -> (f64, f64) {
    let tau = 2.0 * std::f64::consts::PI;
    (tau * k as f64 / grid.lx(), tau * l as f64 / grid.ly())
}

/// One-step complex amplification of mode `(k, l)` (integer indices),
/// measured from a cosine and a sine seed of amplitude `amp`.
pub fn measure_xi_complex(cfg: &AlignedSchemeConfig, k: i64, l: i64, amp: f64) -> Result<num_complex::Complex64> {
    let g = cfg.grid;
    if 2 * k.unsigned_abs() as usize >= g.mx() || 2 * l.unsigned_abs() as usize >= g.my() {
        return Err(Error::ModeNotRepresentable { k, l });
    }
    let (kk, ll) = angular(&g, k, l);
    let phase = |x: f64, y: f64| kk * (x - g.x_min) + ll * (y - g.y_min);
    let cos = Field2D::sample(g, |x, y| amp * phase(x, y).cos(), 0.0)?;
    let sin = Field2D::sample(g, |x, y| amp * phase(x, y).sin(), 0.0)?;
    let stepper = AlignedStepper::new(cfg)?;
    let one = |f: &Field2D| -> Result<Field2D> {
        let (s, _) = stepper.step(&AlignedState::initial(cfg.scheme, f))?;
        Ok(s.field())
    };
    let (rc, rs) = (one(&cos)?, one(&sin)?);
    // Coefficient of e^{i(kx + ly)} in rc + i rs.
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..g.mx() {
        for j in 0..g.my() {
            let p = phase(g.x(i), g.y(j));
            let u = num_complex::Complex64::new(rc.values[g.idx(i, j)], rs.values[g.idx(i, j)]);
            acc += u * num_complex::Complex64::new(p.cos(), -p.sin());
        }
    }
    Ok(acc / (g.len() as f64 * amp))
}

/// `|xi|` of mode `(k, l)` for the configured scheme.
pub fn measure_xi(cfg: &AlignedSchemeConfig, k: i64, l: i64) -> Result<f64> {
    measure_xi_complex(cfg, k, l, 1.0).map(|c| c.norm())
}

/// Aligned-model matrix families whose conditioning is studied against eps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignedFamily {
    Imex,
    MicroMacro,
    Lagrange,
}

impl AlignedFamily {
    pub const ALL: [AlignedFamily; 3] = [AlignedFamily::Imex, AlignedFamily::MicroMacro, AlignedFamily::Lagrange];

    pub fn name(&self) -> &'static str {
        match self {
            AlignedFamily::Imex => "imex",
            AlignedFamily::MicroMacro => "micro-macro",
            AlignedFamily::Lagrange => "lagrange",
        }
    }

    /// Column matrix for `m` unknowns per column.
    pub fn matrix(&self, m: usize, beta: f64, eps: f64) -> SparseMatrix {
        match self {
            AlignedFamily::Imex => {
                SparseMatrix::assemble(m, m, &imex_column_matrix(m, beta, eps).triplets()).expect("cyclic pattern")
            }
            AlignedFamily::MicroMacro => micromacro_column_matrix(m, beta, eps),
            AlignedFamily::Lagrange => lagrange_column_matrix(m, beta, eps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondRow {
    pub eps: f64,
    pub cond: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondTable {
    pub rows: Vec<CondRow>,
}

impl CondTable {
    /// `(eps, cond)` pairs of the successful entries.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.cond.map(|c| (r.eps, c))).collect()
    }

    /// Log-log slope of cond against eps over the successful entries.
    pub fn slope(&self) -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.points().into_iter().unzip();
        loglog_slope(&x, &y)
    }

    /// `max |c(eps) - c(eps_min)| / c(eps_min)`: deviation from the small-eps plateau.
    pub fn plateau_deviation(&self) -> Result<f64> {
        let pts = self.points();
        let base = pts
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| Error::DegenerateData("empty condition table".into()))?
            .1;
        Ok(pts.iter().map(|p| (p.1 - base).abs() / base).fold(0.0, f64::max))
    }
}

/// Condition numbers of `family(eps)` over `eps_list`. Failures are recorded
/// per entry and the sweep continues.
pub fn cond_sweep(
    family: impl Fn(f64) -> Result<SparseMatrix>,
    eps_list: &[f64],
    max_iter: usize,
    tol: f64,
) -> CondTable {
    let rows = eps_list
        .iter()
        .map(
            |&eps| match family(eps).and_then(|m| cond2_estimate(&m, max_iter, tol)) {
                Ok(c) => CondRow {
                    eps,
                    cond: Some(c.cond()),
                    error: None,
                },
                Err(e) => CondRow {
                    eps,
                    cond: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    CondTable { rows }
}

/// `n` log-spaced values from `10^lo` to `10^hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepDirection {
    Dt,
    Dx,
    Dy,
}

impl SweepDirection {
    pub fn name(&self) -> &'static str {
        match self {
            SweepDirection::Dt => "dt",
            SweepDirection::Dx => "dx",
            SweepDirection::Dy => "dy",
        }
    }
}

/// Errors of one scheme while one resolution is refined and the others stay at `fine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub scheme: AlignedScheme,
    pub direction: SweepDirection,
    /// Node counts of the refined direction (time levels for `Dt`).
    pub ns: Vec<usize>,
    pub fine: usize,
    /// `eta(T)` against the exact solution.
    pub exact: ConvergenceTable,
    /// `max |f_N - f_N'|` between consecutive members of the sweep, on the
    /// coarser grid's nodes; isolates the refined direction.
    pub successive: Option<ConvergenceTable>,
}

/// Runs a convergence sweep on `[0, 2pi]^2` up to `t_final`. Node counts must
/// satisfy `N_{k+1} - 1 = 2 (N_k - 1)` for the successive table.
pub fn convergence_study(
    model: &AlignedModel,
    scheme: AlignedScheme,
    direction: SweepDirection,
    ns: &[usize],
    fine: usize,
    t_final: f64,
) -> Result<ConvergenceStudy> {
    let mut fields = Vec::with_capacity(ns.len());
    let mut sizes = Vec::with_capacity(ns.len());
    let mut errors = Vec::with_capacity(ns.len());
    for &n in ns {
        let (nx, ny, nt) = match direction {
            SweepDirection::Dx => (n, fine, fine),
            SweepDirection::Dy => (fine, n, fine),
            SweepDirection::Dt => (fine, fine, n),
        };
        if nt < 2 {
            return Err(Error::InvalidParameter("need at least two time levels".into()));
        }
        let g = Grid2D::periodic_2pi(nx, ny)?;
        let steps = nt - 1;
        let dt = t_final / steps as f64;
        let cfg = AlignedSchemeConfig::new(model.clone(), g, dt, scheme)?;
        let run = run_aligned(&cfg, steps, &[steps as f64 * dt])
            .map_err(|e| e.context(format!("{} sweep, N = {n}", direction.name())))?;
        let f = run.snapshots.into_iter().last().expect("final snapshot").field;
        let ex = exact_aligned(model, f.time, g)?;
        errors.push(error_eta(&f, &ex)?);
        sizes.push(match direction {
            SweepDirection::Dx => g.dx,
            SweepDirection::Dy => g.dy,
            SweepDirection::Dt => dt,
        });
        fields.push(f);
    }
    let mut exact = ConvergenceTable::new(sizes.clone(), errors);
    fit_loglog_slope(&mut exact)?;
    let nested = ns.windows(2).all(|w| w[1] - 1 == 2 * (w[0] - 1));
    let successive = if nested && ns.len() >= 4 {
        let mut e = Vec::new();
        for w in fields.windows(2) {
            e.push(coarse_diff(&w[0], &w[1], direction));
        }
        let mut t = ConvergenceTable::new(sizes[..sizes.len() - 1].to_vec(), e);
        fit_loglog_slope(&mut t).ok().map(|_| t)
    } else {
        None
    };
    Ok(ConvergenceStudy {
        scheme,
        direction,
        ns: ns.to_vec(),
        fine,
        exact,
        successive,
    })
}

/// `max |coarse - fine|` on the coarse nodes; the fine grid is refined by two
/// in `direction` (identical grids for `Dt`).
fn coarse_diff(coarse: &Field2D, fine: &Field2D, direction: SweepDirection) -> f64 {
    let g = coarse.grid;
    let mut e: f64 = 0.0;
    for i in 0..g.mx() {
        for j in 0..g.my() {
            let (fi, fj) = match direction {
                SweepDirection::Dx => (2 * i, j),
                SweepDirection::Dy => (i, 2 * j),
                SweepDirection::Dt => (i, j),
            };
            e = e.max((coarse.values[g.idx(i, j)] - fine.values[fine.grid.idx(fi, fj)]).abs());
        }
    }
    e
}

/// `eta(T)` and `gamma(T)` of each scheme over an eps list.
pub fn eps_sweep_aligned(base: &AlignedSchemeConfig, eps_list: &[f64], n_steps: usize) -> Result<Vec<ErrorPair>> {
    eps_list
        .iter()
        .map(|&eps| {
            let cfg = AlignedSchemeConfig {
                model: base.model.with_eps(eps)?,
                ..base.clone()
            };
            let run = run_aligned(&cfg, n_steps, &[n_steps as f64 * cfg.dt])
                .map_err(|e| e.context(format!("{} at eps = {eps:e}", cfg.scheme.name())))?;
            Ok(*run.errors.last().expect("final error pair"))
        })
        .collect()
}
