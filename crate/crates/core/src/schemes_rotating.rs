//! Fully implicit (IMP) and stabilized Lagrange-multiplier schemes for the
//! rotating model.
//!
//! Both are built on the upwind operator `U`, the first-order discretization of
//! `y d/dx - x d/dy` whose rows and columns sum to zero:
//!
//! ```text
//! (U g)_ij = y+_j (g_ij - g_i-1,j)/dx + y-_j (g_i+1,j - g_ij)/dx
//!          + x+_i (g_ij - g_i,j+1)/dy + x-_i (g_i,j-1 - g_ij)/dy
//! ```
//!
//! IMP solves `(Id + dt/eps U) f^{n+1} = f^n`. The Lagrange scheme solves for
//! `(f^{n+1}, q^{n+1})` with first block row `f + dt U q = f^n` and a
//! stabilized constraint row, see [`LagrangeConstraint`].

use crate::analysis::ErrorPair;
use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::linalg::sparse::{bicgstab, norm2};
use crate::linalg::{SolveMethod, SolveOptions, SolveStats, SparseLu, SparseMatrix};
use crate::model_rotating::{exact_rotating, limit_rotating, RotatingModel, DEFAULT_N_QUAD};
use crate::run::{snapshot_steps, RunResult, Snapshot, StepRecord};
use crate::schemes_aligned::{LagrangeState, StepInfo};
use serde::{Deserialize, Serialize};

pub const DEFAULT_GAMMA: f64 = 0.91;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotatingScheme {
    Imp,
    Lagrange,
}

impl RotatingScheme {
    pub const ALL: [RotatingScheme; 2] = [RotatingScheme::Imp, RotatingScheme::Lagrange];

    pub fn name(&self) -> &'static str {
        match self {
            RotatingScheme::Imp => "imp",
            RotatingScheme::Lagrange => "lagrange",
        }
    }
}

/// Discretization of the constraint `D f - eps D q + sigma q = 0`, `D = y d/dx - x d/dy`.
///
/// `Adjoint` writes `D` as `-U^T`, the downwind counterpart of `U`: at `eps = 0`
/// the scheme reduces to `(Id + dt/sigma U U^T) f = f^n`, a symmetric positive
/// damping. `Upwind` reuses `U`; its `eps = 0` Schur complement
/// `Id - dt/sigma U^2` is not positive and the iteration blows up once `eps`
/// drops below about `0.1` on desk grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagrangeConstraint {
    #[default]
    Adjoint,
    Upwind,
}

#[derive(Debug, Clone)]
pub struct RotatingSchemeConfig {
    pub model: RotatingModel,
    pub grid: Grid2D,
    pub dt: f64,
    pub gamma: f64,
    pub scheme: RotatingScheme,
    pub constraint: LagrangeConstraint,
    pub solver: SolveOptions,
}

impl RotatingSchemeConfig {
    pub fn new(model: RotatingModel, grid: Grid2D, dt: f64, scheme: RotatingScheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be finite and > 0, got {dt}")));
        }
        Ok(Self {
            model,
            grid,
            dt,
            gamma: DEFAULT_GAMMA,
            scheme,
            constraint: LagrangeConstraint::default(),
            solver: SolveOptions::default(),
        })
    }

    pub fn r_x(&self) -> f64 {
        self.dt / self.grid.dx
    }

    pub fn r_y(&self) -> f64 {
        self.dt / self.grid.dy
    }

    /// `(dx dy)^gamma`.
    pub fn sigma(&self) -> f64 {
        (self.grid.dx * self.grid.dy).powf(self.gamma)
    }

    pub fn with_scheme(&self, scheme: RotatingScheme) -> Self {
        Self { scheme, ..self.clone() }
    }
}

/// Positive and negative parts of the node coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindSplit {
    pub xp: Vec<f64>,
    pub xm: Vec<f64>,
    pub yp: Vec<f64>,
    pub ym: Vec<f64>,
}

impl UpwindSplit {
    pub fn new(grid: &Grid2D) -> Self {
        let xs: Vec<f64> = (0..grid.mx()).map(|i| grid.x(i)).collect();
        let ys: Vec<f64> = (0..grid.my()).map(|j| grid.y(j)).collect();
        Self {
            xp: xs.iter().map(|v| v.max(0.0)).collect(),
            xm: xs.iter().map(|v| v.min(0.0)).collect(),
            yp: ys.iter().map(|v| v.max(0.0)).collect(),
            ym: ys.iter().map(|v| v.min(0.0)).collect(),
        }
    }
}

/// `U g` without assembling the matrix.
pub fn upwind_rotation_apply(g: &Field2D) -> Field2D {
    let grid = g.grid;
    let sp = UpwindSplit::new(&grid);
    let (dx, dy) = (grid.dx, grid.dy);
    let mut out = Field2D::zeros(grid, g.time);
    for i in 0..grid.mx() {
        let ii = i as isize;
        for j in 0..grid.my() {
            let jj = j as isize;
            let c = g.at(ii, jj);
            let v = sp.yp[j] * (c - g.at(ii - 1, jj)) / dx
                + sp.ym[j] * (g.at(ii + 1, jj) - c) / dx
                + sp.xp[i] * (c - g.at(ii, jj + 1)) / dy
                + sp.xm[i] * (g.at(ii, jj - 1) - c) / dy;
            out.values[grid.idx(i, j)] = v;
        }
    }
    out
}

/// Triplets of `scale * U`, offset by `(row0, col0)`.
fn upwind_triplets(
    grid: &Grid2D,
    scale: f64,
    row0: usize,
    col0: usize,
    transpose: bool,
    t: &mut Vec<(usize, usize, f64)>,
) {
    let sp = UpwindSplit::new(grid);
    let (dx, dy) = (grid.dx, grid.dy);
    let mut push = |r: usize, c: usize, v: f64| {
        if v != 0.0 {
            if transpose {
                t.push((row0 + c, col0 + r, scale * v));
            } else {
                t.push((row0 + r, col0 + c, scale * v));
            }
        }
    };
    for i in 0..grid.mx() {
        let ii = i as isize;
        for j in 0..grid.my() {
            let jj = j as isize;
            let r = grid.idx(i, j);
            push(r, r, (sp.yp[j] - sp.ym[j]) / dx + (sp.xp[i] - sp.xm[i]) / dy);
            push(r, grid.idx_wrapped(ii - 1, jj), -sp.yp[j] / dx);
            push(r, grid.idx_wrapped(ii + 1, jj), sp.ym[j] / dx);
            push(r, grid.idx_wrapped(ii, jj + 1), -sp.xp[i] / dy);
            push(r, grid.idx_wrapped(ii, jj - 1), sp.xm[i] / dy);
        }
    }
}

/// The upwind operator `U` as a sparse matrix.
pub fn upwind_rotation_matrix(grid: &Grid2D) -> SparseMatrix {
    let mut t = Vec::with_capacity(5 * grid.len());
    upwind_triplets(grid, 1.0, 0, 0, false, &mut t);
    SparseMatrix::assemble(grid.len(), grid.len(), &t).expect("valid upwind pattern")
}

/// `Id + (dt/eps) U`.
pub fn assemble_imp(grid: &Grid2D, eps: f64, dt: f64) -> Result<SparseMatrix> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "the implicit scheme needs eps > 0, got {eps}"
        )));
    }
    let n = grid.len();
    let mut t: Vec<_> = (0..n).map(|k| (k, k, 1.0)).collect();
    upwind_triplets(grid, dt / eps, 0, 0, false, &mut t);
    SparseMatrix::assemble(n, n, &t)
}

/// Lagrange block matrix with the default (adjoint) constraint.
pub fn assemble_lagrange_rot(grid: &Grid2D, eps: f64, dt: f64, gamma: f64) -> Result<SparseMatrix> {
    assemble_lagrange_rot_with(grid, eps, dt, gamma, LagrangeConstraint::Adjoint)
}

/// `2M x 2M` block matrix on unknowns `(f, q)`:
///
/// * `Adjoint`: `[[Id, dt U], [-U^T, eps U^T + sigma Id]]`;
/// * `Upwind`:  `[[Id, dt U], [U, -eps U + sigma Id]]`;
///
/// with `sigma = (dx dy)^gamma`.
pub fn assemble_lagrange_rot_with(
    grid: &Grid2D,
    eps: f64,
    dt: f64,
    gamma: f64,
    constraint: LagrangeConstraint,
) -> Result<SparseMatrix> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    let n = grid.len();
    let sigma = (grid.dx * grid.dy).powf(gamma);
    let mut t = Vec::with_capacity(16 * n);
    for k in 0..n {
        t.push((k, k, 1.0));
        t.push((n + k, n + k, sigma));
    }
    upwind_triplets(grid, dt, 0, n, false, &mut t);
    match constraint {
        LagrangeConstraint::Adjoint => {
            upwind_triplets(grid, -1.0, n, 0, true, &mut t);
            if eps > 0.0 {
                upwind_triplets(grid, eps, n, n, true, &mut t);
            }
        }
        LagrangeConstraint::Upwind => {
            upwind_triplets(grid, 1.0, n, 0, false, &mut t);
            if eps > 0.0 {
                upwind_triplets(grid, -eps, n, n, false, &mut t);
            }
        }
    }
    SparseMatrix::assemble(2 * n, 2 * n, &t)
}

/// Cached matrix and factorization for one rotating configuration.
pub struct RotatingStepper {
    cfg: RotatingSchemeConfig,
    matrix: SparseMatrix,
    lu: Option<SparseLu>,
    norm_inf: f64,
}

impl RotatingStepper {
    pub fn new(cfg: &RotatingSchemeConfig) -> Result<Self> {
        let matrix = match cfg.scheme {
            RotatingScheme::Imp => assemble_imp(&cfg.grid, cfg.model.eps, cfg.dt)?,
            RotatingScheme::Lagrange => {
                assemble_lagrange_rot_with(&cfg.grid, cfg.model.eps, cfg.dt, cfg.gamma, cfg.constraint)?
            }
        };
        let lu = match cfg.solver.method {
            SolveMethod::Direct => Some(SparseLu::new(&matrix)?),
            SolveMethod::Iterative => None,
        };
        let norm_inf = (0..matrix.n_rows)
            .map(|r| {
                matrix.values[matrix.row_ptr[r]..matrix.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        Ok(Self {
            cfg: cfg.clone(),
            matrix,
            lu,
            norm_inf,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solves with the cached factorization (plus refinement) or BiCGSTAB.
    ///
    /// A direct solve is accepted when `||r||_2 <= tol max(1, ||b||_2)` or, for
    /// badly scaled systems at small eps, when the normwise backward error
    /// `||r||_inf / (||A||_inf ||x||_inf + ||b||_inf)` is below `tol`.
    fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let tol = self.cfg.solver.tol;
        let Some(lu) = &self.lu else {
            return bicgstab(&self.matrix, rhs, None, tol, self.cfg.solver.max_iter);
        };
        let strict = tol * norm2(rhs).max(1.0);
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut x = rhs.to_vec();
        lu.solve_in_place(&mut x)?;
        let mut r = self.matrix.residual(&x, rhs);
        let mut res = norm2(&r);
        let mut sweeps = 0;
        while res > strict && sweeps < 3 {
            let mut d = r.clone();
            lu.solve_in_place(&mut d)?;
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            let rc = self.matrix.residual(&cand, rhs);
            let rn = norm2(&rc);
            sweeps += 1;
            if rn >= res {
                break;
            }
            x = cand;
            r = rc;
            res = rn;
        }
        let backward = inf(&r) / (self.norm_inf * inf(&x) + inf(rhs)).max(f64::MIN_POSITIVE);
        if res > strict && backward > tol {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: res,
            });
        }
        Ok((
            x,
            SolveStats {
                residual_norm: res,
                iterations: sweeps,
                method: SolveMethod::Direct,
            },
        ))
    }

    pub fn imp(&self, f: &Field2D) -> Result<(Field2D, SolveStats)> {
        let (x, stats) = self.solve(&f.values)?;
        let out = Field2D::from_values(f.grid, x, f.time + self.cfg.dt)?;
        out.check_finite("IMP step")?;
        Ok((out, stats))
    }

    pub fn lagrange(&self, s: &LagrangeState) -> Result<(LagrangeState, SolveStats)> {
        let n = s.f.grid.len();
        let mut rhs = vec![0.0; 2 * n];
        rhs[..n].copy_from_slice(&s.f.values);
        let (mut x, stats) = self.solve(&rhs)?;
        let t = s.f.time + self.cfg.dt;
        let q = Field2D::from_values(s.f.grid, x.split_off(n), t)?;
        let f = Field2D::from_values(s.f.grid, x, t)?;
        f.check_finite("Lagrange step")?;
        Ok((LagrangeState { f, q }, stats))
    }
}

pub fn step_imp(f: &Field2D, cfg: &RotatingSchemeConfig) -> Result<Field2D> {
    RotatingStepper::new(&cfg.with_scheme(RotatingScheme::Imp))?
        .imp(f)
        .map(|(f, _)| f)
}

pub fn step_lagrange_rotating(s: &LagrangeState, cfg: &RotatingSchemeConfig) -> Result<LagrangeState> {
    RotatingStepper::new(&cfg.with_scheme(RotatingScheme::Lagrange))?
        .lagrange(s)
        .map(|(s, _)| s)
}

/// Errors against the exact solution and the circle-average limit.
/// At `eps = 0` the limit is the reference for both entries.
pub fn rotating_errors(f: &Field2D, model: &RotatingModel, limit: &Field2D) -> Result<ErrorPair> {
    let gamma = f.max_abs_diff(limit)?;
    let eta = if model.eps > 0.0 {
        f.max_abs_diff(&exact_rotating(model, f.time, f.grid)?)?
    } else {
        gamma
    };
    Ok(ErrorPair {
        eta,
        gamma,
        t: f.time,
        eps: model.eps,
    })
}

/// Integrates from the sampled initial data, as [`crate::schemes_aligned::run_aligned`].
pub fn run_rotating(cfg: &RotatingSchemeConfig, n_steps: usize, snapshot_times: &[f64]) -> Result<RunResult> {
    let snaps = snapshot_steps(snapshot_times, cfg.dt, n_steps)?;
    let f0 = cfg.model.ic.sample(cfg.grid)?;
    let limit = limit_rotating(&cfg.model, cfg.grid, DEFAULT_N_QUAD)?;
    let stepper = RotatingStepper::new(cfg)?;
    let mut state = LagrangeState::from_field(&f0);
    let mut res = RunResult::default();
    let record = |res: &mut RunResult, k: usize, state: &LagrangeState, info: StepInfo| -> Result<()> {
        let t = k as f64 * cfg.dt;
        res.diagnostics.push(StepRecord {
            step: k,
            t,
            mass: state.f.mass(),
            residual: info.residual,
            iterations: info.iterations,
        });
        if snaps.binary_search(&k).is_ok() {
            let mut f = state.f.clone();
            f.time = t;
            res.errors.push(rotating_errors(&f, &cfg.model, &limit)?);
            let aux = (cfg.scheme == RotatingScheme::Lagrange).then(|| {
                let mut q = state.q.clone();
                q.time = t;
                q
            });
            res.snapshots.push(Snapshot {
                step: k,
                t,
                field: f,
                aux,
            });
        }
        Ok(())
    };
    record(&mut res, 0, &state, StepInfo::default())?;
    for k in 1..=n_steps {
        let (next, stats) = match cfg.scheme {
            RotatingScheme::Imp => stepper
                .imp(&state.f)
                .map(|(f, s)| (LagrangeState { q: state.q.clone(), f }, s)),
            RotatingScheme::Lagrange => stepper.lagrange(&state),
        }
        .map_err(|e| e.at_step(k))?;
        state = next;
        let info = StepInfo {
            residual: stats.residual_norm,
            iterations: stats.iterations,
        };
        record(&mut res, k, &state, info)?;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_sparse;
    use crate::model_aligned::InitialCondition;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(-3.0, 3.0, -3.0, 3.0, n, n).unwrap()
    }

    #[test]
    fn split_parts() {
        let sp = UpwindSplit::new(&grid(11));
        let g = grid(11);
        for i in 0..g.mx() {
            assert!(sp.xp[i] >= 0.0 && sp.xm[i] <= 0.0);
            assert_eq!(sp.xp[i] + sp.xm[i], g.x(i));
        }
    }

    #[test]
    fn operator_kernel_and_sums() {
        let g = grid(11);
        let c = Field2D::sample(g, |_, _| 3.0, 0.0).unwrap();
        assert!(upwind_rotation_apply(&c).max_abs() < 1e-13);
        let f = Field2D::sample(g, |x, y| (x + 2.0 * y).sin() + x * x, 0.0).unwrap();
        let u = upwind_rotation_apply(&f);
        assert!(u.mass().abs() < 1e-12 * u.l1());
        let m = upwind_rotation_matrix(&g);
        assert!(m.row_sums().iter().all(|v| v.abs() < 1e-12));
        assert!(m.col_sums().iter().all(|v| v.abs() < 1e-12));
        let mu = m.mul(&f.values);
        for (a, b) in mu.iter().zip(&u.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_on_gaussian_is_first_order_small() {
        let gauss = InitialCondition::gaussian(0.5);
        let mut prev = f64::INFINITY;
        for n in [41, 81, 161] {
            let g = grid(n);
            let r = upwind_rotation_apply(&gauss.sample(g).unwrap()).max_abs();
            assert!(r < prev * 0.6, "n {n}: {r} vs {prev}");
            prev = r;
        }
    }

    #[test]
    fn imp_matrix_structure() {
        let g = grid(9);
        let m = assemble_imp(&g, 0.1, 1.0 / 63.0).unwrap();
        assert!(m.row_sums().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(m.col_sums().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let big = assemble_imp(&g, 1e300, 1.0).unwrap();
        let id = SparseMatrix::identity(g.len());
        for (a, b) in big.to_dense().iter().flatten().zip(id.to_dense().iter().flatten()) {
            assert!((a - b).abs() < 1e-290);
        }
        assert!(assemble_imp(&g, 0.0, 1.0).is_err());
    }

    #[test]
    fn imp_solve_residual() {
        let g = grid(21);
        let m = assemble_imp(&g, 1.0, 1.0 / 63.0).unwrap();
        let b = InitialCondition::gaussian(0.5).sample(g).unwrap().values;
        let (x, st) = solve_sparse(&m, &b, &SolveOptions::default()).unwrap();
        assert!(st.residual_norm <= 1e-12 * norm2(&b).max(1.0));
        assert!(norm2(&m.residual(&x, &b)) <= 1e-12);
    }

    #[test]
    fn lagrange_matrix_nonsingular_for_all_eps() {
        let g = grid(7);
        for eps in [1.0, 0.0] {
            for c in [LagrangeConstraint::Adjoint, LagrangeConstraint::Upwind] {
                let m = assemble_lagrange_rot_with(&g, eps, 0.1, DEFAULT_GAMMA, c).unwrap();
                let b: Vec<f64> = (0..m.n_rows).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
                let (x, _) = solve_sparse(&m, &b, &SolveOptions::default()).unwrap();
                assert!(norm2(&m.residual(&x, &b)) <= 1e-10);
            }
        }
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = grid(13);
        let c = Field2D::sample(g, |_, _| 0.7, 0.0).unwrap();
        for scheme in RotatingScheme::ALL {
            let cfg = RotatingSchemeConfig::new(RotatingModel::standard(0.01), g, 0.05, scheme).unwrap();
            match scheme {
                RotatingScheme::Imp => {
                    let f = step_imp(&c, &cfg).unwrap();
                    assert!(f.max_abs_diff(&c).unwrap() < 1e-13);
                }
                RotatingScheme::Lagrange => {
                    let s = step_lagrange_rotating(&LagrangeState::from_field(&c), &cfg).unwrap();
                    assert!(s.f.max_abs_diff(&c).unwrap() < 1e-13);
                    assert!(s.q.max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn multiplier_sums_to_zero() {
        // Summing the adjoint constraint rows leaves sigma * sum(q) = 0.
        let g = grid(21);
        let f0 = InitialCondition::gaussian(0.5).sample(g).unwrap();
        for eps in [1.0, 1e-3, 0.0] {
            let cfg = RotatingSchemeConfig::new(RotatingModel::standard(eps), g, 1.0 / 64.0, RotatingScheme::Lagrange)
                .unwrap();
            let s = step_lagrange_rotating(&LagrangeState::from_field(&f0), &cfg).unwrap();
            assert!(s.q.mass().abs() <= 1e-10 * s.q.l1().max(1e-300), "eps {eps}");
            assert!((s.f.mass() - f0.mass()).abs() < 1e-12 * f0.mass());
        }
    }

    #[test]
    fn imp_peak_decays_with_eps() {
        // An even node count keeps the origin, where the flow stalls, off the grid.
        let g = grid(40);
        let mut peaks = Vec::new();
        for eps in [1.0, 1e-1, 1e-2, 1e-4] {
            let cfg =
                RotatingSchemeConfig::new(RotatingModel::standard(eps), g, 1.0 / 64.0, RotatingScheme::Imp).unwrap();
            let r = run_rotating(&cfg, 16, &[0.25]).unwrap();
            peaks.push(r.final_snapshot().unwrap().field.max());
        }
        assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
    }

    #[test]
    fn upwind_constraint_blows_up_at_small_eps() {
        let g = grid(41);
        let mut cfg =
            RotatingSchemeConfig::new(RotatingModel::standard(1e-3), g, 1.0 / 64.0, RotatingScheme::Lagrange).unwrap();
        cfg.constraint = LagrangeConstraint::Upwind;
        let bad = run_rotating(&cfg, 64, &[1.0])
            .unwrap()
            .final_snapshot()
            .unwrap()
            .field
            .max_abs();
        cfg.constraint = LagrangeConstraint::Adjoint;
        let good = run_rotating(&cfg, 64, &[1.0])
            .unwrap()
            .final_snapshot()
            .unwrap()
            .field
            .max_abs();
        assert!(good <= 1.0 && good > 0.5, "{good}");
        assert!(bad > 1e3, "{bad}");
    }

    #[test]
    fn iterative_fallback_solves_imp() {
        let g = grid(21);
        let mut cfg =
            RotatingSchemeConfig::new(RotatingModel::standard(1.0), g, 1.0 / 64.0, RotatingScheme::Imp).unwrap();
        let direct = run_rotating(&cfg, 4, &[4.0 / 64.0]).unwrap();
        cfg.solver.method = SolveMethod::Iterative;
        let iter = run_rotating(&cfg, 4, &[4.0 / 64.0]).unwrap();
        let d = direct
            .final_snapshot()
            .unwrap()
            .field
            .max_abs_diff(&iter.final_snapshot().unwrap().field)
            .unwrap();
        assert!(d < 1e-9, "{d}");
    }
}
