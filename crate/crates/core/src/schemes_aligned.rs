//! Time stepping for the aligned model with first-order upwinding.
//!
//! All four schemes treat `a f_x` explicitly. The stiff term is handled
//!
//! * implicitly, one cyclic solve per x column (IMEX);
//! * mode by mode after a y-transform (Fourier);
//! * on the zero-mean fluctuation only, the mean being advected explicitly
//!   (Micro-Macro);
//! * through a multiplier `q` with `f_y = eps q_y`, pinned by `q = 0` on the
//!   first y row (Lagrange).
//!
//! [`AlignedStepper`] caches the factorizations for a fixed configuration; the
//! free `step_*` functions build one on the fly.

use crate::analysis::ErrorPair;
use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::linalg::dft::{slot, DftPlan};
use crate::linalg::{CyclicFactor, CyclicTridiag, SparseLu, SparseMatrix};
use crate::model_aligned::{exact_aligned, limit_aligned, y_average, AlignedModel};
use crate::run::{snapshot_steps, RunResult, Snapshot, StepRecord};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignedScheme {
    Imex,
    Fourier,
    MicroMacro,
    Lagrange,
}

impl AlignedScheme {
    pub const ALL: [AlignedScheme; 4] = [
        AlignedScheme::Imex,
        AlignedScheme::Fourier,
        AlignedScheme::MicroMacro,
        AlignedScheme::Lagrange,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlignedScheme::Imex => "imex",
            AlignedScheme::Fourier => "fourier",
            AlignedScheme::MicroMacro => "micro-macro",
            AlignedScheme::Lagrange => "lagrange",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlignedSchemeConfig {
    pub model: AlignedModel,
    pub grid: Grid2D,
    pub dt: f64,
    pub scheme: AlignedScheme,
}

impl AlignedSchemeConfig {
    pub fn new(model: AlignedModel, grid: Grid2D, dt: f64, scheme: AlignedScheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be finite and > 0, got {dt}")));
        }
        Ok(Self {
            model,
            grid,
            dt,
            scheme,
        })
    }

    /// `a dt / dx`.
    pub fn alpha(&self) -> f64 {
        self.model.a * self.dt / self.grid.dx
    }

    /// `b dt / dy`.
    pub fn beta(&self) -> f64 {
        self.model.b * self.dt / self.grid.dy
    }

    pub fn with_scheme(&self, scheme: AlignedScheme) -> Self {
        Self { scheme, ..self.clone() }
    }
}

/// Macro part `H` (y-mean per column) and zero-mean fluctuation `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroMacroState {
    pub macro_part: Vec<f64>,
    pub micro: Field2D,
}

impl MicroMacroState {
    pub fn from_field(f: &Field2D) -> Self {
        let mean = y_average(f);
        let mut micro = f.clone();
        for (i, h) in mean.iter().enumerate() {
            micro.column_mut(i).iter_mut().for_each(|v| *v -= h);
        }
        Self {
            macro_part: mean,
            micro,
        }
    }

    /// `H + h`.
    pub fn field(&self) -> Field2D {
        let mut f = self.micro.clone();
        for (i, h) in self.macro_part.iter().enumerate() {
            f.column_mut(i).iter_mut().for_each(|v| *v += h);
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeState {
    pub f: Field2D,
    pub q: Field2D,
}

impl LagrangeState {
    pub fn from_field(f: &Field2D) -> Self {
        Self {
            f: f.clone(),
            q: Field2D::zeros(f.grid, f.time),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlignedState {
    Plain(Field2D),
    MicroMacro(MicroMacroState),
    Lagrange(LagrangeState),
}

impl AlignedState {
    pub fn initial(scheme: AlignedScheme, f: &Field2D) -> Self {
        match scheme {
            AlignedScheme::Imex | AlignedScheme::Fourier => AlignedState::Plain(f.clone()),
            AlignedScheme::MicroMacro => AlignedState::MicroMacro(MicroMacroState::from_field(f)),
            AlignedScheme::Lagrange => AlignedState::Lagrange(LagrangeState::from_field(f)),
        }
    }

    pub fn field(&self) -> Field2D {
        match self {
            AlignedState::Plain(f) => f.clone(),
            AlignedState::MicroMacro(s) => s.field(),
            AlignedState::Lagrange(s) => s.f.clone(),
        }
    }

    pub fn aux(&self) -> Option<Field2D> {
        match self {
            AlignedState::Lagrange(s) => Some(s.q.clone()),
            _ => None,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            AlignedState::Plain(f) => f.time,
            AlignedState::MicroMacro(s) => s.micro.time,
            AlignedState::Lagrange(s) => s.f.time,
        }
    }
}

/// Explicit upwind in x: `(1 - alpha) g_i + alpha g_{i-1}` on one column pair.
#[inline]
fn upwind_column(cur: &[f64], prev: &[f64], alpha: f64, out: &mut [f64]) {
    for ((o, &c), &p) in out.iter_mut().zip(cur).zip(prev) {
        *o = (1.0 - alpha) * c + alpha * p;
    }
}

/// Explicit upwind step in x applied to every row of a field.
pub fn upwind_x(f: &Field2D, alpha: f64) -> Field2D {
    let mx = f.grid.mx();
    let mut out = f.clone();
    for i in 0..mx {
        let prev = (i + mx - 1) % mx;
        upwind_column(f.column(i), f.column(prev), alpha, out.column_mut(i));
    }
    out
}

/// Explicit upwind step in x of a column-indexed vector.
pub fn upwind_x_vec(v: &[f64], alpha: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| (1.0 - alpha) * v[i] + alpha * v[(i + n - 1) % n])
        .collect()
}

/// Cyclic matrix `eps Id + C_beta` of one IMEX column solve.
pub fn imex_column_matrix(m: usize, beta: f64, eps: f64) -> CyclicTridiag {
    CyclicTridiag::with_row_sum(m, eps + beta, -beta, eps)
}

/// Micro-Macro column system: the IMEX matrix bordered by the zero-mean
/// constraint, `[[A, 1], [1^T, 0]]`.
pub fn micromacro_column_matrix(m: usize, beta: f64, eps: f64) -> SparseMatrix {
    let mut t = imex_column_matrix(m, beta, eps).triplets();
    for j in 0..m {
        t.push((j, m, 1.0));
        t.push((m, j, 1.0));
    }
    SparseMatrix::assemble(m + 1, m + 1, &t).expect("valid bordered pattern")
}

/// Lagrange column system on interleaved unknowns `(f_0, q_0, f_1, q_1, ...)`.
///
/// Row `2j`:   `f_j + beta (q_j - q_{j-1}) = u_j`.
/// Row `2j+1`: `(f_j - f_{j-1}) - eps (q_j - q_{j-1}) = 0` for `j >= 1`, and
/// `q_0 = 0` for `j = 0` (the constraint rows sum to zero, so one is redundant).
pub fn lagrange_column_matrix(m: usize, beta: f64, eps: f64) -> SparseMatrix {
    let mut t = Vec::with_capacity(8 * m);
    let fi = |j: usize| 2 * j;
    let qi = |j: usize| 2 * j + 1;
    for j in 0..m {
        let jm = (j + m - 1) % m;
        let r = 2 * j;
        t.push((r, fi(j), 1.0));
        t.push((r, qi(j), beta));
        t.push((r, qi(jm), -beta));
        let r = 2 * j + 1;
        if j == 0 {
            t.push((r, qi(0), 1.0));
        } else {
            t.push((r, fi(j), 1.0));
            t.push((r, fi(jm), -1.0));
            t.push((r, qi(j), -eps));
            t.push((r, qi(jm), eps));
        }
    }
    SparseMatrix::assemble(2 * m, 2 * m, &t).expect("valid Lagrange pattern")
}

struct LagrangeKernel {
    matrix: SparseMatrix,
    lu: SparseLu,
}

/// Per-step information returned alongside the new state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub residual: f64,
    pub iterations: usize,
}

/// Cached solver state for one configuration.
pub struct AlignedStepper {
    cfg: AlignedSchemeConfig,
    alpha: f64,
    cyclic: Option<CyclicFactor>,
    fourier: Option<(DftPlan, Vec<Complex64>)>,
    lagrange: Option<LagrangeKernel>,
}

impl AlignedStepper {
    /// Builds the solvers the configured scheme needs. For IMEX at `eps = 0`
    /// this fails with a singular-matrix error.
    pub fn new(cfg: &AlignedSchemeConfig) -> Result<Self> {
        let m = cfg.grid.my();
        let (eps, beta) = (cfg.model.eps, cfg.beta());
        let mut s = Self {
            cfg: cfg.clone(),
            alpha: cfg.alpha(),
            cyclic: None,
            fourier: None,
            lagrange: None,
        };
        match cfg.scheme {
            AlignedScheme::Imex => {
                s.cyclic = Some(imex_column_matrix(m, beta, eps).factor()?);
            }
            AlignedScheme::MicroMacro => {
                if eps > 0.0 {
                    s.cyclic = Some(imex_column_matrix(m, beta, eps).factor()?);
                }
            }
            AlignedScheme::Fourier => {
                s.fourier = Some((DftPlan::new(m), fourier_factors(cfg)));
            }
            AlignedScheme::Lagrange => {
                let matrix = lagrange_column_matrix(m, beta, eps);
                let lu = SparseLu::new(&matrix)?;
                s.lagrange = Some(LagrangeKernel { matrix, lu });
            }
        }
        Ok(s)
    }

    pub fn config(&self) -> &AlignedSchemeConfig {
        &self.cfg
    }

    fn next_time(&self, t: f64) -> f64 {
        t + self.cfg.dt
    }

    /// IMEX update of a plain field (also used for the micro part).
    fn imex_field(&self, f: &Field2D) -> Result<Field2D> {
        let fac = self
            .cyclic
            .as_ref()
            .ok_or_else(|| Error::Singular("no cyclic factorization at eps = 0".into()))?;
        let eps = self.cfg.model.eps;
        let mx = f.grid.mx();
        let mut out = Field2D::zeros(f.grid, self.next_time(f.time));
        for i in 0..mx {
            let prev = (i + mx - 1) % mx;
            let col = out.column_mut(i);
            upwind_column(f.column(i), f.column(prev), self.alpha, col);
            col.iter_mut().for_each(|v| *v *= eps);
            fac.solve_in_place(col);
        }
        Ok(out)
    }

    pub fn imex(&self, f: &Field2D) -> Result<Field2D> {
        let out = self.imex_field(f)?;
        out.check_finite("IMEX step")?;
        Ok(out)
    }

    pub fn fourier(&self, f: &Field2D) -> Result<Field2D> {
        let (plan, fac) = self.fourier.as_ref().expect("Fourier stepper");
        let m = f.grid.my();
        let mx = f.grid.mx();
        let mut out = Field2D::zeros(f.grid, self.next_time(f.time));
        let mut u = vec![0.0; m];
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..mx {
            let prev = (i + mx - 1) % mx;
            upwind_column(f.column(i), f.column(prev), self.alpha, &mut u);
            plan.forward_real(&u, &mut c);
            c.iter_mut().zip(fac).for_each(|(ck, fk)| *ck *= fk);
            plan.inverse_real(&c, out.column_mut(i));
        }
        out.check_finite("Fourier step")?;
        Ok(out)
    }

    pub fn micromacro(&self, s: &MicroMacroState) -> Result<MicroMacroState> {
        let macro_part = upwind_x_vec(&s.macro_part, self.alpha);
        let t = self.next_time(s.micro.time);
        let micro = if self.cfg.model.eps == 0.0 {
            Field2D::zeros(s.micro.grid, t)
        } else {
            let mut h = self.imex_field(&s.micro)?;
            let mean = y_average(&h);
            for (i, hm) in mean.iter().enumerate() {
                h.column_mut(i).iter_mut().for_each(|v| *v -= hm);
            }
            h.check_finite("Micro-Macro step")?;
            h
        };
        Ok(MicroMacroState { macro_part, micro })
    }

    pub fn lagrange(&self, s: &LagrangeState) -> Result<(LagrangeState, StepInfo)> {
        let k = self.lagrange.as_ref().expect("Lagrange stepper");
        let g = s.f.grid;
        let (mx, m) = (g.mx(), g.my());
        let n = 2 * m;
        // One right-hand side per x column, solved together.
        let mut rhs = vec![0.0; n * mx];
        let mut u = vec![0.0; m];
        for i in 0..mx {
            let prev = (i + mx - 1) % mx;
            upwind_column(s.f.column(i), s.f.column(prev), self.alpha, &mut u);
            let block = &mut rhs[i * n..(i + 1) * n];
            for j in 0..m {
                block[2 * j] = u[j];
            }
        }
        let b = rhs.clone();
        k.lu.solve_many_in_place(&mut rhs, mx)?;
        let t = self.next_time(s.f.time);
        let mut f = Field2D::zeros(g, t);
        let mut q = Field2D::zeros(g, t);
        let mut worst: f64 = 0.0;
        let mut r = vec![0.0; n];
        for i in 0..mx {
            let x = &rhs[i * n..(i + 1) * n];
            k.matrix.matvec(x, &mut r);
            let res = r
                .iter()
                .zip(&b[i * n..(i + 1) * n])
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res);
            let (fc, qc) = (f.column_mut(i), &mut q.values[i * m..(i + 1) * m]);
            for j in 0..m {
                fc[j] = x[2 * j];
                qc[j] = x[2 * j + 1];
            }
            // Row 1 pins q_0; drop the rounding the factorization leaves there.
            qc[0] = 0.0;
        }
        f.check_finite("Lagrange step")?;
        Ok((
            LagrangeState { f, q },
            StepInfo {
                residual: worst,
                iterations: 0,
            },
        ))
    }

    /// One step of the configured scheme.
    pub fn step(&self, state: &AlignedState) -> Result<(AlignedState, StepInfo)> {
        match (self.cfg.scheme, state) {
            (AlignedScheme::Imex, AlignedState::Plain(f)) => {
                Ok((AlignedState::Plain(self.imex(f)?), StepInfo::default()))
            }
            (AlignedScheme::Fourier, AlignedState::Plain(f)) => {
                Ok((AlignedState::Plain(self.fourier(f)?), StepInfo::default()))
            }
            (AlignedScheme::MicroMacro, AlignedState::MicroMacro(s)) => {
                Ok((AlignedState::MicroMacro(self.micromacro(s)?), StepInfo::default()))
            }
            (AlignedScheme::Lagrange, AlignedState::Lagrange(s)) => {
                let (s, info) = self.lagrange(s)?;
                Ok((AlignedState::Lagrange(s), info))
            }
            (scheme, _) => Err(Error::InvalidParameter(format!(
                "state does not match the {} scheme",
                scheme.name()
            ))),
        }
    }
}

/// Per-mode implicit factors `1 / (1 + i omega k b dt / eps)`; zero for
/// `k != 0` at `eps = 0`.
fn fourier_factors(cfg: &AlignedSchemeConfig) -> Vec<Complex64> {
    let m = cfg.grid.my();
    let omega = 2.0 * std::f64::consts::PI / cfg.grid.ly();
    crate::linalg::dft::wavenumbers(m)
        .into_iter()
        .map(|k| {
            if k == 0 {
                Complex64::new(1.0, 0.0)
            } else if cfg.model.eps == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let th = omega * k as f64 * cfg.model.b * cfg.dt / cfg.model.eps;
                Complex64::new(1.0, th).inv()
            }
        })
        .collect()
}

pub fn step_imex(f: &Field2D, cfg: &AlignedSchemeConfig) -> Result<Field2D> {
    AlignedStepper::new(&cfg.with_scheme(AlignedScheme::Imex))?.imex(f)
}

pub fn step_fourier(f: &Field2D, cfg: &AlignedSchemeConfig) -> Result<Field2D> {
    AlignedStepper::new(&cfg.with_scheme(AlignedScheme::Fourier))?.fourier(f)
}

pub fn step_micromacro(s: &MicroMacroState, cfg: &AlignedSchemeConfig) -> Result<MicroMacroState> {
    AlignedStepper::new(&cfg.with_scheme(AlignedScheme::MicroMacro))?.micromacro(s)
}

pub fn step_lagrange_aligned(s: &LagrangeState, cfg: &AlignedSchemeConfig) -> Result<LagrangeState> {
    AlignedStepper::new(&cfg.with_scheme(AlignedScheme::Lagrange))?
        .lagrange(s)
        .map(|(s, _)| s)
}

/// Error pair of a field against the exact solution and the limit solution.
/// At `eps = 0` the limit solution is the exact solution, so `eta = gamma`.
pub fn aligned_errors(f: &Field2D, model: &AlignedModel) -> Result<ErrorPair> {
    let lim = limit_aligned(model, f.time, f.grid);
    let gamma = crate::analysis::error_gamma(f, &lim)?;
    let eta = if model.eps > 0.0 {
        crate::analysis::error_eta(f, &exact_aligned(model, f.time, f.grid)?)?
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

/// Observer called with every accepted state (step 0 included).
pub type AlignedObserver<'a> = dyn FnMut(usize, &AlignedState) + 'a;

/// Integrates from the sampled initial data and records snapshots, per-step
/// mass and solver residuals, and error pairs at the snapshot times.
pub fn run_aligned(cfg: &AlignedSchemeConfig, n_steps: usize, snapshot_times: &[f64]) -> Result<RunResult> {
    run_aligned_observed(cfg, n_steps, snapshot_times, None)
}

pub fn run_aligned_observed(
    cfg: &AlignedSchemeConfig,
    n_steps: usize,
    snapshot_times: &[f64],
    mut observer: Option<&mut AlignedObserver<'_>>,
) -> Result<RunResult> {
    let snaps = snapshot_steps(snapshot_times, cfg.dt, n_steps)?;
    let f0 = cfg.model.ic.sample(cfg.grid)?;
    if cfg.scheme == AlignedScheme::Fourier && observer.is_none() {
        return run_fourier_spectral(cfg, n_steps, &snaps, &f0);
    }
    let stepper = AlignedStepper::new(cfg)?;
    let mut state = AlignedState::initial(cfg.scheme, &f0);
    let mut res = RunResult::default();
    let record = |res: &mut RunResult, k: usize, state: &AlignedState, info: StepInfo| -> Result<()> {
        let f = state.field();
        res.diagnostics.push(StepRecord {
            step: k,
            t: k as f64 * cfg.dt,
            mass: f.mass(),
            residual: info.residual,
            iterations: info.iterations,
        });
        if snaps.binary_search(&k).is_ok() {
            let mut f = f;
            f.time = k as f64 * cfg.dt;
            res.errors.push(aligned_errors(&f, &cfg.model)?);
            let mut aux = state.aux();
            if let Some(q) = aux.as_mut() {
                q.time = f.time;
            }
            res.snapshots.push(Snapshot {
                step: k,
                t: f.time,
                field: f,
                aux,
            });
        }
        Ok(())
    };
    record(&mut res, 0, &state, StepInfo::default())?;
    if let Some(obs) = observer.as_mut() {
        obs(0, &state);
    }
    for k in 1..=n_steps {
        let (next, info) = stepper.step(&state).map_err(|e| e.at_step(k))?;
        state = next;
        record(&mut res, k, &state, info)?;
        if let Some(obs) = observer.as_mut() {
            obs(k, &state);
        }
    }
    Ok(res)
}

/// The Fourier scheme kept in coefficient space between steps. Each step is
/// the same linear map as [`AlignedStepper::fourier`] (upwinding commutes
/// with the y-transform); only the snapshots are transformed back.
fn run_fourier_spectral(cfg: &AlignedSchemeConfig, n_steps: usize, snaps: &[usize], f0: &Field2D) -> Result<RunResult> {
    let g = cfg.grid;
    let (mx, m) = (g.mx(), g.my());
    let plan = DftPlan::new(m);
    let fac = fourier_factors(cfg);
    let alpha = cfg.alpha();
    let nyquist = if m % 2 == 0 { Some(0usize) } else { None };
    let zero = slot(m, 0);
    let mut c = vec![Complex64::new(0.0, 0.0); mx * m];
    for i in 0..mx {
        plan.forward_real(f0.column(i), &mut c[i * m..(i + 1) * m]);
    }
    let mut next = c.clone();
    let mut res = RunResult::default();
    let record = |res: &mut RunResult, k: usize, c: &[Complex64]| -> Result<()> {
        let t = k as f64 * cfg.dt;
        let mass = m as f64 * (0..mx).map(|i| c[i * m + zero].re).sum::<f64>();
        res.diagnostics.push(StepRecord {
            step: k,
            t,
            mass,
            residual: 0.0,
            iterations: 0,
        });
        if snaps.binary_search(&k).is_ok() {
            let mut f = Field2D::zeros(g, t);
            for i in 0..mx {
                plan.inverse_real(&c[i * m..(i + 1) * m], f.column_mut(i));
            }
            f.check_finite("Fourier step").map_err(|e| e.at_step(k))?;
            res.errors.push(aligned_errors(&f, &cfg.model)?);
            res.snapshots.push(Snapshot {
                step: k,
                t,
                field: f,
                aux: None,
            });
        }
        Ok(())
    };
    record(&mut res, 0, &c)?;
    for k in 1..=n_steps {
        for i in 0..mx {
            let prev = (i + mx - 1) % mx;
            for s in 0..m {
                let v = (c[i * m + s] * (1.0 - alpha) + c[prev * m + s] * alpha) * fac[s];
                next[i * m + s] = v;
            }
            if let Some(s) = nyquist {
                // The physical-space step keeps only the real part of this mode.
                next[i * m + s].im = 0.0;
            }
        }
        std::mem::swap(&mut c, &mut next);
        record(&mut res, k, &c)?;
    }
    Ok(res)
}
