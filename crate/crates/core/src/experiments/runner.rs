//! Executes experiment configs and writes their artifacts.

use super::config::{parse_batch, ExperimentConfig, Kind, ModelKind};
use super::output::{diagnostics_rows, eps_tag, field_csv, num, Csv, Manifest, OutputDir, DIAGNOSTICS_HEADER};
use crate::analysis::{angular, cond_sweep, convergence_study, measure_xi, xi_imex, CondTable};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model_aligned::limit_aligned;
use crate::run::RunResult;
use crate::schemes_aligned::{run_aligned, run_aligned_observed, AlignedSchemeConfig, AlignedState};
use crate::schemes_rotating::{
    assemble_imp, assemble_lagrange_rot_with, run_rotating, RotatingScheme, RotatingSchemeConfig,
};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

/// Files and scalar results of one experiment, before they are written.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<(String, f64)>,
    /// Plot commands, one block per figure.
    pub plots: Vec<String>,
}

impl Artifacts {
    fn file(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn summary_csv(&mut self) {
        let mut c = Csv::new(&["quantity", "value"]);
        for (k, v) in &self.summary {
            c.row(&[k.clone(), num(*v)]);
        }
        self.file("diagnostics.csv".into(), c.into_bytes());
    }
}

/// Maps `f` over `items` on up to `workers` threads, keeping the input order.
pub fn par_map<T: Send, R: Send>(items: Vec<T>, workers: usize, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    let n = items.len();
    if workers <= 1 || n <= 1 {
        return items.into_iter().map(f).collect();
    }
    let queue = Mutex::new(items.into_iter().enumerate());
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.min(n) {
            s.spawn(|| loop {
                let next = queue.lock().expect("queue lock").next();
                let Some((k, item)) = next else { break };
                let r = f(item);
                results.lock().expect("result lock")[k] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item mapped"))
        .collect()
}

fn jobs<S: Copy>(schemes: &[S], eps: &[f64]) -> Vec<(S, f64)> {
    schemes.iter().flat_map(|&s| eps.iter().map(move |&e| (s, e))).collect()
}

fn field_plot(file: &str) -> String {
    format!(
        "set output '{png}'\nset view map\nsplot '{file}' using 1:2:3 with points pointtype 5 pointsize 0.4 palette notitle\n",
        png = file.replace(".csv", ".png")
    )
}

fn line_plot(out: &str, logscale: bool, xlabel: &str, ylabel: &str, curves: &[(String, &str, String)]) -> String {
    let mut s = format!("set output '{out}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n");
    if logscale {
        s.push_str("set logscale xy\n");
    }
    let parts: Vec<String> = curves
        .iter()
        .map(|(file, cols, title)| format!("'{file}' using {cols} with linespoints title '{title}'"))
        .collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    if logscale {
        s.push_str("unset logscale xy\n");
    }
    s
}

fn run_files(a: &mut Artifacts, scheme: &str, eps: f64, run: &RunResult, errors: &mut Csv, diag: &mut Csv) {
    let tag = format!("{scheme}_eps{}", eps_tag(eps));
    for s in &run.snapshots {
        let name = format!("{tag}_step{:05}.csv", s.step);
        a.plots.push(field_plot(&name));
        a.file(name, field_csv(&s.field));
        if let Some(q) = &s.aux {
            a.file(format!("{tag}_q_step{:05}.csv", s.step), field_csv(q));
        }
    }
    for e in &run.errors {
        errors.row(&[scheme.to_string(), num(eps), num(e.t), num(e.eta), num(e.gamma)]);
    }
    diagnostics_rows(diag, scheme, eps, &run.diagnostics);
    a.summary.push((format!("{tag}:mass_drift"), run.mass_drift(1.0)));
}

fn aligned_run(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let grid = cfg.grid()?;
    let times = cfg.snapshot_times();
    let runs = par_map(jobs(&cfg.aligned_schemes()?, &cfg.eps), workers, |(s, eps)| {
        let c = AlignedSchemeConfig::new(cfg.aligned_model(eps)?, grid, cfg.dt(), s)?;
        run_aligned(&c, cfg.n_steps, &times).map_err(|e| e.context(format!("{} at eps = {eps:e}", s.name())))
    });
    let mut a = Artifacts::default();
    let mut errors = Csv::new(&["scheme", "eps", "t", "eta", "gamma"]);
    let mut diag = Csv::new(&DIAGNOSTICS_HEADER);
    for ((s, eps), run) in jobs(&cfg.aligned_schemes()?, &cfg.eps).into_iter().zip(runs) {
        run_files(&mut a, s.name(), eps, &run?, &mut errors, &mut diag);
    }
    a.file("errors.csv".into(), errors.into_bytes());
    a.file("diagnostics.csv".into(), diag.into_bytes());
    Ok(a)
}

fn rotating_config(
    cfg: &ExperimentConfig,
    grid: Grid2D,
    scheme: RotatingScheme,
    eps: f64,
) -> Result<RotatingSchemeConfig> {
    let mut c = RotatingSchemeConfig::new(cfg.rotating_model(eps)?, grid, cfg.dt(), scheme)?;
    c.gamma = cfg.gamma;
    c.constraint = cfg.constraint;
    c.solver = cfg.solver;
    Ok(c)
}

fn rotating_run(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let grid = cfg.grid()?;
    let times = cfg.snapshot_times();
    let list = jobs(&cfg.rotating_schemes()?, &cfg.eps);
    let runs = par_map(list.clone(), workers, |(s, eps)| {
        let c = rotating_config(cfg, grid, s, eps)?;
        run_rotating(&c, cfg.n_steps, &times).map_err(|e| e.context(format!("{} at eps = {eps:e}", s.name())))
    });
    let mut a = Artifacts::default();
    let mut errors = Csv::new(&["scheme", "eps", "t", "eta", "gamma"]);
    let mut diag = Csv::new(&DIAGNOSTICS_HEADER);
    for ((s, eps), run) in list.into_iter().zip(runs) {
        let run = run?;
        if let Some(last) = run.final_snapshot() {
            a.summary
                .push((format!("{}_eps{}:peak", s.name(), eps_tag(eps)), last.field.max()));
        }
        run_files(&mut a, s.name(), eps, &run, &mut errors, &mut diag);
    }
    a.file("errors.csv".into(), errors.into_bytes());
    a.file("diagnostics.csv".into(), diag.into_bytes());
    Ok(a)
}

/// Value history of one node: `(t, numerical, reference)` per step.
pub type Trace = Vec<(f64, f64, f64)>;

/// Traces stored node `node` for one scheme; the reference is the exact
/// solution, or the limit solution at `eps = 0`.
pub fn trace_node(c: &AlignedSchemeConfig, n_steps: usize, node: (usize, usize)) -> Result<(Trace, RunResult)> {
    let g = c.grid;
    let (i, j) = node;
    let m = &c.model;
    let (lx, ly) = (g.lx(), g.ly());
    let (x, y) = (g.x(i), g.y(j));
    let reference = |t: f64| {
        if m.eps > 0.0 {
            m.ic.eval(x - (m.a * t).rem_euclid(lx), y - (m.b * t / m.eps).rem_euclid(ly))
        } else {
            limit_aligned(m, t, g)[i]
        }
    };
    let mut trace = Vec::with_capacity(n_steps + 1);
    let mut obs = |k: usize, s: &AlignedState| {
        let t = k as f64 * c.dt;
        trace.push((t, s.field().values[g.idx(i, j)], reference(t)));
    };
    let run = run_aligned_observed(c, n_steps, &[], Some(&mut obs))?;
    Ok((trace, run))
}

/// Largest deviation from the column mean `mean` over the second half of a trace.
pub fn late_amplitude(trace: &Trace, mean: f64) -> f64 {
    trace[trace.len() / 2..]
        .iter()
        .fold(0.0f64, |m, &(_, v, _)| m.max((v - mean).abs()))
}

/// Exponential decay rate of a trace's oscillation about `mean`: minus the
/// least-squares slope of `ln env(t)`, where `env(t)` is the largest deviation
/// at or after `t`. Samples below `1e-10` of the initial envelope are dropped
/// so rounding noise does not enter the fit. Returns 0 for a flat trace.
pub fn damping_rate(trace: &Trace, mean: f64) -> f64 {
    let mut env: Vec<(f64, f64)> = Vec::with_capacity(trace.len());
    let mut top = 0.0f64;
    for &(t, v, _) in trace.iter().rev() {
        top = top.max((v - mean).abs());
        env.push((t, top));
    }
    env.reverse();
    let Some(&(_, e0)) = env.first() else {
        return 0.0;
    };
    let pts: Vec<(f64, f64)> = env
        .into_iter()
        .filter(|p| p.1 > 1e-10 * e0)
        .map(|(t, e)| (t, e.ln()))
        .collect();
    if e0 == 0.0 || pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (st, se) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, me) = (st / n, se / n);
    let (cov, var) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mt) * (p.1 - me), a.1 + (p.0 - mt) * (p.0 - mt))
    });
    -cov / var
}

fn point_trace(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let grid = cfg.grid()?;
    let node = cfg
        .trace_node
        .map(|[i, j]| (i, j))
        .unwrap_or((grid.mx() - 1, grid.my() - 1));
    let list = jobs(&cfg.aligned_schemes()?, &cfg.eps);
    let runs = par_map(list.clone(), workers, |(s, eps)| {
        let c = AlignedSchemeConfig::new(cfg.aligned_model(eps)?, grid, cfg.dt(), s)?;
        trace_node(&c, cfg.n_steps, node).map_err(|e| e.context(format!("{} at eps = {eps:e}", s.name())))
    });
    let mut a = Artifacts::default();
    let mut diag = Csv::new(&DIAGNOSTICS_HEADER);
    let mut curves = Vec::new();
    for ((s, eps), r) in list.into_iter().zip(runs) {
        let (trace, run) = r?;
        let name = format!("trace_{}_eps{}.csv", s.name(), eps_tag(eps));
        let mut c = Csv::new(&["t", "value", "reference"]);
        for &(t, v, r) in &trace {
            c.row(&[num(t), num(v), num(r)]);
        }
        let mean = crate::model_aligned::y_average(&cfg.aligned_model(eps)?.ic.sample(grid)?)[node.0];
        let tag = format!("{}_eps{}", s.name(), eps_tag(eps));
        a.summary
            .push((format!("{tag}:late_amplitude"), late_amplitude(&trace, mean)));
        a.summary
            .push((format!("{tag}:damping_rate"), damping_rate(&trace, mean)));
        curves.push((name.clone(), "1:2", format!("{} eps={}", s.name(), eps_tag(eps))));
        a.file(name, c.into_bytes());
        diagnostics_rows(&mut diag, s.name(), eps, &run.diagnostics);
    }
    a.plots.push(line_plot("traces.png", false, "t", "f", &curves));
    a.file("diagnostics.csv".into(), diag.into_bytes());
    Ok(a)
}

fn eps_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let grid = cfg.grid()?;
    let t = [cfg.n_steps as f64 * cfg.dt()];
    let (names, runs): (Vec<(String, f64)>, Vec<Result<RunResult>>) = match cfg.model {
        ModelKind::Aligned => {
            let list = jobs(&cfg.aligned_schemes()?, &cfg.eps);
            let runs = par_map(list.clone(), workers, |(s, eps)| {
                let c = AlignedSchemeConfig::new(cfg.aligned_model(eps)?, grid, cfg.dt(), s)?;
                run_aligned(&c, cfg.n_steps, &t).map_err(|e| e.context(format!("{} at eps = {eps:e}", s.name())))
            });
            (list.into_iter().map(|(s, e)| (s.name().to_string(), e)).collect(), runs)
        }
        ModelKind::Rotating => {
            let list = jobs(&cfg.rotating_schemes()?, &cfg.eps);
            let runs = par_map(list.clone(), workers, |(s, eps)| {
                let c = rotating_config(cfg, grid, s, eps)?;
                run_rotating(&c, cfg.n_steps, &t).map_err(|e| e.context(format!("{} at eps = {eps:e}", s.name())))
            });
            (list.into_iter().map(|(s, e)| (s.name().to_string(), e)).collect(), runs)
        }
    };
    let mut a = Artifacts::default();
    let mut table = Csv::new(&["scheme", "eps", "eta", "gamma"]);
    let mut diag = Csv::new(&DIAGNOSTICS_HEADER);
    for ((s, eps), run) in names.iter().zip(runs) {
        let run = run?;
        let e = run.errors.last().expect("final error pair");
        table.row(&[s.clone(), num(*eps), num(e.eta), num(e.gamma)]);
        diagnostics_rows(&mut diag, s, *eps, &run.diagnostics);
    }
    let mut schemes: Vec<&String> = names.iter().map(|(s, _)| s).collect();
    schemes.dedup();
    let mut curves = Vec::new();
    for s in schemes {
        curves.push((format!("< grep '^{s},' eps_sweep.csv"), "2:3", format!("eta {s}")));
        curves.push((format!("< grep '^{s},' eps_sweep.csv"), "2:4", format!("gamma {s}")));
    }
    a.plots.push(line_plot("eps_sweep.png", true, "eps", "error", &curves));
    a.file("eps_sweep.csv".into(), table.into_bytes());
    a.file("diagnostics.csv".into(), diag.into_bytes());
    Ok(a)
}

fn convergence(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let p = &cfg.convergence;
    let list: Vec<_> = cfg
        .aligned_schemes()?
        .into_iter()
        .flat_map(|s| {
            p.directions
                .iter()
                .flat_map(move |&d| cfg.eps.iter().map(move |&e| (s, d, e)))
        })
        .collect();
    let studies = par_map(list, workers, |(s, d, eps)| {
        convergence_study(&cfg.aligned_model(eps)?, s, d, &p.ns, p.fine, cfg.t_final)
            .map(|st| (eps, st))
            .map_err(|e| e.context(format!("{} {} sweep at eps = {eps:e}", s.name(), d.name())))
    });
    let mut a = Artifacts::default();
    let mut table = Csv::new(&[
        "scheme",
        "direction",
        "eps",
        "n",
        "h",
        "error_exact",
        "error_successive",
    ]);
    let mut curves = Vec::new();
    for st in studies {
        let (eps, st) = st?;
        let tag = format!("{}:{}:eps{}", st.scheme.name(), st.direction.name(), eps_tag(eps));
        for (k, &n) in st.ns.iter().enumerate() {
            let succ = st
                .successive
                .as_ref()
                .and_then(|t| t.errors.get(k))
                .map(|&v| num(v))
                .unwrap_or_default();
            table.row(&[
                st.scheme.name().into(),
                st.direction.name().into(),
                num(eps),
                n.to_string(),
                num(st.exact.step_sizes[k]),
                num(st.exact.errors[k]),
                succ,
            ]);
        }
        a.summary.push((format!("{tag}:slope_exact"), st.exact.fitted_slope));
        a.summary
            .push((format!("{tag}:window_start"), st.exact.window.0 as f64));
        a.summary.push((format!("{tag}:window_end"), st.exact.window.1 as f64));
        if let Some(s) = &st.successive {
            a.summary.push((format!("{tag}:slope_successive"), s.fitted_slope));
        }
        curves.push((
            format!(
                "< grep '^{},{},' convergence.csv",
                st.scheme.name(),
                st.direction.name()
            ),
            "5:6",
            tag,
        ));
    }
    a.plots
        .push(line_plot("convergence.png", true, "step size", "eta(T)", &curves));
    a.file("convergence.csv".into(), table.into_bytes());
    a.summary_csv();
    Ok(a)
}

fn cond_tables(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<(String, CondTable)>> {
    let grid = cfg.grid()?;
    let (it, tol) = (cfg.cond.max_iter, cfg.cond.tol);
    match cfg.model {
        ModelKind::Aligned => {
            let m = grid.my();
            let beta = cfg.cond.beta.unwrap_or(cfg.b * cfg.dt() / grid.dy);
            let fams = cfg.aligned_families()?;
            let tables = par_map(fams.clone(), workers, |f| {
                cond_sweep(|eps| Ok(f.matrix(m, beta, eps)), &cfg.eps, it, tol)
            });
            Ok(fams.iter().map(|f| f.name().to_string()).zip(tables).collect())
        }
        ModelKind::Rotating => {
            let schemes = cfg.rotating_schemes()?;
            let dt = cfg.dt();
            let tables = par_map(schemes.clone(), workers, |s| {
                cond_sweep(
                    |eps| match s {
                        RotatingScheme::Imp => assemble_imp(&grid, eps, dt),
                        RotatingScheme::Lagrange => {
                            assemble_lagrange_rot_with(&grid, eps, dt, cfg.gamma, cfg.constraint)
                        }
                    },
                    &cfg.eps,
                    it,
                    tol,
                )
            });
            Ok(schemes.iter().map(|s| s.name().to_string()).zip(tables).collect())
        }
    }
}

fn cond(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    let mut table = Csv::new(&["family", "eps", "cond", "error"]);
    let mut curves = Vec::new();
    for (name, t) in cond_tables(cfg, workers)? {
        for r in &t.rows {
            table.row(&[
                name.clone(),
                num(r.eps),
                r.cond.map(num).unwrap_or_default(),
                r.error.clone().unwrap_or_default().replace(',', ";"),
            ]);
        }
        if t.points().len() >= 2 {
            a.summary.push((format!("{name}:slope"), t.slope()?));
            a.summary
                .push((format!("{name}:plateau_deviation"), t.plateau_deviation()?));
        }
        curves.push((format!("< grep '^{name},' cond.csv"), "2:3", name));
    }
    a.plots.push(line_plot("cond.png", true, "eps", "cond2", &curves));
    a.file("cond.csv".into(), table.into_bytes());
    a.summary_csv();
    Ok(a)
}

fn xi_rows(cfg: &ExperimentConfig, workers: usize, modes: &[(i64, i64)]) -> Result<Artifacts> {
    let grid = cfg.grid()?;
    let list = jobs(&cfg.aligned_schemes()?, &cfg.eps);
    let results = par_map(list.clone(), workers, |(s, eps)| -> Result<Vec<(i64, i64, f64, f64)>> {
        let c = AlignedSchemeConfig::new(cfg.aligned_model(eps)?, grid, cfg.dt(), s)?;
        let (alpha, beta) = (c.alpha(), c.beta());
        modes
            .iter()
            .map(|&(k, l)| {
                let (kk, ll) = angular(&grid, k, l);
                let measured = measure_xi(&c, k, l).map_err(|e| e.context(format!("{} at eps = {eps:e}", s.name())))?;
                Ok((k, l, measured, xi_imex(alpha, beta, eps, kk, ll, grid.dx, grid.dy)))
            })
            .collect()
    });
    let mut a = Artifacts::default();
    let mut table = Csv::new(&["scheme", "eps", "k", "l", "measured", "imex_formula", "abs_diff"]);
    for ((s, eps), rows) in list.into_iter().zip(results) {
        let rows = rows?;
        let tag = format!("{}_eps{}", s.name(), eps_tag(eps));
        let mut worst = 0.0f64;
        let mut top = 0.0f64;
        for (k, l, m, f) in rows {
            table.row(&[
                s.name().into(),
                num(eps),
                k.to_string(),
                l.to_string(),
                num(m),
                num(f),
                num((m - f).abs()),
            ]);
            worst = worst.max((m - f).abs());
            top = top.max(m);
        }
        a.summary.push((format!("{tag}:max_xi"), top));
        a.summary.push((format!("{tag}:max_abs_diff"), worst));
    }
    a.file("xi.csv".into(), table.into_bytes());
    a.plots.push(
        "set output 'xi.png'\nset xlabel 'k'\nset ylabel 'l'\nset view map\nsplot 'xi.csv' using 3:4:5 with points pointtype 5 palette title '|xi|'\n"
            .to_string(),
    );
    a.summary_csv();
    Ok(a)
}

fn stability_scan(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let g = cfg.grid()?;
    let (kx, ly) = (((g.mx() - 1) / 2) as i64, ((g.my() - 1) / 2) as i64);
    let modes: Vec<(i64, i64)> = (-kx..=kx).flat_map(|k| (-ly..=ly).map(move |l| (k, l))).collect();
    xi_rows(cfg, workers, &modes)
}

fn amplification_check(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let modes: Vec<(i64, i64)> = cfg.modes.iter().map(|&[k, l]| (k, l)).collect();
    xi_rows(cfg, workers, &modes)
}

/// Computes every artifact of one experiment without touching the file system.
pub fn compute(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let workers = workers.max(1);
    match cfg.kind {
        Kind::AlignedRun => aligned_run(cfg, workers),
        Kind::RotatingRun => rotating_run(cfg, workers),
        Kind::PointTrace => point_trace(cfg, workers),
        Kind::EpsSweep => eps_sweep(cfg, workers),
        Kind::Convergence => convergence(cfg, workers),
        Kind::CondSweep => cond(cfg, workers),
        Kind::StabilityScan => stability_scan(cfg, workers),
        Kind::AmplificationCheck => amplification_check(cfg, workers),
    }
    .map_err(|e| e.context(cfg.kind.name()))
}

/// Runs one experiment and writes its CSVs, `plot.gp` and `manifest.json` into `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path, workers: usize) -> Result<Manifest> {
    let start = Instant::now();
    let art = compute(cfg, workers)?;
    let mut out = OutputDir::create(dir)?;
    for (name, bytes) in &art.files {
        out.write(name, bytes)?;
    }
    let mut script =
        String::from("set datafile separator ','\nset terminal pngcairo size 900,700\nset key autotitle columnhead\n");
    for p in &art.plots {
        script.push('\n');
        script.push_str(p);
    }
    out.write("plot.gp", script.as_bytes())?;
    let manifest = Manifest {
        config: serde_json::to_value(cfg).expect("config serializes"),
        outputs: out.into_entries(),
        wall_time_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        summary: art.summary,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

/// Runs every experiment of a config file. A single experiment writes into
/// `out` (or its `output` key); a batch writes one subdirectory per experiment
/// and runs up to `workers` experiments at once.
pub fn run_file(path: &Path, out: Option<&Path>, workers: usize) -> Result<Vec<(PathBuf, Manifest)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let batch = parse_batch(&text)?;
    if batch.len() == 1 {
        let cfg = &batch[0];
        let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output));
        let m = run_experiment(cfg, &dir, workers)?;
        return Ok(vec![(dir, m)]);
    }
    let dirs: Vec<PathBuf> = batch
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let leaf = c.name.clone().unwrap_or_else(|| format!("{k:02}-{}", c.kind.name()));
            match out {
                Some(root) => root.join(leaf),
                None => PathBuf::from(&c.output),
            }
        })
        .collect();
    for (k, d) in dirs.iter().enumerate() {
        if dirs[..k].contains(d) {
            return Err(Error::Config(format!(
                "experiments {k} and an earlier one share output {}",
                d.display()
            )));
        }
    }
    let items: Vec<_> = batch.iter().zip(&dirs).enumerate().collect();
    let results = par_map(items, workers, |(k, (cfg, dir))| {
        run_experiment(cfg, dir, 1).map_err(|e| e.context(format!("experiment {k}")))
    });
    dirs.into_iter().zip(results).map(|(d, r)| r.map(|m| (d, m))).collect()
}
