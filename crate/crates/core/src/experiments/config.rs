//! Experiment configuration: one JSON document per experiment, layered over
//! built-in per-kind defaults.

use crate::analysis::{AlignedFamily, SweepDirection};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::linalg::SolveOptions;
use crate::model_aligned::{AlignedModel, InitialCondition};
use crate::model_rotating::RotatingModel;
use crate::schemes_aligned::AlignedScheme;
use crate::schemes_rotating::{LagrangeConstraint, RotatingScheme, DEFAULT_GAMMA};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    AlignedRun,
    RotatingRun,
    PointTrace,
    EpsSweep,
    Convergence,
    CondSweep,
    StabilityScan,
    AmplificationCheck,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::AlignedRun,
        Kind::RotatingRun,
        Kind::PointTrace,
        Kind::EpsSweep,
        Kind::Convergence,
        Kind::CondSweep,
        Kind::StabilityScan,
        Kind::AmplificationCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::AlignedRun => "aligned-run",
            Kind::RotatingRun => "rotating-run",
            Kind::PointTrace => "point-trace",
            Kind::EpsSweep => "eps-sweep",
            Kind::Convergence => "convergence",
            Kind::CondSweep => "cond-sweep",
            Kind::StabilityScan => "stability-scan",
            Kind::AmplificationCheck => "amplification-check",
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Kind::AlignedRun => "time integration of the aligned model, field snapshots and errors",
            Kind::RotatingRun => "time integration of the rotating model, field snapshots and errors",
            Kind::PointTrace => "time history of one node for each scheme and eps",
            Kind::EpsSweep => "final-time errors against the exact and limit solutions over eps",
            Kind::Convergence => "error against step size for dt, dx and dy refinement",
            Kind::CondSweep => "2-norm condition numbers of the implicit matrices over eps",
            Kind::StabilityScan => "measured amplification factor of every representable mode",
            Kind::AmplificationCheck => "measured amplification factor of selected modes against the closed form",
        }
    }

    pub fn parse(s: &str) -> Result<Kind> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Aligned,
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcConfig {
    SinCos,
    CosY,
    Constant(f64),
    Gaussian {
        sigma: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
    },
}

impl IcConfig {
    pub fn build(&self) -> InitialCondition {
        match *self {
            IcConfig::SinCos => InitialCondition::SinCos,
            IcConfig::CosY => InitialCondition::CosY,
            IcConfig::Constant(c) => InitialCondition::Constant(c),
            IcConfig::Gaussian { sigma, x0, y0 } => InitialCondition::Gaussian { sigma, x0, y0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceParams {
    pub directions: Vec<SweepDirection>,
    /// Node counts (time levels for `dt`) of the refined direction.
    pub ns: Vec<usize>,
    /// Resolution of the directions that are not refined.
    pub fine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondParams {
    /// Overrides `b dt / dy` for the aligned column families.
    pub beta: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelKind,
    pub a: f64,
    pub b: f64,
    pub ic: IcConfig,
    /// `[x_min, x_max, y_min, y_max]`.
    pub domain: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub n_steps: usize,
    pub schemes: Vec<String>,
    pub eps: Vec<f64>,
    /// Defaults to `[t_final]`.
    pub snapshot_times: Option<Vec<f64>>,
    /// Stored node `[i, j]` of the point trace; defaults to the last stored node.
    pub trace_node: Option<[usize; 2]>,
    pub gamma: f64,
    pub constraint: LagrangeConstraint,
    pub solver: SolveOptions,
    pub convergence: ConvergenceParams,
    pub cond: CondParams,
    /// `[k, l]` wavenumber pairs of the amplification check.
    pub modes: Vec<[i64; 2]>,
    pub output: String,
}

/// Keys whose objects are merged key by key instead of replaced.
const NESTED: [&str; 3] = ["convergence", "cond", "solver"];

fn two_pi() -> [f64; 4] {
    [0.0, 2.0 * PI, 0.0, 2.0 * PI]
}

impl ExperimentConfig {
    /// Built-in parameters for `kind` with its usual model.
    pub fn defaults(kind: Kind) -> Self {
        Self::defaults_for(kind, None)
    }

    /// Built-in parameters for `kind`; `model` switches the model-dependent
    /// keys (initial data, domain, grid, steps, schemes) of the kinds that
    /// accept both models.
    pub fn defaults_for(kind: Kind, model: Option<ModelKind>) -> Self {
        let base = Self {
            kind,
            name: None,
            model: ModelKind::Aligned,
            a: 0.1,
            b: 1.0,
            ic: IcConfig::SinCos,
            domain: two_pi(),
            nx: 201,
            ny: 201,
            t_final: 1.0,
            n_steps: 100,
            schemes: vec!["imex".into()],
            eps: vec![1.0],
            snapshot_times: None,
            trace_node: None,
            gamma: DEFAULT_GAMMA,
            constraint: LagrangeConstraint::default(),
            solver: SolveOptions::default(),
            convergence: ConvergenceParams {
                directions: vec![SweepDirection::Dt, SweepDirection::Dx, SweepDirection::Dy],
                ns: vec![101, 201, 401, 801],
                fine: 1001,
            },
            cond: CondParams {
                beta: None,
                max_iter: crate::linalg::cond::DEFAULT_MAX_ITER,
                tol: crate::linalg::cond::DEFAULT_TOL,
            },
            modes: vec![[1, 0], [0, 1], [3, 5]],
            output: format!("out/{}", kind.name()),
        };
        let all_aligned: Vec<String> = AlignedScheme::ALL.iter().map(|s| s.name().into()).collect();
        let rotating = |c: Self| Self {
            model: ModelKind::Rotating,
            ic: IcConfig::Gaussian {
                sigma: 0.5,
                x0: 0.0,
                y0: 0.0,
            },
            domain: [-3.0, 3.0, -3.0, 3.0],
            nx: 160,
            ny: 160,
            t_final: 1.0,
            n_steps: 64,
            schemes: RotatingScheme::ALL.iter().map(|s| s.name().into()).collect(),
            ..c
        };
        match kind {
            Kind::AlignedRun => base,
            Kind::RotatingRun => Self {
                eps: vec![1.0, 1e-2, 1e-8],
                ..rotating(base)
            },
            Kind::PointTrace => Self {
                a: 0.0,
                ic: IcConfig::CosY,
                nx: 3,
                t_final: 10.0,
                n_steps: 500,
                schemes: all_aligned,
                eps: vec![1.0, 1e-1, 1e-2],
                ..base
            },
            Kind::EpsSweep if model == Some(ModelKind::Rotating) => Self {
                nx: 80,
                ny: 80,
                eps: crate::analysis::logspace(-8.0, 0.0, 9),
                ..rotating(base)
            },
            Kind::EpsSweep => Self {
                schemes: all_aligned,
                eps: crate::analysis::logspace(-6.0, 0.0, 13),
                ..base
            },
            Kind::Convergence => Self {
                schemes: all_aligned,
                ..base
            },
            Kind::CondSweep if model == Some(ModelKind::Aligned) => Self {
                ny: 64,
                schemes: AlignedFamily::ALL.iter().map(|f| f.name().into()).collect(),
                eps: crate::analysis::logspace(-6.0, -2.0, 9),
                cond: CondParams {
                    beta: Some(1.0 / PI),
                    ..base.cond.clone()
                },
                ..base
            },
            Kind::CondSweep => Self {
                nx: 40,
                ny: 40,
                eps: crate::analysis::logspace(-6.0, -2.0, 9),
                ..rotating(base)
            },
            Kind::StabilityScan => Self {
                a: 1.0,
                nx: 33,
                ny: 33,
                t_final: 0.19,
                n_steps: 1,
                eps: vec![1.0, 1e-3],
                ..base
            },
            Kind::AmplificationCheck => Self {
                nx: 65,
                ny: 65,
                eps: vec![1.0, 1e-2, 1e-6],
                ..base
            },
        }
    }

    /// Parses one experiment from a JSON object, filling absent keys from
    /// [`ExperimentConfig::defaults`] of its `kind`.
    pub fn from_value(user: &Value) -> Result<Self> {
        let obj = user
            .as_object()
            .ok_or_else(|| Error::Config("an experiment must be a JSON object".into()))?;
        let kind = match obj.get("kind") {
            Some(Value::String(s)) => Kind::parse(s)?,
            Some(_) => return Err(Error::Config("`kind` must be a string".into())),
            None => return Err(Error::Config("missing key `kind`".into())),
        };
        let model = match obj.get("model") {
            Some(m) => Some(
                serde_json::from_value::<ModelKind>(m.clone())
                    .map_err(|e| Error::Config(format!("key `model`: {e}")))?,
            ),
            None => None,
        };
        let mut merged = serde_json::to_value(Self::defaults_for(kind, model)).expect("defaults serialize");
        let target = merged.as_object_mut().expect("object");
        for (k, v) in obj {
            match (target.get_mut(k), v) {
                (Some(Value::Object(base)), Value::Object(over)) if NESTED.contains(&k.as_str()) => {
                    for (kk, vv) in over {
                        base.insert(kk.clone(), vv.clone());
                    }
                }
                _ => {
                    target.insert(k.clone(), v.clone());
                }
            }
        }
        let cfg: Self = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("key `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn grid(&self) -> Result<Grid2D> {
        let [x0, x1, y0, y1] = self.domain;
        Grid2D::new(x0, x1, y0, y1, self.nx, self.ny).map_err(|e| e.context("keys `domain`, `nx`, `ny`"))
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_times.clone().unwrap_or_else(|| vec![self.t_final])
    }

    pub fn aligned_model(&self, eps: f64) -> Result<AlignedModel> {
        AlignedModel::new(self.a, self.b, eps, self.ic.build()).map_err(|e| e.context("keys `a`, `b`, `eps`"))
    }

    pub fn rotating_model(&self, eps: f64) -> Result<RotatingModel> {
        RotatingModel::new(eps, self.ic.build()).map_err(|e| e.context("key `eps`"))
    }

    pub fn aligned_schemes(&self) -> Result<Vec<AlignedScheme>> {
        self.schemes
            .iter()
            .map(|s| {
                AlignedScheme::ALL
                    .into_iter()
                    .find(|a| a.name() == s)
                    .ok_or_else(|| Error::Config(format!("key `schemes`: `{s}` is not an aligned-model scheme")))
            })
            .collect()
    }

    pub fn rotating_schemes(&self) -> Result<Vec<RotatingScheme>> {
        self.schemes
            .iter()
            .map(|s| {
                RotatingScheme::ALL
                    .into_iter()
                    .find(|a| a.name() == s)
                    .ok_or_else(|| Error::Config(format!("key `schemes`: `{s}` is not a rotating-model scheme")))
            })
            .collect()
    }

    pub fn aligned_families(&self) -> Result<Vec<AlignedFamily>> {
        self.schemes
            .iter()
            .map(|s| {
                AlignedFamily::ALL
                    .into_iter()
                    .find(|a| a.name() == s)
                    .ok_or_else(|| Error::Config(format!("key `schemes`: `{s}` has no column matrix family")))
            })
            .collect()
    }

    /// Checks key-level constraints that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("key `{key}`: {msg}")));
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return bad("t_final", format!("must be finite and > 0, got {}", self.t_final));
        }
        if self.n_steps == 0 {
            return bad("n_steps", "must be >= 1".into());
        }
        if self.nx < 3 || self.ny < 3 {
            return bad("nx", format!("nx and ny must be >= 3, got {} x {}", self.nx, self.ny));
        }
        if self.eps.is_empty() {
            return bad("eps", "must list at least one value".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return bad("eps", format!("values must be finite and >= 0, got {e}"));
        }
        if self.schemes.is_empty() {
            return bad("schemes", "must list at least one scheme".into());
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return bad("name", format!("`{name}` is not a plain directory name"));
            }
        }
        let wants = |m: ModelKind| {
            if self.model == m {
                Ok(())
            } else {
                bad(
                    "model",
                    format!("kind {} needs model {m:?}", self.kind.name()).to_lowercase(),
                )
            }
        };
        match self.kind {
            Kind::AlignedRun
            | Kind::PointTrace
            | Kind::Convergence
            | Kind::StabilityScan
            | Kind::AmplificationCheck => wants(ModelKind::Aligned)?,
            Kind::RotatingRun => wants(ModelKind::Rotating)?,
            Kind::EpsSweep | Kind::CondSweep => {}
        }
        match (self.kind, self.model) {
            (Kind::CondSweep, ModelKind::Aligned) => {
                self.aligned_families()?;
            }
            (_, ModelKind::Aligned) => {
                self.aligned_schemes()?;
            }
            (_, ModelKind::Rotating) => {
                self.rotating_schemes()?;
            }
        }
        if self.kind == Kind::Convergence {
            let c = &self.convergence;
            if c.ns.len() < 2 || c.directions.is_empty() {
                return bad("convergence", "needs at least two resolutions and one direction".into());
            }
            if c.ns.iter().chain([&c.fine]).any(|&n| n < 3) {
                return bad("convergence", "resolutions must be >= 3".into());
            }
        }
        if let Some([i, j]) = self.trace_node {
            if i + 1 >= self.nx || j + 1 >= self.ny {
                return bad(
                    "trace_node",
                    format!("[{i}, {j}] is not a stored node of the {} x {} grid", self.nx, self.ny),
                );
            }
        }
        if self.kind == Kind::CondSweep && !(self.cond.tol > 0.0 && self.cond.max_iter > 0) {
            return bad("cond", "tol and max_iter must be positive".into());
        }
        Ok(())
    }
}

/// A config file holds one experiment object or an array of them.
pub fn parse_batch(text: &str) -> Result<Vec<ExperimentConfig>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    match &v {
        Value::Array(items) => {
            if items.is_empty() {
                return Err(Error::Config("empty experiment list".into()));
            }
            items
                .iter()
                .enumerate()
                .map(|(k, item)| ExperimentConfig::from_value(item).map_err(|e| e.context(format!("experiment {k}"))))
                .collect()
        }
        _ => Ok(vec![ExperimentConfig::from_value(&v)?]),
    }
}
