//! JSON run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dikin_core::barriers::{default_lewis_p, BarrierKind};
use dikin_core::geometry::{Body, BodyFile};
use dikin_core::walk::{quadratic_from_rows, HessianMode, Target, WalkConfig};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::pipe::PipeOracle;

/// Body given inline or as a path relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodySource {
    Path(PathBuf),
    Inline(BodyFile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierName {
    LogPolytope,
    LeeSidford,
    LogSpectrahedron,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TargetSpec {
    #[default]
    Uniform,
    Linear {
        c: Vec<f64>,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
    },
    /// A process that answers `EVAL x1 … xd` with one decimal per line.
    External {
        command: Vec<String>,
        lipschitz: f64,
    },
}

/// Direct overrides of derived walk parameters.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub eta_inv: Option<f64>,
    pub eps_h: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub samples: String,
    pub report: String,
    pub verify_report: String,
    pub bench: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            samples: "samples.csv".into(),
            report: "report.json".into(),
            verify_report: "verify.json".into(),
            bench: "bench.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub checks: Vec<String>,
    /// Interior points per body-dependent check.
    pub points: usize,
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            checks: vec!["all".into()],
            points: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchBody {
    Polytope,
    Spectrahedron,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSpec {
    pub body: BenchBody,
    pub barrier: Option<BarrierName>,
    pub cells: Vec<BenchCell>,
    pub repetitions: usize,
    /// Accuracy of the approximate Hessian being timed.
    pub eps: f64,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            body: BenchBody::Polytope,
            barrier: None,
            cells: vec![BenchCell { n: 256, d: 16 }],
            repetitions: 5,
            eps: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub body: Option<BodySource>,
    #[serde(default)]
    pub barrier: Option<BarrierName>,
    /// Lewis exponent for the Lee-Sidford barrier; defaults to `max(2, ⌈c_p ln n⌉)`.
    #[serde(default)]
    pub lewis_p: Option<f64>,
    #[serde(default)]
    pub target: TargetSpec,
    /// Lipschitz constant `L`, overriding the one implied by the target.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    /// Radius `R`, overriding the body file.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub warm: Option<f64>,
    #[serde(default)]
    pub delta_tv: Option<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub bench: BenchSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.walk.seed = seed;
        self.verify.seed = seed;
        self.bench.seed = seed;
    }

    pub fn set_mode(&mut self, mode: HessianMode) {
        self.walk.mode = mode;
    }

    /// Loads the body and applies the radius override. A loaded path is
    /// replaced by the inline body so reports are self-contained.
    pub fn resolve_body(&mut self) -> Result<Body, CliError> {
        let source = self
            .body
            .clone()
            .ok_or_else(|| CliError::Config("config has no body".into()))?;
        let mut file = match source {
            BodySource::Inline(f) => f,
            BodySource::Path(p) => {
                let full = self.base_dir.join(&p);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Config(format!("cannot read body {}: {e}", full.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid body {}: {e}", full.display())))?
            }
        };
        if let Some(r) = self.radius {
            match &mut file {
                BodyFile::Polytope { radius, .. } | BodyFile::Spectrahedron { radius, .. } => *radius = r,
            }
        }
        let body = Body::try_from(file.clone()).map_err(|e| CliError::Config(format!("invalid body: {e}")))?;
        self.body = Some(BodySource::Inline(file));
        Ok(body)
    }

    pub fn barrier_kind(&self, body: &Body) -> Result<BarrierKind, CliError> {
        let name = self.barrier.unwrap_or(match body {
            Body::Polytope(_) => BarrierName::LogPolytope,
            Body::Spectrahedron(_) => BarrierName::LogSpectrahedron,
        });
        let kind = match name {
            BarrierName::LogPolytope => BarrierKind::LogPolytope,
            BarrierName::LogSpectrahedron => BarrierKind::LogSpectrahedron,
            BarrierName::LeeSidford => BarrierKind::LeeSidford {
                p: self.lewis_p.unwrap_or_else(|| default_lewis_p(body.size(), self.walk.c_p)),
            },
        };
        kind.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !kind.supports(body) {
            return Err(CliError::Config(format!("barrier {} does not apply to this body", kind.name())));
        }
        Ok(kind)
    }

    pub fn build_target(&self, body: &Body) -> Result<Target, CliError> {
        let d = body.dim();
        let check_len = |len: usize, what: &str| {
            if len == d {
                Ok(())
            } else {
                Err(CliError::Config(format!("{what} has length {len}, body dimension is {d}")))
            }
        };
        let target = match &self.target {
            TargetSpec::Uniform => Target::uniform(),
            TargetSpec::Linear { c } => {
                check_len(c.len(), "target.c")?;
                Target::linear(DVector::from_column_slice(c))
            }
            TargetSpec::Quadratic { q } => {
                check_len(q.len(), "target.q")?;
                let q = quadratic_from_rows(q).map_err(|e| CliError::Config(format!("target.q: {e}")))?;
                Target::quadratic(q, body.radius()).map_err(|e| CliError::Config(format!("target.q: {e}")))?
            }
            TargetSpec::External { command, lipschitz } => {
                let oracle = PipeOracle::spawn(command, d)?;
                Target::new(Arc::new(oracle), *lipschitz, 2.0, 0.01).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        let mut target = target;
        if let Some(l) = self.lipschitz {
            target = Target::new(target.potential().clone(), l, target.warm(), target.delta_tv())
                .map_err(|e| CliError::Config(format!("lipschitz: {e}")))?;
        }
        if let Some(w) = self.warm {
            target = target.with_warm(w).map_err(|e| CliError::Config(format!("warm: {e}")))?;
        }
        if let Some(delta) = self.delta_tv {
            target = target.with_delta_tv(delta).map_err(|e| CliError::Config(format!("delta_tv: {e}")))?;
        }
        Ok(target)
    }

    pub fn start_point(&self, body: &Body) -> Result<DVector<f64>, CliError> {
        let x0 = self
            .x0
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no x0".into()))?;
        if x0.len() != body.dim() {
            return Err(CliError::Config(format!(
                "x0 has length {}, body dimension is {}",
                x0.len(),
                body.dim()
            )));
        }
        Ok(DVector::from_column_slice(x0))
    }
}
