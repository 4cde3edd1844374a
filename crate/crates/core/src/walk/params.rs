//! Step-size schedule and run length.

use serde::{Deserialize, Serialize};

use super::target::Target;
use crate::barriers::{barrier_nu, BarrierKind, LewisOptions};
use crate::geometry::Body;
use crate::rla::SketchSpec;

/// Above this value of `d · ε_H` the acceptance analysis no longer applies.
pub const EPS_H_WARNING_THRESHOLD: f64 = 1e-3;

/// Output size targeted by the default thinning.
pub const DEFAULT_KEPT_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HessianMode {
    #[default]
    Exact,
    Approx,
}

/// Tunable constants behind [`default_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub c_alpha: f64,
    pub c_eta: f64,
    pub c_eps: f64,
    pub c_ls: f64,
    pub c_p: f64,
    pub delta_h: f64,
    pub laziness: f64,
    pub mode: HessianMode,
    pub seed: u64,
    /// Keep every `thin`-th point; `None` picks `⌈T / 10⁴⌉`.
    pub thin: Option<u64>,
    pub full_trace: bool,
    pub steps: Option<u64>,
    pub lewis: LewisOptions,
    pub sketch: SketchSpec,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            c_alpha: 1e-2,
            c_eta: 10.0,
            c_eps: 1e-3,
            c_ls: 1.0,
            c_p: 1.0,
            delta_h: 1e-4,
            laziness: 0.5,
            mode: HessianMode::Exact,
            seed: 0,
            thin: None,
            full_trace: false,
            steps: None,
            lewis: LewisOptions::default(),
            sketch: SketchSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub alpha: f64,
    pub eta_inv: f64,
    pub steps: u64,
    pub laziness: f64,
    pub eps_h: f64,
    pub delta_h: f64,
    pub seed: u64,
    pub hessian_mode: HessianMode,
    pub thin: u64,
    pub nu: f64,
    pub lewis: LewisOptions,
    /// Constants for approximate Hessians; `eps`, `delta` and the seed are
    /// replaced per evaluation.
    pub sketch: SketchSpec,
    pub warnings: Vec<String>,
}

impl WalkParams {
    pub fn sketch_for(&self, seed: u64) -> SketchSpec {
        SketchSpec {
            eps: self.eps_h,
            delta: self.delta_h,
            rng_seed: seed,
            ..self.sketch
        }
    }

    pub fn with_mode(mut self, mode: HessianMode) -> Self {
        self.hessian_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self.thin = auto_thin(steps);
        self
    }

    /// Re-derives the threshold warning after `eps_h` changes.
    pub fn with_eps_h(mut self, eps_h: f64, d: usize) -> Self {
        self.eps_h = eps_h;
        self.warnings = eps_warnings(eps_h, d);
        self
    }
}

pub fn auto_thin(steps: u64) -> u64 {
    steps.div_ceil(DEFAULT_KEPT_SAMPLES).max(1)
}

/// `T = ⌈(ν/α + η⁻¹R²) · ln(w/δ)⌉`, or 0 when `w ≤ δ`.
pub fn step_count(nu: f64, alpha: f64, eta_inv: f64, radius: f64, warm: f64, delta_tv: f64) -> u64 {
    let log = (warm / delta_tv).ln().max(0.0);
    ((nu / alpha + eta_inv * radius * radius) * log).ceil() as u64
}

fn eps_warnings(eps_h: f64, d: usize) -> Vec<String> {
    let product = eps_h * d as f64;
    if product > EPS_H_WARNING_THRESHOLD {
        vec![format!(
            "d * eps_H = {product:e} exceeds {EPS_H_WARNING_THRESHOLD:e}; acceptance guarantees for approximate metrics do not apply"
        )]
    } else {
        Vec::new()
    }
}

/// Parameters with every constant at its default.
pub fn default_params(kind: BarrierKind, body: &Body, target: &Target) -> WalkParams {
    params_from_config(kind, body, target, &WalkConfig::default())
}

pub fn params_from_config(kind: BarrierKind, body: &Body, target: &Target, cfg: &WalkConfig) -> WalkParams {
    let d = body.dim();
    let n = body.size();
    let df = d as f64;
    let alpha = cfg.c_alpha / df;
    let l = target.lipschitz();
    let eta_inv = if l == 0.0 { 0.0 } else { cfg.c_eta * df * l * l };
    let nu = barrier_nu(kind, n, d, cfg.c_ls);
    let steps = cfg
        .steps
        .unwrap_or_else(|| step_count(nu, alpha, eta_inv, body.radius(), target.warm(), target.delta_tv()));
    let thin = if cfg.full_trace {
        1
    } else {
        cfg.thin.unwrap_or_else(|| auto_thin(steps)).max(1)
    };
    let eps_h = cfg.c_eps / df;
    WalkParams {
        alpha,
        eta_inv,
        steps,
        laziness: cfg.laziness,
        eps_h,
        delta_h: cfg.delta_h,
        seed: cfg.seed,
        hessian_mode: cfg.mode,
        thin,
        nu,
        lewis: cfg.lewis,
        sketch: cfg.sketch,
        warnings: eps_warnings(eps_h, d),
    }
}
