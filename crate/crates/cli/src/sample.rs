use std::fmt::Write as _;
use std::path::Path;

use dikin_core::barriers::BarrierKind;
use dikin_core::geometry::Body;
use dikin_core::walk::{auto_thin, params_from_config, run_chain, step_count, Target, WalkParams};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Derived parameters after the overrides in `cfg`.
pub fn effective_params(cfg: &RunConfig, kind: BarrierKind, body: &Body, target: &Target) -> Result<WalkParams, CliError> {
    let mut params = params_from_config(kind, body, target, &cfg.walk);
    let o = &cfg.overrides;
    let positive = |v: f64, what: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{what} must be positive, got {v}")))
        }
    };
    if let Some(a) = o.alpha {
        params.alpha = positive(a, "overrides.alpha")?;
    }
    if let Some(e) = o.eta_inv {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(CliError::Config(format!("overrides.eta_inv must be non-negative, got {e}")));
        }
        params.eta_inv = e;
    }
    if (o.alpha.is_some() || o.eta_inv.is_some()) && cfg.walk.steps.is_none() {
        params.steps = step_count(
            params.nu,
            params.alpha,
            params.eta_inv,
            body.radius(),
            target.warm(),
            target.delta_tv(),
        );
        if cfg.walk.thin.is_none() && !cfg.walk.full_trace {
            params.thin = auto_thin(params.steps);
        }
    }
    if let Some(eps) = o.eps_h {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Config(format!("overrides.eps_h must lie in (0, 1), got {eps}")));
        }
        params = params.with_eps_h(eps, body.dim());
    }
    if !(params.laziness > 0.0 && params.laziness <= 1.0) {
        return Err(CliError::Config(format!("laziness must lie in (0, 1], got {}", params.laziness)));
    }
    Ok(params)
}

/// Header `x0,…,x{d-1}` and one row per sample with 17 significant digits.
pub fn samples_csv(samples: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..samples.ncols()).map(|j| format!("x{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in samples.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SampleReport<'a> {
    config: &'a RunConfig,
    samples_file: &'a str,
    kept: usize,
    run: &'a dikin_core::walk::RunReport,
}

pub fn run(mut cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    let body = cfg.resolve_body()?;
    let kind = cfg.barrier_kind(&body)?;
    let target = cfg.build_target(&body)?;
    let x0 = cfg.start_point(&body)?;
    let params = effective_params(&cfg, kind, &body, &target)?;
    let output = run_chain(kind, &body, &target, &params, &x0)?;

    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(&cfg.output.samples), samples_csv(&output.samples))?;
    let report = SampleReport {
        config: &cfg,
        samples_file: &cfg.output.samples,
        kept: output.samples.nrows(),
        run: &output.report,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(out.join(&cfg.output.report), json)?;

    for w in &output.report.warnings {
        eprintln!("warning: {w}");
    }
    let c = &output.report.counters;
    println!(
        "{} steps, acceptance {:.3}, {} samples written to {}",
        c.steps,
        c.acceptance_rate(),
        output.samples.nrows(),
        out.join(&cfg.output.samples).display()
    );
    Ok(())
}
