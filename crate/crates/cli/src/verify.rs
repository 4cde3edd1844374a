use std::collections::BTreeMap;
use std::path::Path;

use dikin_core::barriers::{default_lewis_p, BarrierKind, LewisOptions};
use dikin_core::diagnostics::{
    interior_points, lewis_stability, random_unit_vector, verify_cross_ratio, verify_det_ratio_lemma,
    verify_gaussian_tail, verify_local_norm, verify_logdet_convexity, verify_nu_symmetry, VerificationReport,
    CONVEXITY_STEP_FRACTION,
};
use dikin_core::geometry::Body;
use dikin_core::seeding::{rng_from_seed, split_seed};
use nalgebra::DVector;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::sample::effective_params;

pub const KNOWN_CHECKS: [&str; 8] = [
    "nu_symmetry",
    "logdet_convexity",
    "local_norm",
    "det_ratio",
    "gaussian_tail",
    "cross_ratio",
    "lewis_stability",
    "all",
];

/// A check name followed by `key=value` arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRequest {
    pub name: String,
    pub args: BTreeMap<String, f64>,
}

impl CheckRequest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut parts = text.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| CliError::Config("empty check name".into()))?
            .to_string();
        if !KNOWN_CHECKS.contains(&name.as_str()) {
            return Err(CliError::Config(format!(
                "unknown check {name:?}; known checks: {}",
                KNOWN_CHECKS.join(", ")
            )));
        }
        let mut args = BTreeMap::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("check argument {part:?} is not key=value")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| CliError::Config(format!("check argument {k} has non-numeric value {v:?}")))?;
            args.insert(k.to_string(), v);
        }
        Ok(Self { name, args })
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.args.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = self.get(key, default as f64);
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(CliError::Config(format!("{} {key} must be a non-negative integer, got {v}", self.name)))
        }
    }

    fn label(&self) -> String {
        let mut s = self.name.clone();
        for (k, v) in &self.args {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }
}

struct Context {
    body: Option<Body>,
    kind: Option<BarrierKind>,
    cfg: RunConfig,
    seed: u64,
}

impl Context {
    fn body(&self, check: &str) -> Result<&Body, CliError> {
        self.body
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("check {check} needs a body in the config")))
    }

    fn points(&self, body: &Body, count: usize, stream: u64) -> Result<Vec<DVector<f64>>, CliError> {
        let center = match &self.cfg.x0 {
            Some(x) if x.len() == body.dim() => DVector::from_column_slice(x),
            Some(x) => {
                return Err(CliError::Config(format!(
                    "x0 has length {}, body dimension is {}",
                    x.len(),
                    body.dim()
                )))
            }
            None => DVector::zeros(body.dim()),
        };
        let mut rng = rng_from_seed(split_seed(self.seed, stream));
        Ok(interior_points(body, &center, count, 0.9, &mut rng)?)
    }
}

fn run_one(ctx: &Context, req: &CheckRequest, stream: u64) -> Result<VerificationReport, CliError> {
    let seed = split_seed(ctx.seed, 1000 + stream);
    let points = ctx.cfg.verify.points;
    let report = match req.name.as_str() {
        "nu_symmetry" => {
            let body = ctx.body(&req.name)?;
            let pts = ctx.points(body, req.count("points", points)?, stream)?;
            verify_nu_symmetry(body, ctx.kind.expect("kind with body"), &pts, req.count("trials", 200)?, seed)?
        }
        "logdet_convexity" => {
            let body = ctx.body(&req.name)?;
            let kind = ctx.kind.expect("kind with body");
            let pts = ctx.points(body, req.count("points", points)?, stream)?;
            let opts = LewisOptions {
                tol: 1e-13,
                max_iter: 10_000,
                ..LewisOptions::default()
            };
            let step = req.get("step_fraction", CONVEXITY_STEP_FRACTION);
            let mut rng = rng_from_seed(seed);
            let mut all = VerificationReport::new("logdet_convexity", dikin_core::diagnostics::CONVEXITY_TOLERANCE);
            for x in &pts {
                let dirs: Vec<_> = (0..req.count("directions", 10)?)
                    .map(|_| random_unit_vector(body.dim(), &mut rng))
                    .collect();
                all.absorb(verify_logdet_convexity(body, kind, x, &dirs, step, &opts)?);
            }
            all
        }
        "local_norm" => {
            let body = ctx.body(&req.name)?;
            let poly = body
                .as_polytope()
                .ok_or_else(|| CliError::Config("local_norm needs a polytope".into()))?;
            let mut all = VerificationReport::new("local_norm", 1e-5);
            for x in ctx.points(body, req.count("points", points)?, stream)? {
                all.absorb(verify_local_norm(poly, &x)?);
            }
            all
        }
        "det_ratio" => verify_det_ratio_lemma(
            req.count("trials", 10_000)?,
            req.count("d", 6)?,
            req.get("eps", 0.01),
            seed,
        )?,
        "gaussian_tail" => {
            let draws = req.count("draws", 1_000_000)? as u64;
            verify_gaussian_tail(req.count("d", 4)?, req.get("t", 4.0), draws, seed)?
        }
        "cross_ratio" => {
            let body = ctx.body(&req.name)?;
            let poly = body
                .as_polytope()
                .ok_or_else(|| CliError::Config("cross_ratio needs a polytope".into()))?;
            let target = ctx.cfg.build_target(body)?;
            let params = effective_params(&ctx.cfg, BarrierKind::LogPolytope, body, &target)?;
            let pts = ctx.points(body, req.count("points", points)?, stream)?;
            let alpha = req.get("alpha", params.alpha);
            let eta_inv = req.get("eta_inv", params.eta_inv);
            verify_cross_ratio(poly, &pts, req.count("pairs", 50)?, alpha, eta_inv, seed)?
        }
        "lewis_stability" => {
            let body = ctx.body(&req.name)?;
            let poly = body
                .as_polytope()
                .ok_or_else(|| CliError::Config("lewis_stability needs a polytope".into()))?;
            let default_p = ctx
                .cfg
                .lewis_p
                .unwrap_or_else(|| default_lewis_p(body.size(), ctx.cfg.walk.c_p));
            let pts = ctx.points(body, req.count("points", points)?, stream)?;
            lewis_stability(poly, req.get("p", default_p), &pts, req.get("r", 0.1), req.count("trials", 20)?, seed)?
        }
        other => unreachable!("unexpanded check {other}"),
    };
    Ok(report)
}

/// Expands `all` into the checks that apply to the configured body.
fn expand(requests: Vec<CheckRequest>, ctx: &Context) -> Vec<CheckRequest> {
    let mut out = Vec::new();
    for req in requests {
        if req.name != "all" {
            out.push(req);
            continue;
        }
        let mut names = vec!["det_ratio", "gaussian_tail"];
        if let (Some(body), Some(kind)) = (&ctx.body, ctx.kind) {
            if matches!(kind, BarrierKind::LogPolytope | BarrierKind::LogSpectrahedron) {
                names.push("nu_symmetry");
            }
            names.push("logdet_convexity");
            if body.as_polytope().is_some() {
                names.extend(["local_norm", "cross_ratio", "lewis_stability"]);
            }
        }
        out.extend(names.into_iter().map(|n| CheckRequest {
            name: n.to_string(),
            args: req.args.clone(),
        }));
    }
    out
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    config: &'a RunConfig,
    passed: usize,
    failed: usize,
    checks: Vec<(String, VerificationReport)>,
}

pub fn run(mut cfg: RunConfig, checks: &[String], out: &Path) -> Result<(), CliError> {
    let names = if checks.is_empty() { cfg.verify.checks.clone() } else { checks.to_vec() };
    let requests = names.iter().map(|s| CheckRequest::parse(s)).collect::<Result<Vec<_>, _>>()?;
    if requests.is_empty() {
        return Err(CliError::Config("no checks requested".into()));
    }
    let body = match cfg.body {
        Some(_) => Some(cfg.resolve_body()?),
        None => None,
    };
    let kind = body.as_ref().map(|b| cfg.barrier_kind(b)).transpose()?;
    cfg.verify.checks = names;
    let seed = cfg.verify.seed;
    let ctx = Context { body, kind, cfg, seed };

    let mut results = Vec::new();
    for (k, req) in expand(requests, &ctx).iter().enumerate() {
        let report = run_one(&ctx, req, k as u64)?;
        println!(
            "{}: {} ({} instances, worst violation {:.3e}, tolerance {:.1e})",
            req.label(),
            if report.pass { "PASS" } else { "FAIL" },
            report.instances_tested,
            report.worst_violation,
            report.tolerance
        );
        results.push((req.label(), report));
    }
    let failed = results.iter().filter(|(_, r)| !r.pass).count();
    let summary = VerifyOutput {
        config: &ctx.cfg,
        passed: results.len() - failed,
        failed,
        checks: results,
    };
    std::fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(out.join(&ctx.cfg.output.verify_report), json)?;
    println!("{} passed, {failed} failed", summary.passed);
    if failed > 0 {
        Err(CliError::Verification(format!("{failed} checks failed")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_arguments() {
        let r = CheckRequest::parse("det_ratio d=6 eps=0.01").unwrap();
        assert_eq!(r.name, "det_ratio");
        assert_eq!(r.args["d"], 6.0);
        assert_eq!(r.label(), "det_ratio d=6 eps=0.01");
    }

    #[test]
    fn unknown_check_lists_known_ones() {
        let Err(CliError::Config(msg)) = CheckRequest::parse("bogus") else {
            panic!("expected a config error");
        };
        assert!(msg.contains("nu_symmetry") && msg.contains("lewis_stability"));
    }

    #[test]
    fn malformed_arguments_are_rejected() {
        assert!(CheckRequest::parse("det_ratio d").is_err());
        assert!(CheckRequest::parse("det_ratio d=six").is_err());
        let r = CheckRequest::parse("det_ratio d=2.5").unwrap();
        assert!(r.count("d", 1).is_err());
    }
}
