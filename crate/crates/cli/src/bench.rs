use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use dikin_core::barriers::BarrierKind;
use dikin_core::diagnostics::{random_polytope, random_spectrahedron};
use dikin_core::geometry::Body;
use dikin_core::seeding::split_seed;
use dikin_core::walk::{default_params, evaluate_metric, HessianMode, Target};
use nalgebra::DVector;

use crate::config::{BarrierName, BenchBody, BenchSpec, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub body: &'static str,
    pub barrier: &'static str,
    pub n: usize,
    pub d: usize,
    pub repetitions: usize,
    pub exact_median_s: f64,
    pub approx_median_s: f64,
}

pub fn validate(spec: &BenchSpec) -> Result<(), CliError> {
    if spec.repetitions == 0 {
        return Err(CliError::Config("bench.repetitions must be at least 1".into()));
    }
    if spec.cells.is_empty() {
        return Err(CliError::Config("bench.cells is empty".into()));
    }
    if !(spec.eps > 0.0 && spec.eps < 1.0) {
        return Err(CliError::Config(format!("bench.eps must lie in (0, 1), got {}", spec.eps)));
    }
    for c in &spec.cells {
        if c.d == 0 || c.n < 2 * c.d {
            return Err(CliError::Config(format!("bench cell n={} d={} needs n >= 2d >= 2", c.n, c.d)));
        }
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn kind_for(spec: &BenchSpec, body: &Body, c_p: f64) -> Result<BarrierKind, CliError> {
    let kind = match (spec.barrier, spec.body) {
        (None | Some(BarrierName::LogPolytope), BenchBody::Polytope) => BarrierKind::LogPolytope,
        (Some(BarrierName::LeeSidford), BenchBody::Polytope) => BarrierKind::lee_sidford_default(body.size(), c_p),
        (None | Some(BarrierName::LogSpectrahedron), BenchBody::Spectrahedron) => BarrierKind::LogSpectrahedron,
        (Some(b), _) => return Err(CliError::Config(format!("barrier {b:?} does not apply to bench body {:?}", spec.body))),
    };
    Ok(kind)
}

pub fn measure(spec: &BenchSpec, c_p: f64) -> Result<Vec<BenchRow>, CliError> {
    validate(spec)?;
    let mut rows = Vec::new();
    for (k, cell) in spec.cells.iter().enumerate() {
        let seed = split_seed(spec.seed, k as u64);
        let body: Body = match spec.body {
            BenchBody::Polytope => random_polytope(cell.d, cell.n, seed)?.into(),
            BenchBody::Spectrahedron => random_spectrahedron(cell.d, cell.n, seed)?.into(),
        };
        let kind = kind_for(spec, &body, c_p)?;
        let x = DVector::zeros(cell.d);
        let params = default_params(kind, &body, &Target::uniform()).with_eps_h(spec.eps, cell.d);
        let exact = params.clone().with_mode(HessianMode::Exact);
        let approx = params.with_mode(HessianMode::Approx);
        let (mut te, mut ta) = (Vec::new(), Vec::new());
        for r in 0..spec.repetitions {
            let t = Instant::now();
            evaluate_metric(kind, &body, &x, &exact, 0)?;
            te.push(t.elapsed().as_secs_f64());
            let t = Instant::now();
            evaluate_metric(kind, &body, &x, &approx, split_seed(seed, r as u64))?;
            ta.push(t.elapsed().as_secs_f64());
        }
        rows.push(BenchRow {
            body: match spec.body {
                BenchBody::Polytope => "polytope",
                BenchBody::Spectrahedron => "spectrahedron",
            },
            barrier: kind.name(),
            n: cell.n,
            d: cell.d,
            repetitions: spec.repetitions,
            exact_median_s: median(te),
            approx_median_s: median(ta),
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("body,barrier,n,d,repetitions,exact_median_s,approx_median_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{:.6e}",
            r.body, r.barrier, r.n, r.d, r.repetitions, r.exact_median_s, r.approx_median_s
        );
    }
    out
}

pub fn run(cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    let rows = measure(&cfg.bench, cfg.walk.c_p)?;
    std::fs::create_dir_all(out)?;
    let csv = to_csv(&rows);
    std::fs::write(out.join(&cfg.output.bench), &csv)?;
    print!("{csv}");
    Ok(())
}
