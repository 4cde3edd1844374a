//! Hit-and-run baseline.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::target::Target;
use crate::error::{Error, Result};
use crate::geometry::Body;
use crate::seeding::rng_from_seed;

const MAX_CHORD_PROPOSALS: u64 = 1_000_000;
const ENVELOPE_MARGIN: f64 = 1e-9;

fn golden_section_min(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (f(c)?, f(e)?);
    for _ in 0..80 {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e)?;
        }
    }
    Ok(fc.min(fe))
}

/// One hit-and-run move along a given direction.
pub fn hit_and_run_along(
    body: &Body,
    target: &Target,
    x: &DVector<f64>,
    dir: &DVector<f64>,
    rng: &mut impl Rng,
) -> Result<DVector<f64>> {
    let (t_minus, t_plus) = body.chord(x, dir)?;
    if !(t_minus.is_finite() && t_plus.is_finite()) {
        return Err(Error::Unsupported("hit-and-run needs a bounded chord".into()));
    }
    let point = |t: f64| x + dir * t;
    if target.is_uniform() {
        loop {
            let y = point(rng.random_range(t_minus..t_plus));
            if body.contains(&y, true) {
                return Ok(y);
            }
        }
    }
    let f = |t: f64| target.eval(&point(t));
    let floor = golden_section_min(f, t_minus, t_plus)? - ENVELOPE_MARGIN;
    for _ in 0..MAX_CHORD_PROPOSALS {
        let t = rng.random_range(t_minus..t_plus);
        let y = point(t);
        if !body.contains(&y, true) {
            continue;
        }
        let fy = target.eval(&y)?;
        if fy < floor {
            return Err(Error::Oracle(format!("potential {fy} below its chord minimum {floor}")));
        }
        if rng.random::<f64>() < (floor - fy).exp() {
            return Ok(y);
        }
    }
    Err(Error::OracleInfeasible {
        acceptance_rate: 0.0,
        trials: MAX_CHORD_PROPOSALS,
    })
}

/// One move along a uniformly random direction.
pub fn hit_and_run_step(body: &Body, target: &Target, x: &DVector<f64>, rng: &mut impl Rng) -> Result<DVector<f64>> {
    body.check_interior(x)?;
    let dir = loop {
        let g = DVector::from_fn(x.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 {
            break g / norm;
        }
    };
    hit_and_run_along(body, target, x, &dir, rng)
}

/// `steps` moves from `x0`, keeping every `thin`-th point (without `x0`).
pub fn run_hit_and_run(
    body: &Body,
    target: &Target,
    x0: &DVector<f64>,
    steps: u64,
    thin: u64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let thin = thin.max(1);
    let d = body.dim();
    let mut rng = rng_from_seed(seed);
    let mut x = x0.clone();
    let mut kept = Vec::with_capacity((steps / thin) as usize * d);
    for k in 1..=steps {
        x = hit_and_run_step(body, target, &x, &mut rng)?;
        if k % thin == 0 {
            kept.extend(x.iter());
        }
    }
    Ok(DMatrix::from_row_slice(kept.len() / d, d, &kept))
}
