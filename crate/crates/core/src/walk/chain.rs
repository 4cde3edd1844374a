//! The lazy soft-threshold Dikin chain.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::params::{HessianMode, WalkParams};
use super::target::Target;
use crate::barriers::{exact_hessian, incompatible, regularize, BarrierKind, RegularizedMetric};
use crate::error::{Error, Result};
use crate::geometry::Body;
use crate::linalg::{quad_norm, SymMatrix};
use crate::rla::{sketched_sdp_hessian, subsample_hessian, subsample_lee_sidford_hessian};
use crate::seeding::rng_from_seed;

/// Wall-clock nanoseconds per phase. Integer sums keep merging exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub hessian_ns: u64,
    pub factorization_ns: u64,
    pub filter_ns: u64,
    pub total_ns: u64,
}

impl PhaseTimings {
    fn merge(&mut self, other: &Self) {
        self.hessian_ns += other.hessian_ns;
        self.factorization_ns += other.factorization_ns;
        self.filter_ns += other.filter_ns;
        self.total_ns += other.total_ns;
    }
}

fn elapsed_ns(t: Instant) -> u64 {
    t.elapsed().as_nanos() as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub steps: u64,
    pub accepted: u64,
    pub rejected_outside: u64,
    pub rejected_filter: u64,
    pub lazy_hold: u64,
}

impl Counters {
    fn merge(&mut self, other: &Self) {
        self.steps += other.steps;
        self.accepted += other.accepted;
        self.rejected_outside += other.rejected_outside;
        self.rejected_filter += other.rejected_filter;
        self.lazy_hold += other.lazy_hold;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    x: DVector<f64>,
    fx: Option<f64>,
    step_index: u64,
    rng: ChaCha8Rng,
    counters: Counters,
    timings: PhaseTimings,
}

impl ChainState {
    pub fn new(x0: DVector<f64>, seed: u64) -> Self {
        Self {
            x: x0,
            fx: None,
            step_index: 0,
            rng: rng_from_seed(seed),
            counters: Counters::default(),
            timings: PhaseTimings::default(),
        }
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn timings(&self) -> &PhaseTimings {
        &self.timings
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    RejectedOutside,
    RejectedFilter,
    LazyHold,
}

fn approximate_hessian(kind: BarrierKind, body: &Body, x: &DVector<f64>, params: &WalkParams, seed: u64) -> Result<SymMatrix> {
    let spec = params.sketch_for(seed);
    match (kind, body) {
        (BarrierKind::LogPolytope, Body::Polytope(p)) => subsample_hessian(p, x, &spec),
        (BarrierKind::LeeSidford { p: lp }, Body::Polytope(p)) => {
            subsample_lee_sidford_hessian(p, x, lp, &params.lewis, &spec)
        }
        (BarrierKind::LogSpectrahedron, Body::Spectrahedron(s)) => sketched_sdp_hessian(s, x, &spec),
        _ => Err(incompatible(kind, body)),
    }
}

fn metric_timed(
    kind: BarrierKind,
    body: &Body,
    x: &DVector<f64>,
    params: &WalkParams,
    seed: u64,
    timings: &mut PhaseTimings,
) -> Result<RegularizedMetric> {
    let t = Instant::now();
    let h = match params.hessian_mode {
        HessianMode::Exact => exact_hessian(kind, body, x, &params.lewis)?,
        HessianMode::Approx => approximate_hessian(kind, body, x, params, seed)?,
    };
    timings.hessian_ns += elapsed_ns(t);
    let t = Instant::now();
    let eps = match params.hessian_mode {
        HessianMode::Exact => 0.0,
        HessianMode::Approx => params.eps_h,
    };
    let metric = regularize(&h, params.alpha, params.eta_inv)?.with_provenance(eps, seed);
    timings.factorization_ns += elapsed_ns(t);
    Ok(metric)
}

/// `Φ̃(x) = α⁻¹H̃(x) + η⁻¹I` with `H̃` drawn afresh from `seed` in approximate mode.
pub fn evaluate_metric(
    kind: BarrierKind,
    body: &Body,
    x: &DVector<f64>,
    params: &WalkParams,
    seed: u64,
) -> Result<RegularizedMetric> {
    metric_timed(kind, body, x, params, seed, &mut PhaseTimings::default())
}

/// `z = x + Φ^{-1/2} ξ` for a given `ξ`.
pub fn propose_with(x: &DVector<f64>, metric: &RegularizedMetric, xi: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(x + metric.apply_inv_sqrt(xi)?)
}

pub fn propose(x: &DVector<f64>, metric: &RegularizedMetric, rng: &mut impl Rng) -> Result<DVector<f64>> {
    let xi = DVector::from_fn(x.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    propose_with(x, metric, &xi)
}

/// `log τ` from precomputed potential values.
pub fn log_ratio_from_values(
    x: &DVector<f64>,
    z: &DVector<f64>,
    metric_x: &RegularizedMetric,
    metric_z: &RegularizedMetric,
    fx: f64,
    fz: f64,
) -> Result<f64> {
    let diff = x - z;
    let norm_z = quad_norm(metric_z.phi(), &diff)?;
    let norm_x = quad_norm(metric_x.phi(), &diff)?;
    Ok(-fz + fx + 0.5 * (metric_z.logdet() - metric_x.logdet()) - 0.5 * (norm_z - norm_x))
}

pub fn acceptance_log_ratio(
    x: &DVector<f64>,
    z: &DVector<f64>,
    metric_x: &RegularizedMetric,
    metric_z: &RegularizedMetric,
    target: &Target,
) -> Result<f64> {
    log_ratio_from_values(x, z, metric_x, metric_z, target.eval(x)?, target.eval(z)?)
}

/// Probability of moving to `z`, including the lazy hold.
pub fn acceptance_probability(log_tau: f64, laziness: f64) -> f64 {
    laziness * log_tau.exp().min(1.0)
}

/// One lazy step. With probability `1 − laziness` the chain holds without
/// evaluating anything; otherwise it draws fresh metrics at `x` and `z` and
/// accepts with probability `min{1, τ}`.
pub fn step(
    state: &mut ChainState,
    kind: BarrierKind,
    body: &Body,
    target: &Target,
    params: &WalkParams,
) -> Result<StepOutcome> {
    state.step_index += 1;
    state.counters.steps += 1;
    if state.rng.random::<f64>() >= params.laziness {
        state.counters.lazy_hold += 1;
        return Ok(StepOutcome::LazyHold);
    }

    let seed_x = state.rng.random::<u64>();
    let metric_x = metric_timed(kind, body, &state.x, params, seed_x, &mut state.timings)?;
    let z = propose(&state.x, &metric_x, &mut state.rng)?;
    if !body.contains(&z, true) {
        state.counters.rejected_outside += 1;
        return Ok(StepOutcome::RejectedOutside);
    }

    let seed_z = state.rng.random::<u64>();
    let metric_z = metric_timed(kind, body, &z, params, seed_z, &mut state.timings)?;
    let t = Instant::now();
    let fx = match state.fx {
        Some(v) => v,
        None => target.eval(&state.x)?,
    };
    state.fx = Some(fx);
    let fz = target.eval(&z)?;
    let log_tau = log_ratio_from_values(&state.x, &z, &metric_x, &metric_z, fx, fz)?;
    let u: f64 = state.rng.random();
    state.timings.filter_ns += elapsed_ns(t);

    if u.ln() < log_tau {
        state.x = z;
        state.fx = Some(fz);
        state.counters.accepted += 1;
        Ok(StepOutcome::Accepted)
    } else {
        state.counters.rejected_filter += 1;
        Ok(StepOutcome::RejectedFilter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub seed: u64,
    pub kept: u64,
    pub final_point: Vec<f64>,
}

/// Counters, timings, and parameter echo for one or more chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub barrier: BarrierKind,
    pub params: WalkParams,
    pub counters: Counters,
    pub timings: PhaseTimings,
    pub chains: Vec<ChainSummary>,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Combines reports of chains run with the same barrier and parameters
    /// (seeds aside). The result does not depend on merge order.
    pub fn merge(&mut self, other: &RunReport) -> Result<()> {
        let same = |a: &WalkParams, b: &WalkParams| WalkParams { seed: 0, ..a.clone() } == WalkParams { seed: 0, ..b.clone() };
        if self.barrier != other.barrier || !same(&self.params, &other.params) {
            return Err(Error::InvalidInput("cannot merge reports from differently configured runs".into()));
        }
        self.params.seed = self.params.seed.min(other.params.seed);
        self.counters.merge(&other.counters);
        self.timings.merge(&other.timings);
        self.chains.extend(other.chains.iter().cloned());
        self.chains.sort_by_key(|c| c.seed);
        self.warnings.extend(other.warnings.iter().cloned());
        self.warnings.sort();
        self.warnings.dedup();
        Ok(())
    }

    pub fn final_point(&self) -> Option<&[f64]> {
        self.chains.first().map(|c| c.final_point.as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Kept points, one per row; the first row is `x0`.
    pub samples: DMatrix<f64>,
    pub report: RunReport,
}

impl ChainOutput {
    pub fn final_point(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.report.chains[0].final_point)
    }
}

/// Runs `params.steps` steps from `x0`, keeping `x0` and every `params.thin`-th point.
pub fn run_chain(
    kind: BarrierKind,
    body: &Body,
    target: &Target,
    params: &WalkParams,
    x0: &DVector<f64>,
) -> Result<ChainOutput> {
    kind.validate()?;
    if !kind.supports(body) {
        return Err(incompatible(kind, body));
    }
    if x0.len() != body.dim() {
        return Err(Error::Dimension {
            expected: body.dim(),
            actual: x0.len(),
        });
    }
    body.check_interior(x0)?;
    if !(params.laziness > 0.0 && params.laziness <= 1.0) {
        return Err(Error::InvalidInput(format!("laziness must lie in (0, 1], got {}", params.laziness)));
    }

    let start = Instant::now();
    let thin = params.thin.max(1);
    let d = body.dim();
    let mut kept: Vec<f64> = x0.iter().copied().collect();
    let mut state = ChainState::new(x0.clone(), params.seed);
    let mut max_norm = x0.norm();
    for _ in 0..params.steps {
        step(&mut state, kind, body, target, params)?;
        if !body.contains(&state.x, true) {
            return Err(Error::InteriorViolation {
                step: state.step_index,
                detail: format!("state {:?} is not strictly interior", state.x.as_slice()),
            });
        }
        if state.step_index.is_multiple_of(thin) {
            kept.extend(state.x.iter());
        }
        max_norm = max_norm.max(state.x.norm());
    }
    state.timings.total_ns = elapsed_ns(start);

    let mut warnings = params.warnings.clone();
    if max_norm > body.radius() {
        warnings.push(format!(
            "visited a point with norm {max_norm} outside the stated radius {}",
            body.radius()
        ));
    }

    let rows = kept.len() / d;
    let samples = DMatrix::from_row_slice(rows, d, &kept);
    let report = RunReport {
        barrier: kind,
        params: params.clone(),
        counters: state.counters,
        timings: state.timings,
        chains: vec![ChainSummary {
            seed: params.seed,
            kept: rows as u64,
            final_point: state.x.iter().copied().collect(),
        }],
        warnings,
    };
    Ok(ChainOutput { samples, report })
}
