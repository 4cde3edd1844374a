//! Numerical audits of the structural properties the walk relies on.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::instances::random_unit_vector;
use crate::barriers::{exact_hessian, hessian_log_polytope, lee_sidford_weights, regularize, BarrierKind, LewisOptions};
use crate::error::{Error, Result};
use crate::geometry::{Body, Polytope};
use crate::linalg::{quad_norm, SymMatrix};
use crate::seeding::{rng_from_seed, split_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDetail {
    pub label: String,
    pub violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub instances_tested: u64,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: Vec<InstanceDetail>,
    /// Measured quantities that are reported but not asserted.
    pub metrics: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            instances_tested: 0,
            worst_violation: 0.0,
            tolerance,
            pass: true,
            details: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, label: impl Into<String>, violation: f64, note: Option<String>) {
        self.instances_tested += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        self.worst_violation = self.worst_violation.max(v);
        self.pass = self.worst_violation <= self.tolerance;
        self.details.push(InstanceDetail {
            label: label.into(),
            violation: v,
            note,
        });
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Folds another report for the same check into this one.
    pub fn absorb(&mut self, other: VerificationReport) {
        self.instances_tested += other.instances_tested;
        self.worst_violation = self.worst_violation.max(other.worst_violation);
        self.pass = self.worst_violation <= self.tolerance;
        self.details.extend(other.details);
        for (k, v) in other.metrics {
            let e = self.metrics.entry(k).or_insert(v);
            *e = e.max(v);
        }
    }

    pub fn violations(&self) -> usize {
        self.details.iter().filter(|d| d.violation > self.tolerance).count()
    }
}

/// Symmetry parameter `ν̄` of the log barriers: the number of constraints
/// or the matrix size.
pub fn symmetry_parameter(kind: BarrierKind, body: &Body) -> Result<f64> {
    match kind {
        BarrierKind::LogPolytope | BarrierKind::LogSpectrahedron if kind.supports(body) => Ok(body.size() as f64),
        _ => Err(Error::Unsupported(format!("no symmetry parameter for {} on this body", kind.name()))),
    }
}

/// Checks `E_x(1) ⊆ K ∩ (2x − K) ⊆ E_x(√ν̄)` along `trials` random directions
/// per point. Directions are scaled to unit `H(x)`-norm, so the inner
/// inclusion needs the chord to reach `±1` and the outer inclusion needs the
/// symmetrized chord to end within `√ν̄`.
pub fn verify_nu_symmetry(
    body: &Body,
    kind: BarrierKind,
    points: &[DVector<f64>],
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let nu_bar = symmetry_parameter(kind, body)?;
    let root = nu_bar.sqrt();
    let mut report = VerificationReport::new("nu_symmetry", 1e-9);
    let opts = LewisOptions::default();
    for (k, x) in points.iter().enumerate() {
        let h = exact_hessian(kind, body, x, &opts)?;
        let f = h.factorize()?;
        let mut rng = rng_from_seed(split_seed(seed, k as u64));
        let (mut inner, mut outer, mut reach) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..trials {
            let g = random_unit_vector(x.len(), &mut rng);
            let u = f.apply_inv_sqrt(&g)?;
            let (lo, hi) = body.chord(x, &u)?;
            inner = inner.max(1.0 - hi).max(1.0 + lo);
            let hit = hi.min(-lo);
            reach = reach.max(hit);
            outer = outer.max(hit / root - 1.0);
        }
        let violation = inner.max(outer).max(0.0);
        report.record(
            format!("point {k}"),
            violation,
            Some(format!("inner gap {inner:.3e}, outer ratio {:.6}", reach / root)),
        );
    }
    report.metric("nu_bar", nu_bar);
    Ok(report)
}

/// `F(y) = log det(H(y) + I)`.
pub fn logdet_plus_identity(kind: BarrierKind, body: &Body, y: &DVector<f64>, opts: &LewisOptions) -> Result<f64> {
    exact_hessian(kind, body, y, opts)?.shifted(1.0).factorize()?.logdet()
}

/// Default step for the second differences, as a fraction of the distance
/// to the boundary along the direction.
pub const CONVEXITY_STEP_FRACTION: f64 = 1e-3;
pub const CONVEXITY_TOLERANCE: f64 = 1e-5;

/// Central second differences of `F` along each direction must be at least
/// `−1e−5 · (|F(x)| + 1)`.
pub fn verify_logdet_convexity(
    body: &Body,
    kind: BarrierKind,
    x: &DVector<f64>,
    directions: &[DVector<f64>],
    step_fraction: f64,
    opts: &LewisOptions,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("logdet_convexity", CONVEXITY_TOLERANCE);
    let fx = logdet_plus_identity(kind, body, x, opts)?;
    let scale = fx.abs() + 1.0;
    let mut min_second = f64::INFINITY;
    for (k, v) in directions.iter().enumerate() {
        let v = v.normalize();
        let (lo, hi) = body.chord(x, &v)?;
        let dist = hi.min(-lo);
        let h = step_fraction * dist.min(body.radius());
        let plus = logdet_plus_identity(kind, body, &(x + &v * h), opts)?;
        let minus = logdet_plus_identity(kind, body, &(x - &v * h), opts)?;
        let second = (plus - 2.0 * fx + minus) / (h * h);
        min_second = min_second.min(second / scale);
        report.record(format!("direction {k}"), (-second / scale).max(0.0), None);
    }
    report.metric("min_relative_second_difference", min_second);
    Ok(report)
}

/// Closed-form `∇ log det H(x) = 2 Σ σ_i a_i / s_i` for the polytope log barrier.
pub fn logdet_gradient(p: &Polytope, x: &DVector<f64>) -> Result<DVector<f64>> {
    let s = p.check_interior(x)?;
    let h = hessian_log_polytope(p, x)?;
    let hf = h.factorize()?;
    let mut g = DVector::zeros(p.dim());
    for (i, row) in p.a().row_iter().enumerate() {
        let a = row.transpose();
        let sigma = a.dot(&hf.apply_inverse(&a)?) / (s[i] * s[i]);
        g += a * (2.0 * sigma / s[i]);
    }
    Ok(g)
}

/// Compares the closed-form gradient of `log det H` with central finite
/// differences and reports `‖H^{-1/2} ∇ log det H‖² / d`.
pub fn verify_local_norm(p: &Polytope, x: &DVector<f64>) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("local_norm", 1e-5);
    let g = logdet_gradient(p, x)?;
    let d = p.dim();
    let logdet = |y: &DVector<f64>| hessian_log_polytope(p, y)?.factorize()?.logdet();
    let s_min = p.slack(x)?.min();
    let mut fd = DVector::zeros(d);
    for k in 0..d {
        let mut e = DVector::zeros(d);
        e[k] = 1.0;
        let (lo, hi) = p.chord(x, &e)?;
        let h = 1e-5 * hi.min(-lo).min(p.radius());
        fd[k] = (logdet(&(x + &e * h))? - logdet(&(x - &e * h))?) / (2.0 * h);
    }
    let scale = g.norm().max(1.0 / s_min);
    report.record("gradient", (&fd - &g).norm() / scale, None);
    let h = hessian_log_polytope(p, x)?;
    let local = quad_norm(&h.factorize()?.inverse()?, &g)?;
    report.metric("local_norm_sq", local);
    report.metric("local_norm_sq_over_d", local / d as f64);
    report.metric("constraints", p.num_constraints() as f64);
    Ok(report)
}

fn random_spd(d: usize, rng: &mut impl Rng) -> SymMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymMatrix::symmetrized(&g * g.transpose() + DMatrix::identity(d, d) * 0.1)
}

/// `Φ^{1/2} (I + E) Φ^{1/2}` with `E = Q diag(e) Q^T`.
fn perturb(phi: &SymMatrix, q: &DMatrix<f64>, e: &DVector<f64>) -> Result<SymMatrix> {
    let f = phi.factorize()?;
    let root = f.spectral_function(f64::sqrt);
    let inner = q * DMatrix::from_diagonal(&e.add_scalar(1.0)) * q.transpose();
    Ok(SymMatrix::symmetrized(&root * inner * &root))
}

fn logdet(m: &SymMatrix) -> Result<f64> {
    m.factorize()?.logdet()
}

/// Draws `Φ(x), Φ(z)` and `(1±ε)`-sandwiched `Φ̃, Φ̂`, and checks that
/// `(det Φ̃/det Φ̂)/(det Φ(x)/det Φ(z))` lies in `[1 − 10εd, 1 + 10εd]`.
/// The first two trials are the unperturbed and the extreme cases.
pub fn verify_det_ratio_lemma(trials: usize, d: usize, eps: f64, seed: u64) -> Result<VerificationReport> {
    let bound = 10.0 * eps * d as f64;
    if !(eps > 0.0 && bound <= 1.0 + 1e-12 && d >= 1) {
        return Err(Error::InvalidInput(format!("need eps*d <= 0.1, got eps = {eps}, d = {d}")));
    }
    let mut report = VerificationReport::new("det_ratio", 0.0);
    let mut rng = rng_from_seed(seed);
    let mut worst_ratio: f64 = 1.0;
    for t in 0..trials {
        let phi_x = random_spd(d, &mut rng);
        let phi_z = random_spd(d, &mut rng);
        let qx = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
        let qz = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
        let (ex, ez) = match t {
            0 => (DVector::zeros(d), DVector::zeros(d)),
            1 => (DVector::from_element(d, eps), DVector::from_element(d, -eps)),
            _ => (
                DVector::from_fn(d, |_, _| rng.random_range(-eps..=eps)),
                DVector::from_fn(d, |_, _| rng.random_range(-eps..=eps)),
            ),
        };
        let tilde = perturb(&phi_x, &qx, &ex)?;
        let hat = perturb(&phi_z, &qz, &ez)?;
        let log_ratio = logdet(&tilde)? - logdet(&hat)? - logdet(&phi_x)? + logdet(&phi_z)?;
        let ratio = log_ratio.exp();
        worst_ratio = if (ratio - 1.0).abs() > (worst_ratio - 1.0).abs() { ratio } else { worst_ratio };
        let violation = (ratio - (1.0 + bound)).max((1.0 - bound) - ratio).max(0.0);
        report.record(format!("trial {t}"), violation, None);
    }
    report.metric("bound", bound);
    report.metric("most_extreme_ratio", worst_ratio);
    Ok(report)
}

/// Empirical `Pr[‖ξ‖ ≥ t]` for `ξ ~ N(0, I_d)` against `exp(−(t² − d)/8)`,
/// allowing three binomial standard errors. Skipped unless `t > √(2d)`.
pub fn verify_gaussian_tail(d: usize, t: f64, draws: u64, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("gaussian_tail", 0.0);
    let bound = (-(t * t - d as f64) / 8.0).exp();
    report.metric("bound", bound);
    if !(t > (2.0 * d as f64).sqrt()) {
        report.details.push(InstanceDetail {
            label: format!("d={d} t={t}"),
            violation: 0.0,
            note: Some("skipped: requires t > sqrt(2d)".into()),
        });
        return Ok(report);
    }
    if draws == 0 {
        return Err(Error::InvalidInput("gaussian tail check needs draws > 0".into()));
    }
    let mut rng = rng_from_seed(seed);
    let t2 = t * t;
    let mut hits = 0u64;
    for _ in 0..draws {
        let norm2: f64 = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
        if norm2 >= t2 {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    report.metric("empirical", p);
    report.metric("standard_error", se);
    report.record(format!("d={d} t={t}"), (p - bound - 3.0 * se).max(0.0), None);
    Ok(report)
}

/// Checks `σ(u, v) ≥ ‖u − v‖_{Φ(u)} / √(2ν̄α⁻¹ + η⁻¹R²)` for the log-barrier
/// metric on random pairs.
pub fn verify_cross_ratio(
    p: &Polytope,
    points: &[DVector<f64>],
    pairs_per_point: usize,
    alpha: f64,
    eta_inv: f64,
    seed: u64,
) -> Result<VerificationReport> {
    let nu_bar = p.num_constraints() as f64;
    let denom = (2.0 * nu_bar / alpha + eta_inv * p.radius().powi(2)).sqrt();
    let mut report = VerificationReport::new("cross_ratio", 1e-9);
    let mut min_slack = f64::INFINITY;
    for (k, u) in points.iter().enumerate() {
        let phi = regularize(&hessian_log_polytope(p, u)?, alpha, eta_inv)?;
        let mut rng = rng_from_seed(split_seed(seed, k as u64));
        let mut worst: f64 = 0.0;
        for _ in 0..pairs_per_point {
            let dir = random_unit_vector(p.dim(), &mut rng);
            let (_, hi) = p.chord(u, &dir)?;
            let v = u + dir * (hi * rng.random_range(0.001..0.999));
            let sigma = p.cross_ratio(u, &v)?;
            let lower = quad_norm(phi.phi(), &(u - &v))?.sqrt() / denom;
            min_slack = min_slack.min(sigma / lower);
            worst = worst.max(1.0 - sigma / lower);
        }
        report.record(format!("point {k}"), worst.max(0.0), None);
    }
    report.metric("min_sigma_over_bound", min_slack);
    Ok(report)
}

/// Measures `‖w(x)^{-1}(w(x) − w(z))‖_∞` for steps of local length `r`
/// (reported, not asserted).
pub fn lewis_stability(
    p: &Polytope,
    lewis_p: f64,
    points: &[DVector<f64>],
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let opts = LewisOptions {
        tol: 1e-12,
        max_iter: 5000,
        ..LewisOptions::default()
    };
    let mut report = VerificationReport::new("lewis_stability", f64::INFINITY);
    let mut worst: f64 = 0.0;
    for (k, x) in points.iter().enumerate() {
        let (_, wx) = lee_sidford_weights(p, x, lewis_p, &opts)?;
        let h = exact_hessian(BarrierKind::LeeSidford { p: lewis_p }, &p.clone().into(), x, &opts)?;
        let f = h.factorize()?;
        let mut rng = rng_from_seed(split_seed(seed, k as u64));
        let mut local: f64 = 0.0;
        for _ in 0..trials {
            let g = random_unit_vector(p.dim(), &mut rng);
            let z = x + f.apply_inv_sqrt(&g)? * r;
            if !p.contains(&z, true) {
                continue;
            }
            let (_, wz) = lee_sidford_weights(p, &z, lewis_p, &opts)?;
            let ratio = wx.iter().zip(wz.iter()).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
            local = local.max(ratio);
        }
        worst = worst.max(local);
        report.record(format!("point {k}"), 0.0, Some(format!("max weight change {local:.4e}")));
    }
    report.metric("step_local_norm", r);
    report.metric("max_relative_weight_change", worst);
    report.metric("ratio_per_unit_step", worst / r);
    Ok(report)
}
