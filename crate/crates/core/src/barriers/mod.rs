//! Barrier Hessians and the soft-threshold metric `Φ = α⁻¹H + η⁻¹I`.

mod lewis;

pub use lewis::{lewis_residual, lewis_weights, leverage_scores, reweight_rows, LewisOptions};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Body, Polytope, Spectrahedron};
use crate::linalg::{SpectralFactorization, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierKind {
    LogPolytope,
    LeeSidford { p: f64 },
    LogSpectrahedron,
}

impl BarrierKind {
    /// Lee-Sidford with `p = max(2, ⌈c_p·ln n⌉)`.
    pub fn lee_sidford_default(n: usize, c_p: f64) -> Self {
        BarrierKind::LeeSidford {
            p: default_lewis_p(n, c_p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BarrierKind::LeeSidford { p } if !(p >= 2.0 && p.is_finite()) => {
                Err(Error::InvalidInput(format!("Lee-Sidford barrier needs p >= 2, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn supports(&self, body: &Body) -> bool {
        matches!(
            (self, body),
            (BarrierKind::LogPolytope | BarrierKind::LeeSidford { .. }, Body::Polytope(_))
                | (BarrierKind::LogSpectrahedron, Body::Spectrahedron(_))
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            BarrierKind::LogPolytope => "log_polytope",
            BarrierKind::LeeSidford { .. } => "lee_sidford",
            BarrierKind::LogSpectrahedron => "log_spectrahedron",
        }
    }
}

pub fn default_lewis_p(n: usize, c_p: f64) -> f64 {
    (c_p * (n as f64).ln()).ceil().max(2.0)
}

/// Self-concordance parameter ν. The Lee-Sidford constant `c_ls` is not
/// pinned down by the theory and is left to the caller.
pub fn barrier_nu(kind: BarrierKind, n: usize, d: usize, c_ls: f64) -> f64 {
    match kind {
        BarrierKind::LogPolytope | BarrierKind::LogSpectrahedron => n as f64,
        BarrierKind::LeeSidford { .. } => c_ls * d as f64 * (n as f64).ln().powi(5),
    }
}

/// `S(x)^{-1} A`, erroring if `x` is not strictly interior.
pub fn scaled_constraints(p: &Polytope, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let s = p.check_interior(x)?;
    let mut b = p.a().clone();
    for (i, mut row) in b.row_iter_mut().enumerate() {
        row /= s[i];
    }
    Ok(b)
}

/// `H(x) = Σ a_i a_i^T / s_i²`.
pub fn hessian_log_polytope(p: &Polytope, x: &DVector<f64>) -> Result<SymMatrix> {
    let b = scaled_constraints(p, x)?;
    Ok(SymMatrix::symmetrized(b.tr_mul(&b)))
}

/// Lewis weights of `S(x)^{-1} A` together with that matrix.
pub fn lee_sidford_weights(
    p: &Polytope,
    x: &DVector<f64>,
    lewis_p: f64,
    opts: &LewisOptions,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let b = scaled_constraints(p, x)?;
    let w = lewis_weights(&b, lewis_p, opts)?;
    Ok((b, w))
}

/// `H(x) = B^T W^{1−2/p} B` with `B = S(x)^{-1} A` and `W` its ℓ_p Lewis weights.
pub fn hessian_lee_sidford(
    p: &Polytope,
    x: &DVector<f64>,
    lewis_p: f64,
    opts: &LewisOptions,
) -> Result<SymMatrix> {
    let (b, w) = lee_sidford_weights(p, x, lewis_p, opts)?;
    let bw = reweight_rows(&b, &w, lewis_p);
    Ok(SymMatrix::symmetrized(bw.tr_mul(&bw)))
}

/// `S(x)^{-1/2}`, erroring if `x` is not strictly interior.
pub fn slack_inv_sqrt(s: &Spectrahedron, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    s.slack_factorization(x)?.inv_sqrt_matrix()
}

/// The matrices `S^{-1/2} A_i S^{-1/2}`, whose Frobenius inner products form `H`.
pub fn whitened_pencil(s: &Spectrahedron, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let w = slack_inv_sqrt(s, x)?;
    Ok(s.mats().iter().map(|a| &w * a.matrix() * &w).collect())
}

/// `H_ij = tr[S^{-1} A_i S^{-1} A_j]`.
pub fn hessian_log_spectrahedron(s: &Spectrahedron, x: &DVector<f64>) -> Result<SymMatrix> {
    let g = whitened_pencil(s, x)?;
    let d = g.len();
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = g[i].dot(&g[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(SymMatrix::symmetrized(h))
}

/// Exact Hessian of `kind` at `x`.
pub fn exact_hessian(kind: BarrierKind, body: &Body, x: &DVector<f64>, opts: &LewisOptions) -> Result<SymMatrix> {
    match (kind, body) {
        (BarrierKind::LogPolytope, Body::Polytope(p)) => hessian_log_polytope(p, x),
        (BarrierKind::LeeSidford { p: lp }, Body::Polytope(p)) => hessian_lee_sidford(p, x, lp, opts),
        (BarrierKind::LogSpectrahedron, Body::Spectrahedron(s)) => hessian_log_spectrahedron(s, x),
        _ => Err(incompatible(kind, body)),
    }
}

pub(crate) fn incompatible(kind: BarrierKind, body: &Body) -> Error {
    let body_name = match body {
        Body::Polytope(_) => "polytope",
        Body::Spectrahedron(_) => "spectrahedron",
    };
    Error::Unsupported(format!("barrier {} cannot be used on a {body_name}", kind.name()))
}

/// An evaluated `Φ = α⁻¹H + η⁻¹I` with its factorization.
#[derive(Debug, Clone)]
pub struct RegularizedMetric {
    phi: SymMatrix,
    factorization: SpectralFactorization,
    logdet_phi: f64,
    alpha: f64,
    eta_inv: f64,
    approx_eps: f64,
    seed_tag: u64,
}

pub fn regularize(h: &SymMatrix, alpha: f64, eta_inv: f64) -> Result<RegularizedMetric> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if !(eta_inv >= 0.0 && eta_inv.is_finite()) {
        return Err(Error::InvalidInput(format!("eta_inv must be non-negative, got {eta_inv}")));
    }
    let phi = h.scaled(1.0 / alpha).shifted(eta_inv);
    let factorization = phi.factorize()?;
    let logdet_phi = factorization.logdet()?;
    Ok(RegularizedMetric {
        phi,
        factorization,
        logdet_phi,
        alpha,
        eta_inv,
        approx_eps: 0.0,
        seed_tag: 0,
    })
}

impl RegularizedMetric {
    /// Records which approximation produced the source Hessian.
    pub fn with_provenance(mut self, approx_eps: f64, seed_tag: u64) -> Self {
        self.approx_eps = approx_eps;
        self.seed_tag = seed_tag;
        self
    }

    pub fn phi(&self) -> &SymMatrix {
        &self.phi
    }

    pub fn factorization(&self) -> &SpectralFactorization {
        &self.factorization
    }

    pub fn logdet(&self) -> f64 {
        self.logdet_phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta_inv(&self) -> f64 {
        self.eta_inv
    }

    pub fn approx_eps(&self) -> f64 {
        self.approx_eps
    }

    pub fn seed_tag(&self) -> u64 {
        self.seed_tag
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn apply_inv_sqrt(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.factorization.apply_inv_sqrt(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::quad_norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn unit_box() -> Polytope {
        Polytope::cube(2, 1.0).unwrap()
    }

    fn random_polytope(rng: &mut impl Rng, n: usize, d: usize) -> Polytope {
        let a = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
        Polytope::new(a, b, 10.0).unwrap()
    }

    fn random_pencil(rng: &mut impl Rng, n: usize, d: usize) -> Spectrahedron {
        let mats = (0..d)
            .map(|_| {
                let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                &g + g.transpose()
            })
            .collect();
        Spectrahedron::new(mats, -DMatrix::identity(n, n), 10.0).unwrap()
    }

    #[test]
    fn box_log_hessian() {
        let h = hessian_log_polytope(&unit_box(), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(h.matrix(), &(DMatrix::identity(2, 2) * 2.0));
        let h = hessian_log_polytope(&unit_box(), &v(&[0.5, 0.0])).unwrap();
        assert!((h.matrix()[(0, 0)] - (1.0 / 0.25 + 1.0 / 2.25)).abs() < 1e-14);
        assert_eq!(h.matrix()[(1, 1)], 2.0);
        assert_eq!(h.matrix()[(0, 1)], 0.0);
        assert!(matches!(
            hessian_log_polytope(&unit_box(), &v(&[1.0, 0.0])),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn log_hessian_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let p = random_polytope(&mut rng, 15, 4);
            let x = DVector::zeros(4);
            let h = hessian_log_polytope(&p, &x).unwrap();
            for j in 0..4 {
                for k in 0..4 {
                    let mut acc = 0.0;
                    for i in 0..15 {
                        let s = p.b()[i] - (0..4).map(|c| p.a()[(i, c)] * x[c]).sum::<f64>();
                        acc += p.a()[(i, j)] * p.a()[(i, k)] / (s * s);
                    }
                    assert!((h.matrix()[(j, k)] - acc).abs() <= 1e-10 * acc.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn lee_sidford_special_cases() {
        let opts = LewisOptions::default();
        for p in [2.0, 4.0, 9.0] {
            let h = hessian_lee_sidford(&unit_box(), &v(&[0.0, 0.0]), p, &opts).unwrap();
            let expected = 0.5f64.powf(1.0 - 2.0 / p) * 2.0;
            assert!((h.matrix() - DMatrix::identity(2, 2) * expected).abs().max() < 1e-12);
        }

        // p = 2 reduces to the log barrier.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let poly = random_polytope(&mut rng, 12, 3);
        let x = v(&[0.05, -0.1, 0.02]);
        let h = hessian_lee_sidford(&poly, &x, 2.0, &opts).unwrap();
        let expected = hessian_log_polytope(&poly, &x).unwrap().into_inner();
        assert!((h.matrix() - &expected).abs().max() <= 1e-10 * expected.abs().max());
    }

    #[test]
    fn lee_sidford_matches_naive_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opts = LewisOptions::default();
        let poly = random_polytope(&mut rng, 20, 3);
        let x = v(&[0.1, 0.0, -0.05]);
        let h = hessian_lee_sidford(&poly, &x, 4.0, &opts).unwrap();

        // Weights from an independent, damped run of the fixed point.
        let s = poly.slack(&x).unwrap();
        let b = DMatrix::from_fn(20, 3, |i, j| poly.a()[(i, j)] / s[i]);
        let slow = LewisOptions { tol: 1e-12, max_iter: 5000, damping: 0.5 };
        let w = lewis_weights(&b, 4.0, &slow).unwrap();
        let mut naive = DMatrix::zeros(3, 3);
        for i in 0..20 {
            let scale = w[i].powf(1.0 - 2.0 / 4.0);
            for j in 0..3 {
                for k in 0..3 {
                    naive[(j, k)] += scale * b[(i, j)] * b[(i, k)];
                }
            }
        }
        assert!((h.matrix() - &naive).abs().max() <= 1e-8 * naive.abs().max());
    }

    #[test]
    fn spectrahedron_scalar_pencil() {
        let s = Spectrahedron::new(vec![DMatrix::identity(3, 3)], DMatrix::zeros(3, 3), 10.0).unwrap();
        let h = hessian_log_spectrahedron(&s, &v(&[2.0])).unwrap();
        assert!((h.matrix()[(0, 0)] - 3.0 / 4.0).abs() < 1e-14);
        assert!(matches!(
            hessian_log_spectrahedron(&s, &v(&[-1.0])),
            Err(Error::NotInterior { constraint: None, .. })
        ));
    }

    #[test]
    fn diagonal_pencil_matches_quadrant_log_barrier() {
        let s = Spectrahedron::new(
            vec![
                DMatrix::from_diagonal(&v(&[1.0, 0.0])),
                DMatrix::from_diagonal(&v(&[0.0, 1.0])),
            ],
            DMatrix::zeros(2, 2),
            10.0,
        )
        .unwrap();
        let quadrant = Polytope::new(-DMatrix::identity(2, 2), DVector::zeros(2), 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = v(&[rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)]);
            let hs = hessian_log_spectrahedron(&s, &x).unwrap();
            let hp = hessian_log_polytope(&quadrant, &x).unwrap();
            let expected = DMatrix::from_diagonal(&v(&[1.0 / (x[0] * x[0]), 1.0 / (x[1] * x[1])]));
            assert!((hs.matrix() - hp.matrix()).abs().max() <= 1e-9 * expected.abs().max());
            assert!((hs.matrix() - &expected).abs().max() <= 1e-9 * expected.abs().max());
        }
    }

    #[test]
    fn spectrahedron_matches_trace_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_pencil(&mut rng, 4, 3);
        let x = v(&[0.05, -0.02, 0.03]);
        let h = hessian_log_spectrahedron(&s, &x).unwrap();
        let sinv = s.slack_matrix(&x).unwrap().matrix().clone().try_inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let tr = (&sinv * s.mats()[i].matrix() * &sinv * s.mats()[j].matrix()).trace();
                assert!((h.matrix()[(i, j)] - tr).abs() <= 1e-9 * tr.abs().max(1.0));
            }
        }
    }

    #[test]
    fn nu_values() {
        assert_eq!(barrier_nu(BarrierKind::LogPolytope, 100, 3, 1.0), 100.0);
        assert_eq!(barrier_nu(BarrierKind::LogSpectrahedron, 50, 3, 1.0), 50.0);
        // n = e makes log n = 1; round n up and compare with the exact formula.
        let nu = barrier_nu(BarrierKind::LeeSidford { p: 2.0 }, 3, 7, 1.0);
        assert!((nu - 7.0 * 3f64.ln().powi(5)).abs() < 1e-12);
        assert_eq!(default_lewis_p(4, 1.0), 2.0);
        assert_eq!(default_lewis_p(1000, 1.0), 7.0);
    }

    #[test]
    fn regularize_cases() {
        let m = regularize(&SymMatrix::identity(2).scaled(2.0), 0.5, 0.0).unwrap();
        assert_eq!(m.phi().matrix(), &(DMatrix::identity(2, 2) * 4.0));
        assert!((m.logdet() - 2.0 * 4f64.ln()).abs() < 1e-14);

        let m = regularize(&SymMatrix::zeros(3), 0.1, 3.0).unwrap();
        assert_eq!(m.phi().matrix(), &(DMatrix::identity(3, 3) * 3.0));

        assert!(matches!(
            regularize(&SymMatrix::zeros(2), 0.5, 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(regularize(&SymMatrix::identity(2), 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn regularized_spectrum_is_shifted(seed in any::<u64>(), alpha in 0.01f64..2.0, eta_inv in 0.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let h = SymMatrix::new(&g * g.transpose() + DMatrix::identity(4, 4) * 0.01).unwrap();
            let m = regularize(&h, alpha, eta_inv).unwrap();
            let hf = h.factorize().unwrap();
            for k in 0..4 {
                let expected = hf.eigenvalues()[k] / alpha + eta_inv;
                prop_assert!((m.factorization().eigenvalues()[k] - expected).abs() <= 1e-10 * expected.max(1.0));
            }
            // Floors: v^T Φ v ≥ η⁻¹ and ≥ α⁻¹ v^T H v on unit vectors.
            let u = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0)).normalize();
            let q = quad_norm(m.phi(), &u).unwrap();
            prop_assert!(q >= eta_inv * (1.0 - 1e-12));
            prop_assert!(q >= quad_norm(&h, &u).unwrap() / alpha * (1.0 - 1e-12));
        }

        #[test]
        fn log_hessian_is_scale_invariant(seed in any::<u64>(), c in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_polytope(&mut rng, 10, 3);
            let scaled = Polytope::new(p.a() * c, p.b() * c, p.radius()).unwrap();
            let x = DVector::zeros(3);
            let h1 = hessian_log_polytope(&p, &x).unwrap();
            let h2 = hessian_log_polytope(&scaled, &x).unwrap();
            prop_assert!((h1.matrix() - h2.matrix()).abs().max() <= 1e-12 * h1.matrix().abs().max());
        }

        #[test]
        fn lewis_weights_sum_to_d(seed in any::<u64>(), p in 2.0f64..12.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = DMatrix::from_fn(30, 4, |_, _| rng.random_range(-1.0..1.0));
            let opts = LewisOptions::default();
            let w = lewis_weights(&b, p, &opts).unwrap();
            prop_assert!((w.sum() - 4.0).abs() <= 4.0 * opts.tol);
            prop_assert!(w.iter().all(|&wi| wi > 0.0));
        }
    }
}
