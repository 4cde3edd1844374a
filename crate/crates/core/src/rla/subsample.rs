//! Row subsampling of polytope barrier Hessians.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::leverage::approx_leverage;
use crate::barriers::{lee_sidford_weights, leverage_scores, reweight_rows, scaled_constraints, LewisOptions};
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::SymMatrix;
use crate::seeding::{rng_from_seed, split_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SketchSpec {
    pub eps: f64,
    pub delta: f64,
    pub oversample_beta: f64,
    pub rng_seed: u64,
    /// `c_s` in `s = ⌈c_s · β · ε⁻² · d · ln(d/δ)⌉`.
    pub row_constant: f64,
    /// `c_t` in the TensorSRHT row count.
    pub tensor_constant: f64,
    pub leverage_eps: f64,
    /// Above this many rows leverage scores are estimated rather than computed.
    pub exact_leverage_max_rows: usize,
    /// Keep every row with weight one, so the estimate is exact.
    pub exhaustive: bool,
}

impl Default for SketchSpec {
    fn default() -> Self {
        Self {
            eps: 0.1,
            delta: 0.01,
            oversample_beta: 1.0,
            rng_seed: 0,
            row_constant: 4.0,
            tensor_constant: 1.0,
            leverage_eps: 0.1,
            exact_leverage_max_rows: 512,
            exhaustive: false,
        }
    }
}

impl SketchSpec {
    pub fn new(eps: f64, delta: f64, rng_seed: u64) -> Result<Self> {
        let spec = Self {
            eps,
            delta,
            rng_seed,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.eps) {
            return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !open_unit(self.delta) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.oversample_beta >= 1.0 && self.oversample_beta.is_finite()) {
            return Err(Error::InvalidInput(format!("oversample_beta must be >= 1, got {}", self.oversample_beta)));
        }
        if !(self.row_constant > 0.0 && self.tensor_constant > 0.0) {
            return Err(Error::InvalidInput("row-count constants must be positive".into()));
        }
        if !open_unit(self.leverage_eps) {
            return Err(Error::InvalidInput(format!("leverage_eps must lie in (0, 1), got {}", self.leverage_eps)));
        }
        Ok(())
    }

    pub fn subsample_rows(&self, d: usize) -> u64 {
        let d = d as f64;
        let s = self.row_constant * self.oversample_beta * d * (d / self.delta).ln() / (self.eps * self.eps);
        s.ceil().max(1.0) as u64
    }

    pub fn tensor_rows(&self, n: usize, d: usize) -> u64 {
        let (n, d) = (n as f64, d as f64);
        let log = (n * d / (self.eps * self.delta)).ln();
        (self.tensor_constant * d * log.powi(3) / (self.eps * self.eps)).ceil().max(1.0) as u64
    }
}

/// Counts of `total` independent draws from the distribution `probs`.
pub fn multinomial_counts(total: u64, probs: &[f64], rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut remaining = total;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.iter().rposition(|&q| q > 0.0);
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let c = if Some(i) == last {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng)
        };
        counts[i] = c;
        remaining -= c;
        mass -= p;
    }
    counts
}

/// `(1/s) Σ_j b_{i_j} b_{i_j}^T / p_{i_j}` over `s` draws `i_j ~ probs`.
pub fn sampled_gram(b: &DMatrix<f64>, probs: &DVector<f64>, s: u64, rng: &mut impl Rng) -> Result<SymMatrix> {
    let (n, d) = b.shape();
    if probs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: probs.len(),
        });
    }
    if s == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let counts = multinomial_counts(s, probs.as_slice(), rng);
    let kept: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    let mut rows = DMatrix::zeros(kept.len(), d);
    for (k, &i) in kept.iter().enumerate() {
        let w = (counts[i] as f64 / (s as f64 * probs[i])).sqrt();
        rows.row_mut(k).copy_from(&(b.row(i) * w));
    }
    Ok(SymMatrix::symmetrized(rows.tr_mul(&rows)))
}

fn leverage_distribution(b: &DMatrix<f64>, spec: &SketchSpec) -> Result<DVector<f64>> {
    let sigma = if b.nrows() <= spec.exact_leverage_max_rows {
        leverage_scores(b)?
    } else {
        approx_leverage(b, spec.leverage_eps, split_seed(spec.rng_seed, 1))?
    };
    let total = sigma.sum();
    Ok(sigma / total)
}

/// Leverage-score row sample of the log-barrier Hessian at `x`.
pub fn subsample_hessian(p: &Polytope, x: &DVector<f64>, spec: &SketchSpec) -> Result<SymMatrix> {
    spec.validate()?;
    let b = scaled_constraints(p, x)?;
    if spec.exhaustive {
        return Ok(SymMatrix::symmetrized(b.tr_mul(&b)));
    }
    let probs = leverage_distribution(&b, spec)?;
    let mut rng = rng_from_seed(split_seed(spec.rng_seed, 2));
    sampled_gram(&b, &probs, spec.subsample_rows(p.dim()), &mut rng)
}

/// Row sample of the Lee-Sidford Hessian, drawing row `i` with probability `w_i / d`.
pub fn subsample_lee_sidford_hessian(
    p: &Polytope,
    x: &DVector<f64>,
    lewis_p: f64,
    opts: &LewisOptions,
    spec: &SketchSpec,
) -> Result<SymMatrix> {
    spec.validate()?;
    let (b, w) = lee_sidford_weights(p, x, lewis_p, opts)?;
    let bw = reweight_rows(&b, &w, lewis_p);
    if spec.exhaustive {
        return Ok(SymMatrix::symmetrized(bw.tr_mul(&bw)));
    }
    let total = w.sum();
    let probs = w / total;
    let mut rng = rng_from_seed(split_seed(spec.rng_seed, 2));
    sampled_gram(&bw, &probs, spec.subsample_rows(p.dim()), &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::{hessian_lee_sidford, hessian_log_polytope};
    use crate::linalg::spectral_sandwich_check;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_polytope(n: usize, d: usize, seed: u64) -> Polytope {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
        Polytope::new(a, b, 10.0).unwrap()
    }

    #[test]
    fn row_counts() {
        let spec = SketchSpec::new(0.1, 0.01, 0).unwrap();
        assert_eq!(spec.subsample_rows(2), (4.0 * 2.0 * 200f64.ln() / 0.01f64).ceil() as u64);
        let beta = SketchSpec { oversample_beta: 2.0, ..spec };
        assert!(beta.subsample_rows(3) >= 2 * spec.subsample_rows(3) - 1);
        assert!(SketchSpec::new(1.0, 0.1, 0).is_err());
        assert!(SketchSpec::new(0.1, 0.0, 0).is_err());
    }

    #[test]
    fn multinomial_counts_sum_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probs = [0.1, 0.0, 0.4, 0.2, 0.3];
        let mut acc = [0.0; 5];
        for _ in 0..2000 {
            let c = multinomial_counts(1000, &probs, &mut rng);
            assert_eq!(c.iter().sum::<u64>(), 1000);
            assert_eq!(c[1], 0);
            for (a, &ci) in acc.iter_mut().zip(&c) {
                *a += ci as f64;
            }
        }
        for (a, p) in acc.iter().zip(probs) {
            let mean = a / 2000.0;
            let se = (1000.0 * p * (1.0 - p) / 2000.0).sqrt();
            assert!((mean - 1000.0 * p).abs() <= 4.0 * se + 1e-12);
        }
        let huge = multinomial_counts(100_000_000_000, &probs, &mut rng);
        assert_eq!(huge.iter().sum::<u64>(), 100_000_000_000);
    }

    #[test]
    fn exhaustive_mode_is_exact() {
        let p = random_polytope(40, 4, 2);
        let x = DVector::zeros(4);
        let spec = SketchSpec { exhaustive: true, ..Default::default() };
        let h = subsample_hessian(&p, &x, &spec).unwrap();
        let exact = hessian_log_polytope(&p, &x).unwrap();
        assert!((h.matrix() - exact.matrix()).abs().max() <= 1e-12 * exact.matrix().abs().max());

        let opts = LewisOptions::default();
        let h = subsample_lee_sidford_hessian(&p, &x, 4.0, &opts, &spec).unwrap();
        let exact = hessian_lee_sidford(&p, &x, 4.0, &opts).unwrap();
        assert!((h.matrix() - exact.matrix()).abs().max() <= 1e-12 * exact.matrix().abs().max());
    }

    #[test]
    fn box_sandwich_holds() {
        let p = Polytope::cube(2, 1.0).unwrap();
        let x = DVector::zeros(2);
        let exact = hessian_log_polytope(&p, &x).unwrap();
        let good = (0..500)
            .filter(|&seed| {
                let spec = SketchSpec::new(0.1, 0.01, seed).unwrap();
                let h = subsample_hessian(&p, &x, &spec).unwrap();
                spectral_sandwich_check(&exact, &h, 0.1).unwrap().holds
            })
            .count();
        assert!(good >= 495, "{good}/500");
    }

    #[test]
    fn lee_sidford_sandwich_holds() {
        let p = random_polytope(300, 4, 3);
        let x = DVector::from_element(4, 0.05);
        let opts = LewisOptions::default();
        let exact = hessian_lee_sidford(&p, &x, 6.0, &opts).unwrap();
        let good = (0..50)
            .filter(|&seed| {
                let spec = SketchSpec::new(0.1, 0.01, seed).unwrap();
                let h = subsample_lee_sidford_hessian(&p, &x, 6.0, &opts, &spec).unwrap();
                spectral_sandwich_check(&exact, &h, 0.1).unwrap().holds
            })
            .count();
        assert!(good >= 49, "{good}/50");
    }

    #[test]
    fn estimator_is_unbiased() {
        let p = random_polytope(30, 3, 4);
        let x = DVector::zeros(3);
        let exact = hessian_log_polytope(&p, &x).unwrap();
        let trials = 10_000;
        let mut sum = DMatrix::zeros(3, 3);
        let mut sum_sq = DMatrix::zeros(3, 3);
        for seed in 0..trials {
            let spec = SketchSpec { eps: 0.9, rng_seed: seed, ..Default::default() };
            let h = subsample_hessian(&p, &x, &spec).unwrap().into_inner();
            sum_sq += h.component_mul(&h);
            sum += h;
        }
        let t = trials as f64;
        for j in 0..3 {
            for k in 0..3 {
                let mean = sum[(j, k)] / t;
                let var = sum_sq[(j, k)] / t - mean * mean;
                let se = (var / t).sqrt();
                assert!((mean - exact.matrix()[(j, k)]).abs() <= 3.0 * se, "entry ({j},{k})");
            }
        }
    }

    #[test]
    fn approximate_leverage_path_is_used_for_tall_matrices() {
        let p = random_polytope(800, 3, 5);
        let x = DVector::zeros(3);
        let exact = hessian_log_polytope(&p, &x).unwrap();
        let spec = SketchSpec::new(0.1, 0.01, 7).unwrap();
        let h = subsample_hessian(&p, &x, &spec).unwrap();
        assert!(spectral_sandwich_check(&exact, &h, 0.1).unwrap().holds);
    }

    #[test]
    fn propagates_not_interior() {
        let p = Polytope::cube(2, 1.0).unwrap();
        let spec = SketchSpec::default();
        assert!(matches!(
            subsample_hessian(&p, &DVector::from_vec(vec![2.0, 0.0]), &spec),
            Err(Error::NotInterior { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn output_is_symmetric_psd(seed in any::<u64>()) {
            let p = random_polytope(25, 3, seed);
            let spec = SketchSpec { eps: 0.8, rng_seed: seed, ..Default::default() };
            let h = subsample_hessian(&p, &DVector::zeros(3), &spec).unwrap();
            prop_assert_eq!(h.matrix(), &h.matrix().transpose());
            prop_assert!(h.factorize().unwrap().min_eigenvalue() >= -1e-12 * h.frobenius_norm());
        }
    }
}
