//! Leverage scores from a subsampled randomized Hadamard embedding.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::hadamard::signed_transform;
use crate::error::{Error, Result};
use crate::seeding::{rng_from_seed, split_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageSketch {
    pub delta: f64,
    /// Embedding rows `r = ⌈c_r · d · ln(d/δ) / ε²⌉`.
    pub row_constant: f64,
    /// Projection columns `t = ⌈c_jl · ln(n/δ) / ε²⌉`.
    pub jl_constant: f64,
    pub force_sketch: bool,
    pub force_jl: bool,
}

impl Default for LeverageSketch {
    fn default() -> Self {
        Self {
            delta: 0.1,
            row_constant: 4.0,
            jl_constant: 4.0,
            force_sketch: false,
            force_jl: false,
        }
    }
}

impl LeverageSketch {
    pub fn embedding_rows(&self, d: usize, eps: f64) -> usize {
        let d = d as f64;
        (self.row_constant * d * (d / self.delta).ln() / (eps * eps)).ceil() as usize
    }

    pub fn projection_columns(&self, n: usize, eps: f64) -> usize {
        (self.jl_constant * (n as f64 / self.delta).ln() / (eps * eps)).ceil() as usize
    }
}

/// Estimates `σ_i(B)` to relative accuracy `eps` with the default sketch sizes.
pub fn approx_leverage(b: &DMatrix<f64>, eps: f64, seed: u64) -> Result<DVector<f64>> {
    approx_leverage_with(b, eps, seed, &LeverageSketch::default())
}

pub fn approx_leverage_with(b: &DMatrix<f64>, eps: f64, seed: u64, opts: &LeverageSketch) -> Result<DVector<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {}", opts.delta)));
    }
    let (n, d) = b.shape();
    if n < d || d == 0 {
        return Err(Error::RankDeficient(format!("{n}x{d} matrix cannot have full column rank")));
    }

    let r = opts.embedding_rows(d, eps);
    let embedded = if r >= n && !opts.force_sketch {
        b.clone()
    } else {
        let mut rng = rng_from_seed(split_seed(seed, 0));
        let n_pad = n.next_power_of_two();
        let signs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let hb = signed_transform(b, &signs, n_pad);
        let scale = 1.0 / (r as f64).sqrt();
        let mut y = DMatrix::zeros(r, d);
        for k in 0..r {
            let row = rng.random_range(0..n_pad);
            y.row_mut(k).copy_from(&(hb.row(row) * scale));
        }
        y
    };

    let r_factor = embedded.qr().r();
    let rmax = (0..d).map(|j| r_factor[(j, j)].abs()).fold(0.0, f64::max);
    if let Some(j) = (0..d).find(|&j| r_factor[(j, j)].abs() <= 1e-13 * rmax || !r_factor[(j, j)].is_finite()) {
        return Err(Error::RankDeficient(format!("sketched column {j} is dependent on earlier columns")));
    }
    let r_inv = r_factor
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::RankDeficient("triangular factor is singular".into()))?;
    let mut z = b * r_inv;

    let t = opts.projection_columns(n, eps);
    if opts.force_jl || t < d {
        let mut rng = rng_from_seed(split_seed(seed, 1));
        let g = DMatrix::from_fn(d, t, |_, _| rng.sample::<f64, _>(StandardNormal) / (t as f64).sqrt());
        z *= g;
    }
    Ok(DVector::from_fn(n, |i, _| z.row(i).norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::leverage_scores;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn normal_equation_scores(b: &DMatrix<f64>) -> DVector<f64> {
        let g = (b.transpose() * b).try_inverse().unwrap();
        DVector::from_fn(b.nrows(), |i, _| {
            let bi = b.row(i).transpose();
            bi.dot(&(&g * &bi))
        })
    }

    fn within(est: &DVector<f64>, exact: &DVector<f64>, tol: f64) -> bool {
        est.iter().zip(exact.iter()).all(|(e, x)| (e / x - 1.0).abs() <= tol)
    }

    #[test]
    fn replicated_orthonormal_rows_share_mass() {
        let q = random_matrix(4, 4, 1).qr().q();
        let mut b = DMatrix::zeros(12, 4);
        for k in 0..3 {
            b.view_mut((4 * k, 0), (4, 4)).copy_from(&q);
        }
        let forced = LeverageSketch { force_sketch: true, ..Default::default() };
        for opts in [LeverageSketch::default(), forced] {
            let s = approx_leverage_with(&b, 0.1, 3, &opts).unwrap();
            if opts.force_sketch {
                // Copies of a row get identical estimates even through the sketch.
                for i in 0..4 {
                    assert!((s[i] - s[i + 4]).abs() < 1e-12 && (s[i] - s[i + 8]).abs() < 1e-12);
                    assert!((s[i] * 3.0 - 1.0).abs() < 0.3);
                }
            } else {
                assert!(s.iter().all(|&x| (x - 4.0 / 12.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn square_orthogonal_scores_are_one() {
        let q = random_matrix(5, 5, 2).qr().q();
        let s = approx_leverage(&q, 0.2, 0).unwrap();
        assert!(s.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn small_matrix_estimates_are_accurate() {
        let b = random_matrix(200, 5, 3);
        let exact = normal_equation_scores(&b);
        let good = (0..100).filter(|&seed| within(&approx_leverage(&b, 0.25, seed).unwrap(), &exact, 0.3)).count();
        assert!(good >= 95, "{good}/100 seeds within tolerance");
    }

    #[test]
    fn sketched_and_projected_estimates_are_accurate() {
        let b = random_matrix(2000, 5, 4);
        let exact = leverage_scores(&b).unwrap();
        let eps = 0.25;
        for opts in [
            LeverageSketch::default(),
            LeverageSketch { force_jl: true, ..Default::default() },
        ] {
            assert!(opts.embedding_rows(5, eps) < 2000);
            let good = (0..40)
                .filter(|&seed| within(&approx_leverage_with(&b, eps, seed, &opts).unwrap(), &exact, 0.3))
                .count();
            assert!(good >= 38, "{good}/40 seeds within tolerance, jl={}", opts.force_jl);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let b = random_matrix(1500, 6, 5);
        let opts = LeverageSketch { force_jl: true, ..Default::default() };
        for seed in 0..10 {
            let s = approx_leverage_with(&b, 0.2, seed, &opts).unwrap();
            assert!((s.sum() / 6.0 - 1.0).abs() <= 0.2);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut b = random_matrix(50, 3, 6);
        let c = b.column(1).clone_owned();
        b.set_column(2, &c);
        assert!(matches!(approx_leverage(&b, 0.2, 0), Err(Error::RankDeficient(_))));
    }
}
