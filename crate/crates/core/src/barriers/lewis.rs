//! Leverage scores and ℓ_p Lewis weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact leverage scores `σ_i(B) = b_i^T (B^T B)^{-1} b_i`, computed as
/// `‖R^{-T} b_i‖²` from the `R` factor of `B`. Solving per row keeps small
/// scores accurate in relative terms.
pub fn leverage_scores(b: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (n, d) = b.shape();
    if n < d || d == 0 {
        return Err(Error::RankDeficient(format!("{n}x{d} matrix cannot have full column rank")));
    }
    let qr = b.clone().qr();
    let r = qr.r();
    let rmax = (0..d).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if let Some(j) = (0..d).find(|&j| r[(j, j)].abs() <= 1e-13 * rmax || !r[(j, j)].is_finite()) {
        return Err(Error::RankDeficient(format!("column {j} is dependent on earlier columns")));
    }
    let z = r
        .transpose()
        .solve_lower_triangular(&b.transpose())
        .ok_or_else(|| Error::RankDeficient("singular R factor".into()))?;
    Ok(DVector::from_fn(n, |i, _| z.column(i).norm_squared()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LewisOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Exponent θ of the update `w ← w^{1−θ} σ(W^{1/2−1/p} B)^θ`.
    pub damping: f64,
}

impl Default for LewisOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            damping: 1.0,
        }
    }
}

/// Rows of `B` scaled by `w_i^{1/2 − 1/p}`.
pub fn reweight_rows(b: &DMatrix<f64>, w: &DVector<f64>, p: f64) -> DMatrix<f64> {
    let e = 0.5 - 1.0 / p;
    let mut out = b.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= w[i].powf(e);
    }
    out
}

/// Largest relative gap `|w_i − σ_i(W^{1/2−1/p} B)| / w_i`.
pub fn lewis_residual(b: &DMatrix<f64>, w: &DVector<f64>, p: f64) -> Result<f64> {
    let s = leverage_scores(&reweight_rows(b, w, p))?;
    Ok(w.iter().zip(s.iter()).map(|(wi, si)| (wi - si).abs() / wi).fold(0.0, f64::max))
}

/// ℓ_p Lewis weights: the fixed point `w = σ(W^{1/2−1/p} B)`.
///
/// Starts from the plain leverage scores. In log coordinates the map
/// `w ↦ σ(W^{1/2−1/p} B)` has Jacobian `(1 − 2/p)(I − Λ)` with `Λ`
/// row-stochastic and similar to a PSD matrix, so it contracts at rate
/// `1 − 2/p` for every `p ≥ 2`.
pub fn lewis_weights(b: &DMatrix<f64>, p: f64, opts: &LewisOptions) -> Result<DVector<f64>> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("Lewis weights need p >= 2, got {p}")));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidInput(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    let theta = opts.damping;
    let mut w = leverage_scores(b)?;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let s = leverage_scores(&reweight_rows(b, &w, p))?;
        residual = w.iter().zip(s.iter()).map(|(wi, si)| (wi - si).abs() / wi).fold(0.0, f64::max);
        if residual <= opts.tol {
            return Ok(w);
        }
        if theta == 1.0 {
            w = s;
        } else {
            w.zip_apply(&s, |wi, si| *wi = wi.powf(1.0 - theta) * si.powf(theta));
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: opts.max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn leverage_matches_normal_equations() {
        let b = random_matrix(30, 4, 1);
        let g = (b.transpose() * &b).try_inverse().unwrap();
        let s = leverage_scores(&b).unwrap();
        for i in 0..30 {
            let bi = b.row(i).transpose();
            assert!((s[i] - bi.dot(&(&g * &bi))).abs() < 1e-12);
        }
        assert!((s.sum() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn leverage_rejects_rank_deficiency() {
        let mut b = random_matrix(10, 3, 2);
        let c0 = b.column(0).clone_owned();
        b.set_column(2, &(c0 * 2.0));
        assert!(matches!(leverage_scores(&b), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn p_two_is_leverage() {
        let b = random_matrix(25, 3, 3);
        let w = lewis_weights(&b, 2.0, &LewisOptions::default()).unwrap();
        let s = leverage_scores(&b).unwrap();
        assert!((w - s).abs().max() < 1e-12);
    }

    #[test]
    fn square_invertible_gives_ones() {
        let b = random_matrix(4, 4, 4);
        for p in [2.0, 3.0, 6.0] {
            let w = lewis_weights(&b, p, &LewisOptions::default()).unwrap();
            assert!((w.add_scalar(-1.0)).abs().max() < 1e-10);
        }
    }

    #[test]
    fn box_rows_give_equal_weights() {
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        for p in [2.0, 4.0, 7.5] {
            let w = lewis_weights(&b, p, &LewisOptions::default()).unwrap();
            assert!((w.add_scalar(-0.5)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn converges_for_large_p() {
        let b = random_matrix(200, 5, 5);
        for p in [4.0, 8.0, 16.0, 32.0] {
            let w = lewis_weights(&b, p, &LewisOptions::default()).unwrap();
            assert!(lewis_residual(&b, &w, p).unwrap() <= 1e-8);
            assert!((w.sum() - 5.0).abs() <= 5.0 * 1e-8);
        }
    }

    #[test]
    fn heavy_damping_fails_to_converge_at_large_p() {
        // θ = 2/p on top of the contraction leaves a factor 1 − 4/p².
        let b = random_matrix(200, 5, 6);
        let p = 16.0;
        let opts = LewisOptions {
            damping: 2.0 / p,
            ..LewisOptions::default()
        };
        assert!(matches!(
            lewis_weights(&b, p, &opts),
            Err(Error::ConvergenceFailure { iterations: 500, .. })
        ));
    }

    #[test]
    fn rejects_small_p() {
        let b = random_matrix(5, 2, 7);
        assert!(matches!(lewis_weights(&b, 1.5, &LewisOptions::default()), Err(Error::InvalidInput(_))));
    }
}
