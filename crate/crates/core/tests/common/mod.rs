#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Lewis weights from the convex program
/// `min −log det M  s.t.  Σ (a_i^T M a_i)^{p/2} ≤ d`,
/// solved by natural-gradient descent with backtracking on the
/// scale-invariant penalty `F(M) = −log det M + (2d/p) log(Σ q_i^{p/2} / d)`.
/// Returns `w_i = (a_i^T M a_i)^{p/2}` at the normalized optimum.
pub fn lewis_by_convex_program(a: &DMatrix<f64>, p: f64) -> DVector<f64> {
    let (n, d) = a.shape();
    let df = d as f64;
    let q = |m: &DMatrix<f64>| DVector::from_fn(n, |i, _| {
        let ai = a.row(i).transpose();
        ai.dot(&(m * &ai))
    });
    let objective = |m: &DMatrix<f64>| -> f64 {
        let chol = match m.clone().cholesky() {
            Some(c) => c,
            None => return f64::INFINITY,
        };
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let s: f64 = q(m).iter().map(|v| v.powf(p / 2.0)).sum();
        -logdet + 2.0 * df / p * (s / df).ln()
    };

    let mut m = (a.transpose() * a).try_inverse().expect("full rank");
    let mut f = objective(&m);
    for _ in 0..20_000 {
        let qi = q(&m);
        let s: f64 = qi.iter().map(|v| v.powf(p / 2.0)).sum();
        let mut g = DMatrix::zeros(d, d);
        for i in 0..n {
            let ai = a.row(i).transpose();
            g += &ai * ai.transpose() * qi[i].powf(p / 2.0 - 1.0);
        }
        // Gradient −M⁻¹ + d·G/S; natural direction M·grad·M.
        let dir = &m * &g * &m * (df / s) - &m;
        let norm = dir.norm() / m.norm();
        if norm < 1e-12 {
            break;
        }
        let mut t = 1.0;
        loop {
            let cand = &m - &dir * t;
            let cand = (&cand + cand.transpose()) * 0.5;
            let fc = objective(&cand);
            if fc <= f - 1e-4 * t * norm * norm || t < 1e-12 {
                if fc < f {
                    m = cand;
                    f = fc;
                }
                break;
            }
            t *= 0.5;
        }
    }
    let qi = q(&m);
    let s: f64 = qi.iter().map(|v| v.powf(p / 2.0)).sum();
    let m = m * (df / s).powf(2.0 / p);
    q(&m).map(|v| v.powf(p / 2.0))
}
