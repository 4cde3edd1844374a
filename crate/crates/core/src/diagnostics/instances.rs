//! Random test bodies that contain the origin.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{Body, Polytope, Spectrahedron};
use crate::seeding::rng_from_seed;

fn gaussian_vector(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_unit_vector(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        let g = gaussian_vector(d, rng);
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// `n − 2d` random unit-normal half-spaces with offsets in `[0.5, 1.5]`,
/// intersected with the cube `[−2, 2]^d`.
pub fn random_polytope(d: usize, n: usize, seed: u64) -> Result<Polytope> {
    if d == 0 || n < 2 * d {
        return Err(Error::InvalidInput(format!("need n >= 2d constraints, got n = {n}, d = {d}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut a = DMatrix::zeros(n, d);
    let mut b = DVector::zeros(n);
    for i in 0..n - 2 * d {
        a.row_mut(i).copy_from(&random_unit_vector(d, &mut rng).transpose());
        b[i] = rng.random_range(0.5..1.5);
    }
    for j in 0..d {
        let r = n - 2 * d + 2 * j;
        a[(r, j)] = 1.0;
        a[(r + 1, j)] = -1.0;
        b[r] = 2.0;
        b[r + 1] = 2.0;
    }
    Polytope::new(a, b, 2.0 * (d as f64).sqrt())
}

fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q()
}

/// A rotated block-diagonal pencil: a random `(n − 2d)`-block `I + Σ x_i G_i`
/// next to the `2d` entries `1 ± x_i`, so the body sits inside `[−1, 1]^d`.
pub fn random_spectrahedron(d: usize, n: usize, seed: u64) -> Result<Spectrahedron> {
    if d == 0 || n < 2 * d {
        return Err(Error::InvalidInput(format!("need n >= 2d, got n = {n}, d = {d}")));
    }
    let mut rng = rng_from_seed(seed);
    let m = n - 2 * d;
    let q = random_orthogonal(n, &mut rng);
    let scale = 1.0 / (m.max(1) as f64).sqrt();
    let mats = (0..d)
        .map(|i| {
            let mut a = DMatrix::zeros(n, n);
            if m > 0 {
                let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
                a.view_mut((0, 0), (m, m)).copy_from(&((&g + g.transpose()) * 0.5));
            }
            a[(m + 2 * i, m + 2 * i)] = 1.0;
            a[(m + 2 * i + 1, m + 2 * i + 1)] = -1.0;
            &q * a * q.transpose()
        })
        .collect();
    Spectrahedron::new(mats, -DMatrix::identity(n, n), (d as f64).sqrt())
}

/// Points `c + t·u` with `u` uniform on the sphere and `t` uniform on the
/// middle `shrink` fraction of the chord through `c`.
pub fn interior_points(
    body: &Body,
    center: &DVector<f64>,
    count: usize,
    shrink: f64,
    rng: &mut impl Rng,
) -> Result<Vec<DVector<f64>>> {
    body.check_interior(center)?;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = random_unit_vector(body.dim(), rng);
        let (lo, hi) = body.chord(center, &u)?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Unsupported("interior sampling needs a bounded body".into()));
        }
        let t = rng.random_range(shrink * lo..shrink * hi);
        let x = center + u * t;
        if body.contains(&x, true) {
            out.push(x);
        }
    }
    Ok(out)
}
