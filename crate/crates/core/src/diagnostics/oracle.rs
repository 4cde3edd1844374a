//! Ground-truth samples by rejection and a binned TV distance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Body;
use crate::seeding::rng_from_seed;
use crate::walk::Target;

pub const MAX_ORACLE_DIM: usize = 3;
const FEASIBILITY_WINDOW: u64 = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-6;

fn grid_points_per_axis(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 256,
        _ => 48,
    }
}

/// Lower bound on `f` over the body from a grid scan, loosened by the Lipschitz constant.
fn potential_floor(body: &Body, target: &Target) -> Result<f64> {
    let d = body.dim();
    let r = body.radius();
    let g = grid_points_per_axis(d);
    let h = 2.0 * r / g as f64;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; d];
    loop {
        let x = DVector::from_fn(d, |i, _| -r + (idx[i] as f64 + 0.5) * h);
        if body.contains(&x, true) {
            best = best.min(target.eval(&x)?);
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < g {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    if !best.is_finite() {
        return Err(Error::OracleInfeasible {
            acceptance_rate: 0.0,
            trials: (g as u64).pow(d as u32),
        });
    }
    Ok(best - target.lipschitz() * h * (d as f64).sqrt() - 1e-9)
}

/// `count` i.i.d. draws from `π ∝ e^{−f}` on the body, by uniform proposals
/// on `[−R, R]^d`. Only for `d ≤ 3`.
pub fn rejection_oracle(body: &Body, target: &Target, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    let d = body.dim();
    if d > MAX_ORACLE_DIM {
        return Err(Error::Unsupported(format!("rejection oracle supports d <= {MAX_ORACLE_DIM}, got {d}")));
    }
    let r = body.radius();
    let floor = if target.is_uniform() { 0.0 } else { potential_floor(body, target)? };
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(count * d);
    let (mut trials, mut accepted, mut window_accepted) = (0u64, 0usize, 0u64);
    while accepted < count {
        trials += 1;
        let x = DVector::from_fn(d, |_, _| rng.random_range(-r..r));
        if body.contains(&x, true) {
            let log_accept = if target.is_uniform() {
                0.0
            } else {
                let fx = target.eval(&x)?;
                if fx < floor {
                    return Err(Error::Oracle(format!(
                        "potential {fx} fell below the scanned floor {floor}; the Lipschitz constant is too small"
                    )));
                }
                floor - fx
            };
            if log_accept >= 0.0 || rng.random::<f64>() < log_accept.exp() {
                out.extend(x.iter());
                accepted += 1;
                window_accepted += 1;
            }
        }
        if trials % FEASIBILITY_WINDOW == 0 {
            let rate = window_accepted as f64 / FEASIBILITY_WINDOW as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::OracleInfeasible {
                    acceptance_rate: rate,
                    trials,
                });
            }
            window_accepted = 0;
        }
    }
    Ok(DMatrix::from_row_slice(count, d, &out))
}

/// A regular grid on an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells_per_axis: usize,
}

pub const DEFAULT_CELLS_PER_AXIS: usize = 64;

impl GridSpec {
    pub fn cube(d: usize, lower: f64, upper: f64, cells_per_axis: usize) -> Self {
        Self {
            lower: vec![lower; d],
            upper: vec![upper; d],
            cells_per_axis,
        }
    }

    /// `[−R, R]^d` with the default resolution.
    pub fn for_body(body: &Body) -> Self {
        Self::cube(body.dim(), -body.radius(), body.radius(), DEFAULT_CELLS_PER_AXIS)
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis.pow(self.lower.len() as u32)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.lower.len() != d || self.upper.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: self.lower.len(),
            });
        }
        if d > MAX_ORACLE_DIM || self.cells_per_axis == 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs d <= {MAX_ORACLE_DIM} and at least one cell per axis"
            )));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(u > l)) {
            return Err(Error::InvalidInput("grid bounds must satisfy lower < upper".into()));
        }
        Ok(())
    }

    /// Cell index of a point; points outside the box fall into the edge cells.
    fn cell(&self, x: impl Iterator<Item = f64>) -> usize {
        let c = self.cells_per_axis;
        let mut idx = 0;
        for (k, v) in x.enumerate() {
            let t = (v - self.lower[k]) / (self.upper[k] - self.lower[k]);
            let j = ((t * c as f64).floor().max(0.0) as usize).min(c - 1);
            idx = idx * c + j;
        }
        idx
    }

    fn histogram(&self, samples: &DMatrix<f64>) -> Vec<f64> {
        let mut h = vec![0.0; self.num_cells()];
        for row in samples.row_iter() {
            h[self.cell(row.iter().copied())] += 1.0;
        }
        let n = samples.nrows() as f64;
        h.iter_mut().for_each(|v| *v /= n);
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridTv {
    pub tv: f64,
    /// Expected value of `tv` for two independent samples of the same law.
    pub noise_floor: f64,
    pub cells: usize,
}

/// `½ Σ |p̂_a − p̂_b|` over the grid, with the multinomial noise floor
/// `½ Σ √(2/π) · √(p̄(1−p̄)(1/N_a + 1/N_b))` at the pooled frequencies `p̄`.
pub fn grid_tv_with_floor(a: &DMatrix<f64>, b: &DMatrix<f64>, grid: &GridSpec) -> Result<GridTv> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::EmptyInput("grid TV needs two non-empty sample sets".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension {
            expected: a.ncols(),
            actual: b.ncols(),
        });
    }
    grid.validate(a.ncols())?;
    let (ha, hb) = (grid.histogram(a), grid.histogram(b));
    let (na, nb) = (a.nrows() as f64, b.nrows() as f64);
    let scale = (2.0 / std::f64::consts::PI).sqrt() * (1.0 / na + 1.0 / nb).sqrt();
    let mut tv = 0.0;
    let mut floor = 0.0;
    for (pa, pb) in ha.iter().zip(&hb) {
        tv += (pa - pb).abs();
        let pooled = (pa * na + pb * nb) / (na + nb);
        floor += scale * (pooled * (1.0 - pooled)).sqrt();
    }
    Ok(GridTv {
        tv: 0.5 * tv,
        noise_floor: 0.5 * floor,
        cells: grid.num_cells(),
    })
}

pub fn grid_tv(a: &DMatrix<f64>, b: &DMatrix<f64>, grid: &GridSpec) -> Result<f64> {
    Ok(grid_tv_with_floor(a, b, grid)?.tv)
}
