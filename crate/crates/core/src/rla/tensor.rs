//! TensorSRHT sketch of the spectrahedron log-barrier Hessian.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::hadamard::signed_transform;
use super::subsample::SketchSpec;
use crate::barriers::slack_inv_sqrt;
use crate::error::{Error, Result};
use crate::geometry::Spectrahedron;
use crate::linalg::SymMatrix;
use crate::seeding::{rng_from_seed, split_seed};

/// Largest row count [`tensor_sketch_rows`] will materialize.
pub const MAX_MATERIALIZED_ROWS: u64 = 10_000_000;

/// A sampled position `(row, col)` of the `n_pad²` Kronecker output, drawn `count` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledEntry {
    pub row: usize,
    pub col: usize,
    pub count: u64,
}

/// `(1/√s) P (HD₁ ⊗ HD₂)` with the `s` sampled positions stored as sorted, aggregated entries.
#[derive(Debug, Clone)]
pub struct TensorSRHTSketch {
    s: u64,
    n: usize,
    n_pad: usize,
    entries: Vec<SampledEntry>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    scale: f64,
}

fn random_signs(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

impl TensorSRHTSketch {
    /// Sketch sized from `spec` for `n×n` matrices and `d` variables.
    pub fn draw(n: usize, d: usize, spec: &SketchSpec) -> Result<Self> {
        spec.validate()?;
        Self::with_rows(n, spec.tensor_rows(n, d), spec.rng_seed)
    }

    pub fn with_rows(n: usize, s: u64, seed: u64) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::InvalidInput("sketch needs n >= 1 and s >= 1".into()));
        }
        let n_pad = n.next_power_of_two();
        let mut rng = rng_from_seed(split_seed(seed, 3));
        let d1 = random_signs(n, &mut rng);
        let d2 = random_signs(n, &mut rng);
        let cells = (n_pad * n_pad) as u64;

        let entries = if s < cells {
            let mut pairs: Vec<(usize, usize)> = (0..s)
                .map(|_| (rng.random_range(0..n_pad), rng.random_range(0..n_pad)))
                .collect();
            pairs.sort_unstable();
            let mut out: Vec<SampledEntry> = Vec::new();
            for (row, col) in pairs {
                match out.last_mut() {
                    Some(e) if e.row == row && e.col == col => e.count += 1,
                    _ => out.push(SampledEntry { row, col, count: 1 }),
                }
            }
            out
        } else {
            let uniform = vec![1.0; cells as usize];
            super::subsample::multinomial_counts(s, &uniform, &mut rng)
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(k, count)| SampledEntry {
                    row: k / n_pad,
                    col: k % n_pad,
                    count,
                })
                .collect()
        };

        Ok(Self {
            s,
            n,
            n_pad,
            entries,
            d1,
            d2,
            scale: 1.0 / (s as f64).sqrt(),
        })
    }

    pub fn rows(&self) -> u64 {
        self.s
    }

    pub fn matrix_size(&self) -> usize {
        self.n
    }

    pub fn n_pad(&self) -> usize {
        self.n_pad
    }

    pub fn entries(&self) -> &[SampledEntry] {
        &self.entries
    }

    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unscaled values `u_p^T A_i v_q` for each distinct entry, one row per entry.
    ///
    /// Position `(p, q)` is row `p + n_pad·q` of `(HD₁ ⊗ HD₂) vec(W A_i W)`, so
    /// `u_p` is row `p` of `HD₂W` and `v_q` is row `q` of `HD₁W`.
    fn entry_values(&self, spec: &Spectrahedron, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if spec.matrix_size() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: spec.matrix_size(),
            });
        }
        let w = slack_inv_sqrt(spec, x)?;
        let u = signed_transform(&w, &self.d2, self.n_pad);
        let v = signed_transform(&w, &self.d1, self.n_pad);

        let mut distinct: Vec<usize> = self.entries.iter().map(|e| e.row).collect();
        distinct.dedup();
        let mut slot = vec![usize::MAX; self.n_pad];
        // Sampled rows of `u` and all rows of `v`, stored as columns.
        let mut u_cols = DMatrix::zeros(self.n, distinct.len());
        for (k, &p) in distinct.iter().enumerate() {
            slot[p] = k;
            u_cols.column_mut(k).copy_from(&u.row(p).transpose());
        }
        let v_cols = v.transpose();

        let d = spec.dim();
        let mut out = DMatrix::zeros(self.entries.len(), d);
        for (i, a) in spec.mats().iter().enumerate() {
            let au = a.matrix() * &u_cols;
            for (k, e) in self.entries.iter().enumerate() {
                out[(k, i)] = au.column(slot[e.row]).dot(&v_cols.column(e.col));
            }
        }
        Ok(out)
    }
}

/// The `s×d` sketched matrix `Π 𝖡^T`: column `i` is the sketch of `vec(W A_i W)`.
pub fn tensor_sketch_rows(spec: &Spectrahedron, x: &DVector<f64>, sk: &TensorSRHTSketch) -> Result<DMatrix<f64>> {
    if sk.s > MAX_MATERIALIZED_ROWS {
        return Err(Error::InvalidInput(format!(
            "sketch has {} rows, more than the {MAX_MATERIALIZED_ROWS} that can be materialized",
            sk.s
        )));
    }
    let values = sk.entry_values(spec, x)?;
    let mut out = DMatrix::zeros(sk.s as usize, spec.dim());
    let mut r = 0;
    for (k, e) in sk.entries.iter().enumerate() {
        for _ in 0..e.count {
            out.row_mut(r).copy_from(&(values.row(k) * sk.scale));
            r += 1;
        }
    }
    Ok(out)
}

/// `M^T M` for `M` the sketched rows, computed from the aggregated entries.
pub fn sketched_hessian_with(spec: &Spectrahedron, x: &DVector<f64>, sk: &TensorSRHTSketch) -> Result<SymMatrix> {
    let values = sk.entry_values(spec, x)?;
    let mut weighted = values.clone();
    for (k, e) in sk.entries.iter().enumerate() {
        weighted.row_mut(k).scale_mut(e.count as f64 / sk.s as f64);
    }
    Ok(SymMatrix::symmetrized(values.tr_mul(&weighted)))
}

/// Sketched log-barrier Hessian with a fresh sketch drawn from `sketch_spec`.
pub fn sketched_sdp_hessian(spec: &Spectrahedron, x: &DVector<f64>, sketch_spec: &SketchSpec) -> Result<SymMatrix> {
    let sk = TensorSRHTSketch::draw(spec.matrix_size(), spec.dim(), sketch_spec)?;
    sketched_hessian_with(spec, x, &sk)
}
