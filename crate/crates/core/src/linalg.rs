//! Dense symmetric matrix kernel.
//!
//! Every metric the walk touches is symmetric positive definite, and the walk
//! needs three things from it: `Φ^{-1/2} v`, `log det Φ`, and a definiteness
//! test. All three come out of one symmetric eigendecomposition, so
//! [`SpectralFactorization`] is the canonical factored form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue counts as zero.
pub const PD_RELATIVE_TOL: f64 = 64.0 * f64::EPSILON;

/// A dense symmetric matrix. Construction symmetrizes the input, so
/// `m[(i, j)] == m[(j, i)]` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("matrix has dimension 0".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrized(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("rows are not all of length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Averages `m` with its transpose. Callers inside the crate use this for
    /// matrices that are symmetric up to round-off.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c;
        }
        Self(m)
    }

    pub fn factorize(&self) -> Result<SpectralFactorization> {
        factorize(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Eigen-pairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralFactorization {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

pub fn factorize(m: &SymMatrix) -> Result<SpectralFactorization> {
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
    }
    let d = m.dim();
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SpectralFactorization {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralFactorization {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn is_positive_definite(&self) -> bool {
        let max = self.max_eigenvalue();
        max > 0.0 && self.min_eigenvalue() > PD_RELATIVE_TOL * max
    }

    fn require_pd(&self) -> Result<()> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite {
                min_eigenvalue: self.min_eigenvalue(),
                max_eigenvalue: self.max_eigenvalue(),
            })
        }
    }

    /// `Q f(Λ) Q^T v`.
    fn apply_spectral(&self, v: &DVector<f64>, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        let mut coeffs = self.eigenvectors.tr_mul(v);
        for (c, &lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= f(lambda);
        }
        Ok(&self.eigenvectors * coeffs)
    }

    pub fn apply_inv_sqrt(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_pd()?;
        self.apply_spectral(v, |l| 1.0 / l.sqrt())
    }

    pub fn apply_sqrt(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_pd()?;
        self.apply_spectral(v, f64::sqrt)
    }

    pub fn apply_inverse(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_pd()?;
        self.apply_spectral(v, |l| 1.0 / l)
    }

    pub fn logdet(&self) -> Result<f64> {
        self.require_pd()?;
        Ok(self.eigenvalues.iter().map(|l| l.ln()).sum())
    }

    /// `Q f(Λ) Q^T` as a dense matrix.
    pub fn spectral_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(lambda);
            scaled.column_mut(j).scale_mut(fj);
        }
        scaled * self.eigenvectors.transpose()
    }

    pub fn inv_sqrt_matrix(&self) -> Result<DMatrix<f64>> {
        self.require_pd()?;
        Ok(self.spectral_function(|l| 1.0 / l.sqrt()))
    }

    pub fn inverse(&self) -> Result<SymMatrix> {
        self.require_pd()?;
        Ok(SymMatrix::symmetrized(self.spectral_function(|l| 1.0 / l)))
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::symmetrized(self.spectral_function(|l| l))
    }
}

pub fn quad_norm(m: &SymMatrix, v: &DVector<f64>) -> Result<f64> {
    if v.len() != m.dim() {
        return Err(Error::Dimension {
            expected: m.dim(),
            actual: v.len(),
        });
    }
    Ok(v.dot(&(m.matrix() * v)))
}

/// Extreme generalized eigenvalues of `B` relative to `A_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichWitness {
    pub holds: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Tests `(1-eps) A_ref ⪯ B ⪯ (1+eps) A_ref` through the spectrum of
/// `A_ref^{-1/2} B A_ref^{-1/2}`.
pub fn spectral_sandwich_check(a_ref: &SymMatrix, b: &SymMatrix, eps: f64) -> Result<SandwichWitness> {
    if a_ref.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a_ref.dim(),
            actual: b.dim(),
        });
    }
    let fa = a_ref.factorize()?;
    let w = fa.inv_sqrt_matrix()?;
    let c = SymMatrix::symmetrized(&w * b.matrix() * &w);
    let fc = c.factorize()?;
    let (min_ratio, max_ratio) = (fc.min_eigenvalue(), fc.max_eigenvalue());
    Ok(SandwichWitness {
        holds: min_ratio >= 1.0 - eps && max_ratio <= 1.0 + eps,
        min_ratio,
        max_ratio,
    })
}
