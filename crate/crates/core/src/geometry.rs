//! Convex bodies: polytopes `{x : Ax ≤ b}` and spectrahedra `{x : Σ x_i A_i ⪰ C}`.
//!
//! Slacks are stored as `s = b − Ax`, positive in the interior. Barrier
//! Hessians only ever use squared slacks, so the orientation does not leak
//! into any metric.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SpectralFactorization, SymMatrix};

const RANK_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
    radius: f64,
}

impl Polytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, radius: f64) -> Result<Self> {
        let (n, d) = a.shape();
        if d == 0 || n < d {
            return Err(Error::InvalidInput(format!(
                "polytope needs n >= d >= 1 constraints, got n={n}, d={d}"
            )));
        }
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("polytope has non-finite data".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        let sv = a.clone().svd(false, false).singular_values;
        let (smin, smax) = sv
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if smin <= RANK_TOL * smax {
            return Err(Error::RankDeficient(format!(
                "constraint matrix singular values span [{smin:e}, {smax:e}]"
            )));
        }
        Ok(Self { a, b, radius })
    }

    /// Axis-aligned box `[-h, h]^d`, rows ordered `+e_1, -e_1, +e_2, ...`.
    pub fn cube(d: usize, half_width: f64) -> Result<Self> {
        let mut a = DMatrix::zeros(2 * d, d);
        for j in 0..d {
            a[(2 * j, j)] = 1.0;
            a[(2 * j + 1, j)] = -1.0;
        }
        let b = DVector::from_element(2 * d, half_width);
        Self::new(a, b, half_width * (d as f64).sqrt())
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn slack(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(&self.b - &self.a * x)
    }

    pub fn contains(&self, x: &DVector<f64>, strict: bool) -> bool {
        let Ok(s) = self.slack(x) else {
            return false;
        };
        if strict {
            s.iter().all(|&si| si > 0.0)
        } else {
            s.iter()
                .zip(self.b.iter())
                .all(|(&si, &bi)| si >= -1e-12 * (1.0 + bi.abs()))
        }
    }

    /// Errors with the index of the tightest constraint when `x` is not
    /// strictly interior.
    pub fn check_interior(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.slack(x)?;
        let (idx, &smin) = s
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("n >= 1");
        if smin > 0.0 {
            Ok(s)
        } else {
            Err(Error::NotInterior {
                constraint: Some(idx),
                slack: smin,
            })
        }
    }

    /// Parameters `(t_minus, t_plus)` where the line `x + t·dir` leaves the
    /// polytope. Infinite when no constraint blocks that side.
    pub fn chord(&self, x: &DVector<f64>, dir: &DVector<f64>) -> Result<(f64, f64)> {
        self.check_dim(dir)?;
        let s = self.slack(x)?;
        let ad = &self.a * dir;
        let mut t_plus = f64::INFINITY;
        let mut t_minus = f64::NEG_INFINITY;
        for (&si, &adi) in s.iter().zip(ad.iter()) {
            if adi > 0.0 {
                t_plus = t_plus.min(si / adi);
            } else if adi < 0.0 {
                t_minus = t_minus.max(si / adi);
            }
        }
        Ok((t_minus, t_plus))
    }

    /// Cross-ratio distance `‖u−v‖·‖p−q‖ / (‖p−u‖·‖v−q‖)` with chord
    /// endpoints ordered `p, u, v, q`.
    pub fn cross_ratio(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        if !self.contains(u, true) || !self.contains(v, true) {
            return Err(Error::BoundaryPoint);
        }
        let dir = v - u;
        if dir.iter().all(|&c| c == 0.0) {
            return Ok(0.0);
        }
        // v sits at t = 1 on the ray from u.
        let (t_minus, t_plus) = self.chord(u, &dir)?;
        if !(t_minus.is_finite() && t_plus.is_finite()) {
            return Err(Error::InvalidInput("chord is unbounded".into()));
        }
        if t_minus >= 0.0 || t_plus <= 1.0 {
            return Err(Error::BoundaryPoint);
        }
        Ok((t_plus - t_minus) / (-t_minus * (t_plus - 1.0)))
    }
}

#[derive(Debug, Clone)]
pub struct Spectrahedron {
    mats: Vec<SymMatrix>,
    c: SymMatrix,
    radius: f64,
}

impl Spectrahedron {
    pub fn new(mats: Vec<DMatrix<f64>>, c: DMatrix<f64>, radius: f64) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidInput("spectrahedron needs d >= 1 matrices".into()));
        }
        let n = c.nrows();
        let check = |m: &DMatrix<f64>, what: &str| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidInput(format!(
                    "{what} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let asym = (m - m.transpose()).abs().max();
            if asym > SYMMETRY_TOL {
                return Err(Error::InvalidMatrix(format!("{what} is not symmetric (asymmetry {asym:e})")));
            }
            Ok(())
        };
        check(&c, "C")?;
        for (i, m) in mats.iter().enumerate() {
            check(m, &format!("A_{i}"))?;
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            mats: mats.into_iter().map(SymMatrix::new).collect::<Result<_>>()?,
            c: SymMatrix::new(c)?,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    /// Side length `n` of the matrix pencil.
    pub fn matrix_size(&self) -> usize {
        self.c.dim()
    }

    pub fn mats(&self) -> &[SymMatrix] {
        &self.mats
    }

    pub fn c(&self) -> &SymMatrix {
        &self.c
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `Σ dir_i A_i`.
    pub fn pencil(&self, dir: &DVector<f64>) -> Result<DMatrix<f64>> {
        if dir.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: dir.len(),
            });
        }
        let n = self.matrix_size();
        let mut m = DMatrix::zeros(n, n);
        for (xi, ai) in dir.iter().zip(&self.mats) {
            if *xi != 0.0 {
                m += ai.matrix() * *xi;
            }
        }
        Ok(m)
    }

    pub fn slack_matrix(&self, x: &DVector<f64>) -> Result<SymMatrix> {
        let m = self.pencil(x)? - self.c.matrix();
        Ok(SymMatrix::symmetrized(m))
    }

    pub fn contains(&self, x: &DVector<f64>, strict: bool) -> bool {
        let Ok(s) = self.slack_matrix(x) else {
            return false;
        };
        let Ok(f) = s.factorize() else {
            return false;
        };
        let (lo, hi) = (f.min_eigenvalue(), f.max_eigenvalue());
        if strict {
            lo > 0.0
        } else {
            lo >= -1e-10 * (1.0 + hi)
        }
    }

    pub fn check_interior(&self, x: &DVector<f64>) -> Result<SymMatrix> {
        let s = self.slack_matrix(x)?;
        interior_spectrum(s.factorize()?)?;
        Ok(s)
    }

    /// Eigendecomposition of the slack matrix, erroring unless `x` is strictly interior.
    pub fn slack_factorization(&self, x: &DVector<f64>) -> Result<SpectralFactorization> {
        interior_spectrum(self.slack_matrix(x)?.factorize()?)
    }

    /// Line parameters where `x + t·dir` leaves the spectrahedron, from the
    /// spectrum of `S^{-1/2} (Σ dir_i A_i) S^{-1/2}`.
    pub fn chord(&self, x: &DVector<f64>, dir: &DVector<f64>) -> Result<(f64, f64)> {
        let s = self.check_interior(x)?;
        let w = s.factorize()?.inv_sqrt_matrix()?;
        let k = SymMatrix::symmetrized(&w * self.pencil(dir)? * &w);
        let f = k.factorize()?;
        let (lo, hi) = (f.min_eigenvalue(), f.max_eigenvalue());
        let t_plus = if lo < 0.0 { -1.0 / lo } else { f64::INFINITY };
        let t_minus = if hi > 0.0 { -1.0 / hi } else { f64::NEG_INFINITY };
        Ok((t_minus, t_plus))
    }
}

fn interior_spectrum(f: SpectralFactorization) -> Result<SpectralFactorization> {
    let lo = f.min_eigenvalue();
    if lo > 0.0 {
        Ok(f)
    } else {
        Err(Error::NotInterior {
            constraint: None,
            slack: lo,
        })
    }
}

/// Either supported body.
#[derive(Debug, Clone)]
pub enum Body {
    Polytope(Polytope),
    Spectrahedron(Spectrahedron),
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Polytope(p) => p.dim(),
            Body::Spectrahedron(s) => s.dim(),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Body::Polytope(p) => p.radius(),
            Body::Spectrahedron(s) => s.radius(),
        }
    }

    /// `n`: constraint count for polytopes, matrix side for spectrahedra.
    pub fn size(&self) -> usize {
        match self {
            Body::Polytope(p) => p.num_constraints(),
            Body::Spectrahedron(s) => s.matrix_size(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, strict: bool) -> bool {
        match self {
            Body::Polytope(p) => p.contains(x, strict),
            Body::Spectrahedron(s) => s.contains(x, strict),
        }
    }

    pub fn check_interior(&self, x: &DVector<f64>) -> Result<()> {
        match self {
            Body::Polytope(p) => p.check_interior(x).map(drop),
            Body::Spectrahedron(s) => s.check_interior(x).map(drop),
        }
    }

    pub fn chord(&self, x: &DVector<f64>, dir: &DVector<f64>) -> Result<(f64, f64)> {
        match self {
            Body::Polytope(p) => p.chord(x, dir),
            Body::Spectrahedron(s) => s.chord(x, dir),
        }
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match self {
            Body::Polytope(p) => Some(p),
            Body::Spectrahedron(_) => None,
        }
    }

    pub fn as_spectrahedron(&self) -> Option<&Spectrahedron> {
        match self {
            Body::Polytope(_) => None,
            Body::Spectrahedron(s) => Some(s),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BodyFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BodyFile::from(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

impl From<Polytope> for Body {
    fn from(p: Polytope) -> Self {
        Body::Polytope(p)
    }
}

impl From<Spectrahedron> for Body {
    fn from(s: Spectrahedron) -> Self {
        Body::Spectrahedron(s)
    }
}

/// On-disk body description. Matrices are row-major nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodyFile {
    Polytope {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(rename = "R")]
        radius: f64,
    },
    Spectrahedron {
        mats: Vec<Vec<Vec<f64>>>,
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        #[serde(rename = "R")]
        radius: f64,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput(format!("{what} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TryFrom<BodyFile> for Body {
    type Error = Error;

    fn try_from(file: BodyFile) -> Result<Self> {
        match file {
            BodyFile::Polytope { a, b, radius } => {
                let a = matrix_from_rows(&a, "A")?;
                Ok(Polytope::new(a, DVector::from_vec(b), radius)?.into())
            }
            BodyFile::Spectrahedron { mats, c, radius } => {
                let mats = mats
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix_from_rows(m, &format!("mats[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let c = matrix_from_rows(&c, "C")?;
                Ok(Spectrahedron::new(mats, c, radius)?.into())
            }
        }
    }
}

impl From<&Body> for BodyFile {
    fn from(body: &Body) -> Self {
        match body {
            Body::Polytope(p) => BodyFile::Polytope {
                a: rows_of(p.a()),
                b: p.b().iter().copied().collect(),
                radius: p.radius(),
            },
            Body::Spectrahedron(s) => BodyFile::Spectrahedron {
                mats: s.mats().iter().map(|m| rows_of(m.matrix())).collect(),
                c: rows_of(s.c().matrix()),
                radius: s.radius(),
            },
        }
    }
}
