//! Log-concave targets `π ∝ e^{−f}` restricted to a body.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Convex potential `f` with `π ∝ e^{−f}`.
pub trait Potential: Send + Sync {
    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    /// True when `f` is constant, so chords can be sampled uniformly.
    fn is_constant(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Uniform;

impl Potential for Uniform {
    fn value(&self, _: &DVector<f64>) -> Result<f64> {
        Ok(0.0)
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// `f(x) = c^T x`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub c: DVector<f64>,
}

impl Potential for Linear {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.c.len(), x)?;
        Ok(self.c.dot(x))
    }
}

/// `f(x) = ½ x^T Q x` with `Q` positive semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub q: SymMatrix,
}

impl Potential for Quadratic {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.q.dim(), x)?;
        Ok(0.5 * x.dot(&(self.q.matrix() * x)))
    }
}

pub struct FnPotential<F>(pub F);

impl<F> Potential for FnPotential<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((self.0)(x))
    }
}

fn check_dim(expected: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

/// A potential together with its Lipschitz constant `L`, warm-start
/// parameter `w`, and target total-variation distance `δ`.
#[derive(Clone)]
pub struct Target {
    potential: Arc<dyn Potential>,
    lipschitz: f64,
    warm: f64,
    delta_tv: f64,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Target")
            .field("lipschitz", &self.lipschitz)
            .field("warm", &self.warm)
            .field("delta_tv", &self.delta_tv)
            .field("constant", &self.potential.is_constant())
            .finish()
    }
}

impl Target {
    pub fn new(potential: Arc<dyn Potential>, lipschitz: f64, warm: f64, delta_tv: f64) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidInput(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        if !(warm > 0.0 && warm.is_finite()) {
            return Err(Error::InvalidInput(format!("warm-start parameter must be positive, got {warm}")));
        }
        if !(delta_tv > 0.0 && delta_tv < 1.0) {
            return Err(Error::InvalidInput(format!("delta_tv must lie in (0, 1), got {delta_tv}")));
        }
        Ok(Self {
            potential,
            lipschitz,
            warm,
            delta_tv,
        })
    }

    pub fn uniform() -> Self {
        Self::new(Arc::new(Uniform), 0.0, 2.0, 0.01).expect("valid defaults")
    }

    /// `f(x) = c^T x` with `L = ‖c‖`.
    pub fn linear(c: DVector<f64>) -> Self {
        let l = c.norm();
        Self::new(Arc::new(Linear { c }), l, 2.0, 0.01).expect("valid defaults")
    }

    /// `f(x) = ½ x^T Q x`; on a body of radius `R`, `L = ‖Q‖₂ · R`.
    pub fn quadratic(q: SymMatrix, radius: f64) -> Result<Self> {
        let f = q.factorize()?;
        if f.min_eigenvalue() < -1e-12 * f.max_eigenvalue().abs().max(1.0) {
            return Err(Error::InvalidInput("quadratic potential needs a PSD matrix".into()));
        }
        let norm = f.eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self::new(Arc::new(Quadratic { q }), norm * radius, 2.0, 0.01)
    }

    pub fn from_fn<F>(f: F, lipschitz: f64) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnPotential(f)), lipschitz, 2.0, 0.01)
    }

    pub fn with_warm(self, warm: f64) -> Result<Self> {
        Self::new(self.potential, self.lipschitz, warm, self.delta_tv)
    }

    pub fn with_delta_tv(self, delta_tv: f64) -> Result<Self> {
        Self::new(self.potential, self.lipschitz, self.warm, delta_tv)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn warm(&self) -> f64 {
        self.warm
    }

    pub fn delta_tv(&self) -> f64 {
        self.delta_tv
    }

    pub fn is_uniform(&self) -> bool {
        self.potential.is_constant()
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    /// `f(x)`, erroring on non-finite values.
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        let v = self.potential.value(x)?;
        if !v.is_finite() {
            return Err(Error::Oracle(format!("potential returned {v} at {:?}", x.as_slice())));
        }
        Ok(v)
    }
}

/// Convenience for building `Q` from rows.
pub fn quadratic_from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidMatrix("quadratic form must be square".into()));
    }
    SymMatrix::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let x = DVector::from_vec(vec![1.0, -2.0]);
        assert_eq!(Target::uniform().eval(&x).unwrap(), 0.0);
        assert!(Target::uniform().is_uniform());

        let t = Target::linear(DVector::from_vec(vec![3.0, 4.0]));
        assert_eq!(t.lipschitz(), 5.0);
        assert_eq!(t.eval(&x).unwrap(), -5.0);
        assert!(!t.is_uniform());

        let q = quadratic_from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = Target::quadratic(q, 3.0).unwrap();
        assert_eq!(t.lipschitz(), 6.0);
        assert_eq!(t.eval(&x).unwrap(), 0.5 * (2.0 + 4.0));
    }

    #[test]
    fn validation() {
        assert!(Target::uniform().with_warm(0.0).is_err());
        assert!(Target::uniform().with_delta_tv(1.0).is_err());
        assert!(Target::from_fn(|_| 0.0, -1.0).is_err());
        let q = quadratic_from_rows(&[vec![-1.0]]).unwrap();
        assert!(Target::quadratic(q, 1.0).is_err());
        let bad = Target::from_fn(|_| f64::NAN, 0.0).unwrap();
        assert!(matches!(bad.eval(&DVector::zeros(1)), Err(Error::Oracle(_))));
        assert!(Target::linear(DVector::zeros(3)).eval(&DVector::zeros(2)).is_err());
    }
}
