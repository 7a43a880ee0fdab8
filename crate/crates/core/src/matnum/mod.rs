//! Dense complex matrices: Haar sampling, polar decomposition, operator norm
//! and normalized trace.
//!
//! Products and factorizations go through the BLAS/LAPACK backend of
//! `ndarray-linalg`.

mod haar;
mod polar;
mod seed;

use std::ops::{Add, Mul};

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use haar::{haar_orthogonal, haar_unitary};
pub use polar::{polar, PolarFactors, Side};
pub use seed::Seed;

pub type C64 = Complex64;

/// Relative tolerance on the Rayleigh quotient of the power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-12;

/// Power-iteration steps tried by [`SquareMatrix::operator_norm`] before the SVD.
pub const POWER_ITERATION_BUDGET: usize = 100;

/// An `N × N` complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix(Array2<C64>);

impl SquareMatrix {
    pub fn from_array(a: Array2<C64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c || r == 0 {
            return Err(Error::mismatch("non-empty square matrix", format!("{r}×{c}")));
        }
        if a.iter().any(|z| !z.is_finite()) {
            return Err(Error::Numerical("matrix has non-finite entries".into()));
        }
        Ok(SquareMatrix(a))
    }

    pub fn from_real(a: &Array2<f64>) -> Result<Self> {
        Self::from_array(a.mapv(|x| C64::new(x, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        SquareMatrix(Array2::eye(n))
    }

    pub fn zeros(n: usize) -> Self {
        SquareMatrix(Array2::zeros((n, n)))
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        SquareMatrix(Array2::from_diag_elem(n, c))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        SquareMatrix(Array2::from_diag(&Array1::from(diag.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        SquareMatrix(self.0.t().mapv(|z| z.conj()))
    }

    pub fn scaled(&self, c: C64) -> Self {
        SquareMatrix(&self.0 * c)
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &SquareMatrix) {
        self.0.scaled_add(C64::new(c, 0.0), &other.0);
    }

    /// `tr_N(M) = (1/N) Σ M_ii`.
    pub fn normalized_trace(&self) -> C64 {
        self.0.diag().sum() / self.dim() as f64
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M M* − I‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        let mut g = self.0.dot(&self.0.t().mapv(|z| z.conj()));
        for k in 0..self.dim() {
            g[(k, k)] -= C64::new(1.0, 0.0);
        }
        g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let (_, s, _) = self.0.svd(false, false)?;
        Ok(s.to_vec())
    }

    /// Largest singular value.
    ///
    /// Power iteration on `M*M` from a fixed pseudo-random start vector, stopping
    /// when the Rayleigh quotient changes by at most [`POWER_ITERATION_TOL`]
    /// relative. At most `min(10·N, POWER_ITERATION_BUDGET)` steps are tried
    /// before falling back to the full singular value decomposition: with a
    /// small spectral gap the full `10·N` steps cost far more than the SVD.
    pub fn operator_norm(&self) -> f64 {
        match self.operator_norm_power((10 * self.dim()).min(POWER_ITERATION_BUDGET)) {
            Some(norm) => norm,
            None => self.operator_norm_svd(),
        }
    }

    /// The decomposition path; used as the fallback and as a test oracle.
    pub fn operator_norm_svd(&self) -> f64 {
        self.singular_values()
            .map(|s| s.first().copied().unwrap_or(0.0))
            .expect("SVD of a finite square matrix")
    }

    /// `None` when the iteration cap is reached.
    pub fn operator_norm_power(&self, max_iter: usize) -> Option<f64> {
        let n = self.dim();
        let mut rng = Seed::new(0x5eed_0f0b).rng();
        let mut v: Array1<C64> = (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v /= C64::new(norm, 0.0);
        let adj = self.0.t();
        let mut prev = f64::NAN;
        for _ in 0..max_iter {
            let w = self.0.dot(&v);
            let rayleigh: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            if rayleigh == 0.0 {
                // v lies in the kernel; let the decomposition settle it.
                return None;
            }
            if (rayleigh - prev).abs() <= POWER_ITERATION_TOL * rayleigh {
                return Some(rayleigh.sqrt());
            }
            prev = rayleigh;
            let z = adj.dot(&w.mapv(|c| c.conj())).mapv(|c| c.conj());
            let znorm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v = z / C64::new(znorm, 0.0);
        }
        None
    }

    /// Row-major `[re, im]` pairs, for debug dumps.
    pub fn to_flat_pairs(&self) -> Vec<[f64; 2]> {
        self.0.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;

    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim(), rhs.dim(), "matrix dimensions differ");
        SquareMatrix(self.0.dot(&rhs.0))
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;

    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim(), rhs.dim(), "matrix dimensions differ");
        SquareMatrix(&self.0 + &rhs.0)
    }
}

/// `‖M‖_op` of a square matrix.
pub fn operator_norm(m: &SquareMatrix) -> f64 {
    m.operator_norm()
}

/// `tr_N(M)`.
pub fn normalized_trace(m: &SquareMatrix) -> C64 {
    m.normalized_trace()
}
