use ndarray::{s, Array2};
use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{SquareMatrix, C64};

/// Residual target for every polar factorization.
pub const POLAR_TOL: f64 = 1e-10;

/// `Left` is `M = U·P`, `Right` is `M = P·U`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct PolarFactors {
    pub unitary: SquareMatrix,
    pub psd: SquareMatrix,
    pub side: Side,
}

impl PolarFactors {
    pub fn reconstruct(&self) -> SquareMatrix {
        match self.side {
            Side::Left => &self.unitary * &self.psd,
            Side::Right => &self.psd * &self.unitary,
        }
    }
}

/// Polar decomposition through the singular value decomposition `M = W Σ V*`.
///
/// `U = W V*`; `P = V Σ V*` (left) or `W Σ W*` (right). On the null space of a
/// rank-deficient `M` any unitary completion is valid; the one closest to the
/// identity is chosen, so e.g. `diag(2, 0)` gives `U = I`.
///
/// Fails with [`Error::Numerical`] if unitarity or reconstruction residuals
/// exceed `1e-10`.
pub fn polar(m: &SquareMatrix, side: Side) -> Result<PolarFactors> {
    let n = m.dim();
    let a = m.as_array();
    let (w, sv, vt) = a.svd(true, true)?;
    let (mut w, vt) = (w.expect("left singular vectors"), vt.expect("right singular vectors"));
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = smax * n as f64 * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > tol).count();

    if rank < n {
        // Null-space block: U acts as W_0 R V_0*, with R maximizing Re tr(R·V_0* W_0).
        let w0 = w.slice(s![.., rank..]).to_owned();
        let v0_adj = vt.slice(s![rank.., ..]).to_owned();
        let c = v0_adj.dot(&w0);
        let (a_c, _, b_c_adj) = c.svd(true, true)?;
        let r = adjoint(&b_c_adj.expect("vectors")).dot(&adjoint(&a_c.expect("vectors")));
        let rotated = w0.dot(&r);
        w.slice_mut(s![.., rank..]).assign(&rotated);
    }

    let unitary = w.dot(&vt);
    let psd = match side {
        Side::Left => scale_rows_then(&adjoint(&vt), &sv.to_vec(), &vt),
        Side::Right => scale_rows_then(&w, &sv.to_vec(), &adjoint(&w)),
    };
    let psd = hermitize(psd);

    let factors = PolarFactors {
        unitary: SquareMatrix::from_array(unitary)?,
        psd: SquareMatrix::from_array(psd)?,
        side,
    };
    let unit_res = factors.unitary.unitarity_residual();
    if unit_res > POLAR_TOL {
        return Err(Error::Numerical(format!(
            "polar unitary factor residual {unit_res:e} above {POLAR_TOL:e}"
        )));
    }
    let mnorm = m.frobenius_norm();
    if mnorm > 0.0 {
        let mut diff = factors.reconstruct();
        diff.add_scaled(-1.0, m);
        let rel = diff.frobenius_norm() / mnorm;
        if rel > POLAR_TOL {
            return Err(Error::Numerical(format!(
                "polar reconstruction error {rel:e} above {POLAR_TOL:e}"
            )));
        }
    }
    Ok(factors)
}

fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `X · diag(s) · Y`.
fn scale_rows_then(x: &Array2<C64>, s: &[f64], y: &Array2<C64>) -> Array2<C64> {
    let mut xs = x.clone();
    for (k, &sk) in s.iter().enumerate() {
        xs.column_mut(k).mapv_inplace(|z| z * sk);
    }
    xs.dot(y)
}

fn hermitize(p: Array2<C64>) -> Array2<C64> {
    let ph = adjoint(&p);
    (p + ph) * C64::new(0.5, 0.0)
}
