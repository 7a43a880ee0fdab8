use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};

use super::{check_orthogonal, check_state, QuantumQueryCircuit};

/// A `d`-query algorithm that queries the same `z ∈ {±1}^m` every time:
/// `A(z) = uᵀ U_1 Q_z U_2 Q_z ⋯ U_d Q_z v` with `Q_z = (O_z ⊗ I_s) ⊕ I_r`.
///
/// The `r`-dimensional summand is where the oracle acts trivially, e.g. the
/// control-off half of a controlled query. State index `(i, k)` sits at
/// `i·s + k`, followed by the `r` free coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralQueryAlgorithm {
    m: usize,
    s: usize,
    free_dim: usize,
    u: Array1<f64>,
    v: Array1<f64>,
    unitaries: Vec<Array2<f64>>,
}

impl GeneralQueryAlgorithm {
    pub fn new(
        m: usize,
        s: usize,
        free_dim: usize,
        u: Array1<f64>,
        v: Array1<f64>,
        unitaries: Vec<Array2<f64>>,
    ) -> Result<Self> {
        if m == 0 || s == 0 || unitaries.is_empty() {
            return Err(Error::InvalidCircuit("m, s and d must be positive".into()));
        }
        let dim = m * s + free_dim;
        check_state(&u, dim, "u")?;
        check_state(&v, dim, "v")?;
        for (k, a) in unitaries.iter().enumerate() {
            check_orthogonal(a, dim, &format!("U{}", k + 1))?;
        }
        Ok(GeneralQueryAlgorithm {
            m,
            s,
            free_dim,
            u,
            v,
            unitaries,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.unitaries.len()
    }

    /// `A(z)` for `z ∈ {±1}^m`.
    pub fn eval(&self, z: &[i8]) -> Result<f64> {
        if z.len() != self.m {
            return Err(Error::mismatch(format!("input of length {}", self.m), z.len()));
        }
        let mut w = self.v.clone();
        for a in self.unitaries.iter().rev() {
            for (slot, wk) in w.iter_mut().take(self.m * self.s).enumerate() {
                if z[slot / self.s] < 0 {
                    *wk = -*wk;
                }
            }
            w = a.dot(&w);
        }
        Ok(self.u.dot(&w))
    }
}

/// Rewrites `A` with independent oracle blocks `x_b ∈ {±1}^{m+1}` so that
/// `T((z, 1), …, (z, 1)) = A(z)`.
///
/// The lifted workspace multiplier is `s' = max(s, r)`. Coordinate `(i, k)`
/// with `i < m, k < s` keeps its role, the free coordinates go to index `m`
/// (where the oracle bit is fixed to 1), and all other coordinates are
/// padding on which every lifted unitary is the identity.
pub fn lift_general_algorithm(a: &GeneralQueryAlgorithm) -> Result<QuantumQueryCircuit> {
    let (m, s, r) = (a.m, a.s, a.free_dim);
    let s2 = s.max(r);
    let n2 = m + 1;
    let dim2 = n2 * s2;
    let embed = |old: usize| -> usize {
        if old < m * s {
            (old / s) * s2 + old % s
        } else {
            m * s2 + (old - m * s)
        }
    };
    let old_dim = m * s + r;
    let image: Vec<usize> = (0..old_dim).map(embed).collect();
    let lift_vec = |v: &Array1<f64>| {
        let mut out = Array1::zeros(dim2);
        for (k, &j) in image.iter().enumerate() {
            out[j] = v[k];
        }
        out
    };
    let lift_mat = |u: &Array2<f64>| {
        let mut out = Array2::eye(dim2);
        for &j in &image {
            out.slice_mut(s![j, ..]).fill(0.0);
        }
        for (k, &j) in image.iter().enumerate() {
            for (l, &jl) in image.iter().enumerate() {
                out[(j, jl)] = u[(k, l)];
            }
        }
        out
    };
    QuantumQueryCircuit::new(
        n2,
        s2,
        lift_vec(&a.u),
        lift_vec(&a.v),
        a.unitaries.iter().map(lift_mat).collect(),
    )
}
