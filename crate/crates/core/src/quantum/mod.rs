//! Query algorithms of the alternating form
//! `T(x) = uᵀ U_1 (O_{x_1} ⊗ I_s) U_2 (O_{x_2} ⊗ I_s) ⋯ U_d (O_{x_d} ⊗ I_s) v`
//! with real orthogonal `U_k`, and the degree-`d` form they compute.
//!
//! The state index `(i, k)`, `i ∈ [n]`, `k ∈ [s]`, is stored at `i·s + k`.

mod gen;
mod lift;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BlockMultilinearForm, CubePoint, Monomial};

pub use gen::{gen_address_form, gen_forrelation_circuit, gen_random_circuit, hadamard};
pub use lift::{lift_general_algorithm, GeneralQueryAlgorithm};

/// Residual allowed on `‖U Uᵀ − I‖_F` and on `|‖u‖ − 1|`.
pub const CIRCUIT_TOL: f64 = 1e-10;

/// Default bound on `n·d` for Fourier-inversion extraction.
pub const DEFAULT_EXTRACT_CAP: usize = 20;

/// Bound on `n^d` for the algebraic expansion.
pub const MAX_ALGEBRAIC_TERMS: u128 = 1 << 22;

/// Fourier-inversion coefficients at or below this magnitude are dropped.
pub const FOURIER_ZERO_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumQueryCircuit {
    n: usize,
    s: usize,
    u: Array1<f64>,
    v: Array1<f64>,
    unitaries: Vec<Array2<f64>>,
}

pub(crate) fn orthogonality_residual(a: &Array2<f64>) -> f64 {
    let mut g = a.dot(&a.t());
    for k in 0..a.nrows() {
        g[(k, k)] -= 1.0;
    }
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn check_state(v: &Array1<f64>, dim: usize, name: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::InvalidCircuit(format!(
            "{name} has length {}, expected {dim}",
            v.len()
        )));
    }
    let norm = v.dot(v).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > CIRCUIT_TOL {
        return Err(Error::InvalidCircuit(format!("{name} has norm {norm}, expected 1")));
    }
    Ok(())
}

pub(crate) fn check_orthogonal(a: &Array2<f64>, dim: usize, name: &str) -> Result<()> {
    if a.dim() != (dim, dim) {
        return Err(Error::InvalidCircuit(format!(
            "{name} is {}×{}, expected {dim}×{dim}",
            a.nrows(),
            a.ncols()
        )));
    }
    let res = orthogonality_residual(a);
    if !res.is_finite() || res > CIRCUIT_TOL {
        return Err(Error::InvalidCircuit(format!("{name} has orthogonality residual {res:e}")));
    }
    Ok(())
}

impl QuantumQueryCircuit {
    /// Validates dimensions, unit norms of `u`, `v` and orthogonality of every `U_k`.
    pub fn new(n: usize, s: usize, u: Array1<f64>, v: Array1<f64>, unitaries: Vec<Array2<f64>>) -> Result<Self> {
        if n == 0 || s == 0 || unitaries.is_empty() {
            return Err(Error::InvalidCircuit("n, s and d must be positive".into()));
        }
        let dim = n * s;
        check_state(&u, dim, "u")?;
        check_state(&v, dim, "v")?;
        for (k, a) in unitaries.iter().enumerate() {
            check_orthogonal(a, dim, &format!("U{}", k + 1))?;
        }
        Ok(QuantumQueryCircuit { n, s, u, v, unitaries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Number of queries.
    pub fn d(&self) -> usize {
        self.unitaries.len()
    }

    pub fn dim(&self) -> usize {
        self.n * self.s
    }

    pub fn start(&self) -> &Array1<f64> {
        &self.u
    }

    pub fn end(&self) -> &Array1<f64> {
        &self.v
    }

    pub fn unitaries(&self) -> &[Array2<f64>] {
        &self.unitaries
    }

    /// `T(x)`, applied right to left as matrix-vector products.
    pub fn eval(&self, x: &CubePoint) -> Result<f64> {
        if x.d() != self.d() || x.n() != self.n {
            return Err(Error::mismatch(
                format!("point in {{±1}}^({}×{})", self.n, self.d()),
                format!("{}×{}", x.n(), x.d()),
            ));
        }
        let mut w = self.v.clone();
        for b in (0..self.d()).rev() {
            for (slot, wk) in w.iter_mut().enumerate() {
                if x.get(b, slot / self.s) < 0 {
                    *wk = -*wk;
                }
            }
            w = self.unitaries[b].dot(&w);
        }
        Ok(self.u.dot(&w))
    }

    /// `T` on every point of the cube, indexed by [`CubePoint::to_mask`].
    pub fn cube_values(&self, cap: usize) -> Result<Vec<f64>> {
        let vars = self.n * self.d();
        if vars > cap || vars > 63 {
            return Err(Error::CapExceeded {
                what: "n·d",
                value: vars as u128,
                cap: cap.min(63) as u128,
            });
        }
        (0..1u64 << vars)
            .into_par_iter()
            .map(|mask| self.eval(&CubePoint::from_mask(self.d(), self.n, mask)))
            .collect()
    }

    /// Coefficients `f̂_{i_1…i_d} = uᵀ U_1 (E_{i_1} ⊗ I) U_2 ⋯ U_d (E_{i_d} ⊗ I) v`,
    /// expanded depth-first over the index tuples.
    pub fn extract_form(&self) -> Result<BlockMultilinearForm> {
        let d = self.d() as u32;
        let count = (self.n as u128).checked_pow(d).unwrap_or(u128::MAX);
        if count > MAX_ALGEBRAIC_TERMS {
            return Err(Error::CapExceeded {
                what: "n^d",
                value: count,
                cap: MAX_ALGEBRAIC_TERMS,
            });
        }
        let mut f = BlockMultilinearForm::new(self.d(), self.n)?;
        let row = self.unitaries[0].t().dot(&self.u);
        let mut indices = Vec::with_capacity(self.d());
        self.expand(&row, &mut indices, &mut f)?;
        Ok(f)
    }

    fn expand(&self, row: &Array1<f64>, indices: &mut Vec<usize>, f: &mut BlockMultilinearForm) -> Result<()> {
        let depth = indices.len();
        let s = self.s;
        for i in 0..self.n {
            let slots = i * s..(i + 1) * s;
            indices.push(i);
            if depth + 1 == self.d() {
                let c: f64 = slots.map(|k| row[k] * self.v[k]).sum();
                if c != 0.0 {
                    let blocks = (0..self.d()).collect();
                    f.add_term(Monomial::new(blocks, indices.clone())?, c)?;
                }
            } else {
                let next_u = &self.unitaries[depth + 1];
                let mut next = Array1::zeros(self.dim());
                for k in slots {
                    if row[k] != 0.0 {
                        next.scaled_add(row[k], &next_u.row(k));
                    }
                }
                self.expand(&next, indices, f)?;
            }
            indices.pop();
        }
        Ok(())
    }

    /// Reference extraction: Walsh–Hadamard inversion of `T` over the whole
    /// cube. Must agree with [`Self::extract_form`] to `1e-12`.
    pub fn extract_form_fourier(&self, cap: usize) -> Result<BlockMultilinearForm> {
        let mut values = self.cube_values(cap)?;
        let vars = self.n * self.d();
        walsh_hadamard(&mut values);
        let scale = 1.0 / (1u64 << vars) as f64;
        let mut f = BlockMultilinearForm::new(self.d(), self.n)?;
        for (set, &raw) in values.iter().enumerate() {
            let c = raw * scale;
            if c.abs() <= FOURIER_ZERO_TOL {
                continue;
            }
            let vars: Vec<(usize, usize)> = (0..vars)
                .filter(|j| set >> j & 1 == 1)
                .map(|j| (j / self.n, j % self.n))
                .collect();
            if vars.is_empty() {
                f.set_constant(c);
                continue;
            }
            let mono = Monomial::from_variables(&vars).map_err(|_| {
                Error::Numerical(format!("coefficient {c:e} on a non block-multilinear set"))
            })?;
            f.add_term(mono, c)?;
        }
        Ok(f)
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
fn walsh_hadamard(a: &mut [f64]) {
    let mut h = 1;
    while h < a.len() {
        for chunk in a.chunks_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (p, q) = (*x, *y);
                *x = p + q;
                *y = p - q;
            }
        }
        h *= 2;
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    n: usize,
    s: usize,
    d: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    unitaries: Vec<Vec<Vec<f64>>>,
}

impl Serialize for QuantumQueryCircuit {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitJson {
            n: self.n,
            s: self.s,
            d: self.d(),
            u: self.u.to_vec(),
            v: self.v.to_vec(),
            unitaries: self
                .unitaries
                .iter()
                .map(|a| a.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuantumQueryCircuit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = CircuitJson::deserialize(deserializer)?;
        if json.unitaries.len() != json.d {
            return Err(D::Error::custom(format!(
                "d = {} but {} unitaries given",
                json.d,
                json.unitaries.len()
            )));
        }
        let dim = json.n * json.s;
        let unitaries = json
            .unitaries
            .into_iter()
            .enumerate()
            .map(|(k, rows)| {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(D::Error::custom(format!("U{} is not {dim}×{dim}", k + 1)));
                }
                Ok(Array2::from_shape_fn((dim, dim), |(i, j)| rows[i][j]))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        QuantumQueryCircuit::new(json.n, json.s, json.u.into(), json.v.into(), unitaries).map_err(D::Error::custom)
    }
}

impl QuantumQueryCircuit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuits always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
