use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::forms::{BlockMultilinearForm, Monomial};
use crate::matnum::{haar_orthogonal, Seed};

use super::QuantumQueryCircuit;

/// The address form on `d` address blocks and one data block, `n = 2^d`:
/// `Σ_a g_a(x_1, …, x_d) · x_{d+1}(addr(a))` with
/// `g_a = Π_b (x_b(1) + (−1)^{a_b} x_b(2)) / 2`.
///
/// `addr(a)` reads `a` most significant bit first; with 0-based indices the
/// data variable of `a` is `x_{d+1}[Σ_b a_b 2^{d−1−b}]`. The form has `4^d`
/// terms, each `±2^{−d}`.
pub fn gen_address_form(d: usize) -> Result<BlockMultilinearForm> {
    if d == 0 || d > 12 {
        return Err(Error::InvalidParameter(format!("address form needs 1 ≤ d ≤ 12, got {d}")));
    }
    let n = 1usize << d;
    let coeff = 1.0 / n as f64;
    let mut f = BlockMultilinearForm::new(d + 1, n)?;
    let blocks: Vec<usize> = (0..=d).collect();
    for a in 0..n {
        // choice bit b set: take x_b(2), which carries the sign (−1)^{a_b}.
        for choice in 0..n {
            let mut indices = Vec::with_capacity(d + 1);
            let mut sign = 1.0;
            for b in 0..d {
                let a_b = a >> (d - 1 - b) & 1;
                if choice >> b & 1 == 1 {
                    indices.push(1);
                    if a_b == 1 {
                        sign = -sign;
                    }
                } else {
                    indices.push(0);
                }
            }
            indices.push(a);
            f.add_term(Monomial::new(blocks.clone(), indices)?, sign * coeff)?;
        }
    }
    Ok(f)
}

/// Normalized Sylvester–Hadamard matrix, `H_ij = (−1)^{popcount(i & j)} / √n`.
pub fn hadamard(n: usize) -> Result<Array2<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("Hadamard size must be a power of two, got {n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if (i & j).count_ones() % 2 == 0 {
            scale
        } else {
            -scale
        }
    }))
}

/// `k`-fold Forrelation: `T(x) = uᵀ O_{x_1} H O_{x_2} H ⋯ H O_{x_k} u` with `u`
/// uniform, i.e. `U_1 = I` and `U_2 = ⋯ = U_k = H`, `s = 1`.
pub fn gen_forrelation_circuit(n: usize, k: usize) -> Result<QuantumQueryCircuit> {
    if k == 0 {
        return Err(Error::InvalidParameter("Forrelation needs k ≥ 1".into()));
    }
    let h = hadamard(n)?;
    let uniform = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut unitaries = vec![Array2::eye(n)];
    unitaries.extend(std::iter::repeat_n(h, k - 1));
    QuantumQueryCircuit::new(n, 1, uniform.clone(), uniform, unitaries)
}

fn random_unit_vector(len: usize, seed: &Seed) -> Array1<f64> {
    let mut rng = seed.rng();
    let v: Array1<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.dot(&v).sqrt();
    v / norm
}

/// Haar-orthogonal `U_k` from `seed.child(k)`, Gaussian-direction `u` and `v`
/// from `seed.child(d)` and `seed.child(d + 1)`.
pub fn gen_random_circuit(n: usize, s: usize, d: usize, seed: &Seed) -> Result<QuantumQueryCircuit> {
    if n == 0 || s == 0 || d == 0 {
        return Err(Error::InvalidParameter("n, s and d must be positive".into()));
    }
    let dim = n * s;
    let unitaries = (0..d).map(|k| haar_orthogonal(dim, &seed.child(k as u64))).collect();
    let u = random_unit_vector(dim, &seed.child(d as u64));
    let v = random_unit_vector(dim, &seed.child(d as u64 + 1));
    QuantumQueryCircuit::new(n, s, u, v, unitaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::CubePoint;

    #[test]
    fn address_form_shape() {
        let f = gen_address_form(2).unwrap();
        assert_eq!((f.d(), f.n()), (3, 4));
        assert_eq!(f.num_terms(), 16);
        assert!(f.terms().all(|(_, c)| c.abs() == 0.25));
        assert!(f.is_homogeneous());
        assert_eq!(f.variance(), 1.0);
        for i in 0..4 {
            assert_eq!(f.influence(2, i), 0.25);
        }
    }

    #[test]
    fn address_form_selects_one_data_bit() {
        // x_b(1) x_b(2) = (−1)^{a_b} picks address a; f = ± x_{d+1}(addr(a)).
        let d = 2;
        let mut x = CubePoint::ones(3, 4);
        x.set(0, 1, -1); // a_1 = 1
        x.set(1, 1, 1); // a_2 = 0, so addr = 0b10
        for i in 0..4 {
            x.set(2, i, if i == 2 { -1 } else { 1 });
        }
        let f = gen_address_form(d).unwrap();
        assert_eq!(f.evaluate(&x).unwrap(), -1.0);
        x.set(2, 2, 1);
        assert_eq!(f.evaluate(&x).unwrap(), 1.0);
    }

    #[test]
    fn forrelation_values() {
        let c = gen_forrelation_circuit(4, 2).unwrap();
        assert!((c.eval(&CubePoint::ones(2, 4)).unwrap() - 0.5).abs() <= 1e-15);
        let f = c.extract_form().unwrap();
        assert_eq!(f.num_terms(), 16);
        assert!(f.terms().all(|(_, c)| (c.abs() - 0.125).abs() <= 1e-15));
        assert!((f.variance() - 0.25).abs() <= 1e-15);
        let f2 = gen_forrelation_circuit(2, 2).unwrap().extract_form().unwrap();
        let want = 2f64.powf(-1.5);
        for (m, c) in f2.terms() {
            let sign = if m.indices()[0] & m.indices()[1] == 1 { -1.0 } else { 1.0 };
            assert!((c - sign * want).abs() <= 1e-15);
        }
    }

    #[test]
    fn bad_generator_parameters() {
        assert!(gen_forrelation_circuit(3, 2).is_err());
        assert!(gen_forrelation_circuit(4, 0).is_err());
        assert!(gen_address_form(0).is_err());
        assert!(gen_random_circuit(0, 1, 1, &Seed::new(0)).is_err());
    }
}
