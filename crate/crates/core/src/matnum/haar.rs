use ndarray::Array2;
use ndarray_linalg::QR;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Seed, SquareMatrix, C64};

/// Haar-distributed `N × N` unitary.
///
/// QR of a complex Ginibre matrix, with the phases of `diag(R)` moved into `Q`
/// (`Q ← Q·diag(r_kk / |r_kk|)`). Without that correction the law of `Q`
/// depends on the QR sign convention and is not Haar.
pub fn haar_unitary(n: usize, seed: &Seed) -> SquareMatrix {
    assert!(n >= 1, "dimension must be positive");
    let mut rng = seed.rng();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = Array2::from_shape_fn((n, n), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let (mut q, r) = g.qr().expect("QR of a Ginibre matrix");
    for k in 0..n {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(k).mapv_inplace(|z| z * phase);
    }
    SquareMatrix::from_array(q).expect("finite unitary")
}

/// Haar-distributed real orthogonal matrix (sign-corrected QR of a real Gaussian matrix).
pub fn haar_orthogonal(n: usize, seed: &Seed) -> Array2<f64> {
    assert!(n >= 1, "dimension must be positive");
    let mut rng = seed.rng();
    let g = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
    let (mut q, r) = g.qr().expect("QR of a Gaussian matrix");
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).mapv_inplace(|x| -x);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_is_a_phase() {
        for k in 0..20 {
            let u = haar_unitary(1, &Seed::new(k));
            assert!((u.as_array()[(0, 0)].norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn unitary_to_working_precision() {
        let u = haar_unitary(64, &Seed::new(3));
        assert!(u.unitarity_residual() <= 1e-12);
        let o = haar_orthogonal(16, &Seed::new(4));
        let g = o.dot(&o.t()) - Array2::<f64>::eye(16);
        assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-12);
    }

    #[test]
    fn reproducible() {
        let a = haar_unitary(8, &Seed::new(5).child(1));
        let b = haar_unitary(8, &Seed::new(5).child(1));
        let c = haar_unitary(8, &Seed::new(5).child(2));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn phase_correction_makes_diag_r_positive() {
        // Q*G is the corrected R factor and must have a positive real diagonal.
        let seed = Seed::new(11);
        let u = haar_unitary(6, &seed);
        let mut rng = seed.rng();
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let g = Array2::from_shape_fn((6, 6), |_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * scale, im * scale)
        });
        let r = u.adjoint().as_array().dot(&g);
        for k in 0..6 {
            assert!(r[(k, k)].re > 0.0);
            assert!(r[(k, k)].im.abs() < 1e-12);
            for j in 0..k {
                assert!(r[(k, j)].norm() < 1e-12);
            }
        }
    }
}
