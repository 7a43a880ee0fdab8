use cbinfluence::matnum::{haar_unitary, polar, Side};
use cbinfluence::{Seed, SquareMatrix, C64};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

const N: usize = 64;
const SAMPLES: u64 = 10_000;

fn ginibre(n: usize, seed: &Seed) -> SquareMatrix {
    let mut rng = seed.rng();
    SquareMatrix::from_array(Array2::from_shape_fn((n, n), |_| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }))
    .unwrap()
}

/// Means of `tr_N(W^k)` and `|tr_N(W^k)|²` for `k = 1, 2, 3`.
fn power_trace_stats(sample: impl Fn(u64) -> SquareMatrix) -> [(C64, f64); 3] {
    let mut acc = [(C64::new(0.0, 0.0), 0.0); 3];
    for t in 0..SAMPLES {
        let w = sample(t);
        let mut power = w.clone();
        for slot in acc.iter_mut() {
            let tr = power.normalized_trace();
            slot.0 += tr;
            slot.1 += tr.norm_sqr();
            power = &power * &w;
        }
    }
    acc.map(|(m, s)| (m / SAMPLES as f64, s / SAMPLES as f64))
}

#[test]
fn haar_power_traces_and_left_invariance() {
    let seed = Seed::new(2024);
    let v = haar_unitary(N, &Seed::new(7));
    let plain = power_trace_stats(|t| haar_unitary(N, &seed.child(t)));
    let rotated = power_trace_stats(|t| &v * &haar_unitary(N, &seed.child(SAMPLES + t)));
    let n2 = (N * N) as f64;
    for (k, (a, b)) in plain.iter().zip(&rotated).enumerate() {
        // E tr_N(U^k) = 0 and E |tr_N(U^k)|² = k / N² for k ≤ N; each mean has
        // standard error about √(k/(2·SAMPLES))/N per component.
        let k1 = (k + 1) as f64;
        let se = (k1 / (2.0 * SAMPLES as f64)).sqrt() / N as f64;
        for stats in [a, b] {
            assert!(stats.0.re.abs() <= 5.0 * se && stats.0.im.abs() <= 5.0 * se, "k = {}: {:?}", k + 1, stats.0);
            assert!((stats.1 * n2 / k1 - 1.0).abs() <= 0.06, "k = {}: {}", k + 1, stats.1 * n2);
        }
    }
}

#[test]
fn polar_psd_invariant_under_left_unitary() {
    for k in 0..4 {
        let seed = Seed::new(31).child(k);
        let m = ginibre(24, &seed.child(0));
        let v = haar_unitary(24, &seed.child(1));
        let p1 = polar(&m, Side::Left).unwrap().psd;
        let p2 = polar(&(&v * &m), Side::Left).unwrap().psd;
        let diff = (&p1.as_array().clone() - p2.as_array()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-9, "{diff}");
    }
}

#[test]
fn operator_norm_unitarily_invariant_and_submultiplicative() {
    for k in 0..6 {
        let seed = Seed::new(32).child(k);
        let a = ginibre(32, &seed.child(0));
        let b = ginibre(32, &seed.child(1));
        let v = haar_unitary(32, &seed.child(2));
        let na = a.operator_norm();
        assert!((na - (&v * &a).operator_norm()).abs() <= 1e-10 * na);
        assert!((na - (&a * &v).operator_norm()).abs() <= 1e-10 * na);
        assert!((&a * &b).operator_norm() <= na * b.operator_norm() * (1.0 + 1e-12));
        assert!((na - a.operator_norm_svd()).abs() <= 1e-9 * na);
    }
}
