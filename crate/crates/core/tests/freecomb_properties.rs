use cbinfluence::freecomb::{
    consistent_pairings, count_star_pairings, enumerate_star_pairings, fuss_catalan, moment_upper_bound, moment_word,
    phi, reduce, reduce_random_order, trace_moment_exact, Letter, MomentValue, Word, DEFAULT_MOMENT_CAP,
    DEFAULT_PAIRING_CAP,
};
use cbinfluence::matnum::haar_unitary;
use cbinfluence::ncpoly::{evaluate_nc_nested, NCPolynomial, VariableAssignment};
use cbinfluence::Seed;
use rand::Rng;

fn random_word<R: Rng>(rng: &mut R) -> Word {
    let t = rng.random_range(1..=4);
    let len = rng.random_range(0..=20);
    Word::new(
        (0..len)
            .map(|_| Letter::new(rng.random_range(0..t), rng.random()))
            .collect(),
    )
}

/// Homogeneous polynomial with small nonzero integer coefficients.
fn integer_polynomial<R: Rng>(d: usize, t: usize, terms: usize, rng: &mut R) -> NCPolynomial {
    let mut p = NCPolynomial::new();
    while p.num_terms() < terms {
        let word: Vec<usize> = (0..d).map(|_| rng.random_range(0..t)).collect();
        let c = rng.random_range(1..=3) as f64 * if rng.random() { 1.0 } else { -1.0 };
        p.add_term(word, c);
    }
    p
}

fn all_tuples(d: usize, t: usize) -> Vec<Vec<usize>> {
    (0..t.pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let g = k % t;
                    k /= t;
                    g
                })
                .collect()
        })
        .collect()
}

#[test]
fn reduction_is_confluent() {
    let mut rng = Seed::new(100).rng();
    for _ in 0..100_000 {
        let w = random_word(&mut rng);
        let canonical = reduce(&w);
        assert!(canonical.is_reduced());
        assert_eq!(reduce_random_order(&w, &mut rng), canonical, "{w}");
    }
}

#[test]
fn pairing_counts_are_fuss_catalan() {
    for d in 1..=3 {
        for m in 1..=4 {
            let pairings = enumerate_star_pairings(d, m, DEFAULT_PAIRING_CAP).unwrap();
            assert!(pairings.iter().all(|p| p.is_valid()));
            let count = fuss_catalan(d, m).unwrap();
            assert_eq!(pairings.len() as u128, count, "d = {d}, m = {m}");
            assert_eq!(count_star_pairings(d, m, DEFAULT_PAIRING_CAP).unwrap(), count);
        }
    }
}

#[test]
fn trace_identity_and_moment_bound_exact() {
    let mut rng = Seed::new(101).rng();
    let mut checked = 0;
    for _ in 0..120 {
        let d = rng.random_range(1..=2);
        let t: usize = rng.random_range(1..=3);
        let max_terms = t.pow(d as u32).min(4);
        let p = integer_polynomial(d, t, rng.random_range(1..=max_terms), &mut rng);
        let norm_sq: i128 = p.terms().map(|(_, c)| (c * c) as i128).sum();
        assert_eq!(trace_moment_exact(&p, 1, DEFAULT_MOMENT_CAP).unwrap(), MomentValue::Integer(norm_sq));
        for m in 1..=3 {
            let (MomentValue::Integer(moment), MomentValue::Integer(bound)) = (
                trace_moment_exact(&p, m, DEFAULT_MOMENT_CAP).unwrap(),
                moment_upper_bound(&p, m).unwrap(),
            ) else {
                panic!("integer coefficients must give exact moments");
            };
            assert!(0 <= moment && moment <= bound, "m = {m}: {moment} > {bound}");
            checked += 1;
        }
    }
    assert_eq!(checked, 360);
}

#[test]
fn nonzero_moment_words_have_consistent_pairings() {
    let (d, m, t) = (2, 2, 2);
    let tuples = all_tuples(d, t);
    let mut nonzero = 0;
    for a in &tuples {
        for b in &tuples {
            for c in &tuples {
                for e in &tuples {
                    let choice = [a.clone(), b.clone(), c.clone(), e.clone()];
                    let pairings = consistent_pairings(&choice, d, m, DEFAULT_PAIRING_CAP).unwrap();
                    if phi(&moment_word(&choice)) == 1 {
                        nonzero += 1;
                        assert!(!pairings.is_empty(), "{choice:?}");
                    }
                }
            }
        }
    }
    assert!(nonzero > 0);
}

#[test]
fn exact_moments_match_haar_matrices_at_1024() {
    const N: usize = 1024;
    let mut a = VariableAssignment::new(N);
    for j in 0..3 {
        a.insert(j, haar_unitary(N, &Seed::new(102).child(j as u64))).unwrap();
    }
    let polys = [
        NCPolynomial::from_terms([(vec![0], 1.0), (vec![1], -2.0), (vec![2], 1.0)]),
        NCPolynomial::from_terms([(vec![0, 1], 1.0), (vec![1, 0], 1.0), (vec![2, 2], -1.0)]),
    ];
    for p in &polys {
        // Unit ‖p‖₂, so the absolute tolerance is on the natural scale.
        let scale = 1.0 / p.l2_norm();
        let p = &NCPolynomial::from_terms(p.terms().map(|(w, c)| (w.to_vec(), c * scale)));
        let pm = evaluate_nc_nested(p, &a).unwrap();
        let q = &pm * &pm.adjoint();
        let mut power = q.clone();
        for m in 1..=2 {
            let exact = trace_moment_exact(p, m, DEFAULT_MOMENT_CAP).unwrap().as_f64();
            let tr = power.normalized_trace();
            assert!((tr.re - exact).abs() <= 0.05 && tr.im.abs() <= 1e-8, "m = {m}: {tr} vs {exact}");
            if m == 1 {
                power = &power * &q;
            }
        }
    }
}
