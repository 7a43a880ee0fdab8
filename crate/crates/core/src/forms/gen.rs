use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matnum::Seed;

use super::{BlockMultilinearForm, Monomial};

const MAX_CANDIDATES: usize = 1 << 20;

/// Parameters for [`random_form`].
#[derive(Clone, Debug)]
pub struct RandomFormSpec {
    /// Probability that a candidate monomial gets a coefficient.
    pub density: f64,
    /// Only degree-`d` monomials, no constant.
    pub homogeneous: bool,
    /// Largest monomial degree when not homogeneous.
    pub max_degree: usize,
    /// Rescale so that `Var[f] = 1`.
    pub normalize: bool,
}

impl Default for RandomFormSpec {
    fn default() -> Self {
        RandomFormSpec {
            density: 0.5,
            homogeneous: true,
            max_degree: usize::MAX,
            normalize: true,
        }
    }
}

/// Sparse form with standard Gaussian coefficients. At least one term is kept.
pub fn random_form(d: usize, n: usize, spec: &RandomFormSpec, seed: &Seed) -> Result<BlockMultilinearForm> {
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density must lie in (0, 1], got {}",
            spec.density
        )));
    }
    let mut f = BlockMultilinearForm::new(d, n)?;
    let candidates = candidate_monomials(d, n, spec)?;
    let mut rng = seed.rng();
    let mut fallback = None;
    for mono in candidates {
        let keep = rng.random::<f64>() < spec.density;
        let coeff: f64 = rng.sample(StandardNormal);
        if keep {
            f.add_term(mono, coeff)?;
        } else if fallback.is_none() {
            fallback = Some((mono, coeff));
        }
    }
    if f.num_terms() == 0 {
        if let Some((mono, coeff)) = fallback {
            f.add_term(mono, coeff)?;
        }
    }
    if !spec.homogeneous {
        f.set_constant(rng.sample::<f64, _>(StandardNormal) * 0.5);
    }
    if spec.normalize {
        let var = f.variance();
        if var > 0.0 {
            f = f.scaled(1.0 / var.sqrt());
        }
    }
    Ok(f)
}

fn candidate_monomials(d: usize, n: usize, spec: &RandomFormSpec) -> Result<Vec<Monomial>> {
    let degrees: Vec<usize> = if spec.homogeneous {
        vec![d]
    } else {
        (1..=spec.max_degree.min(d)).collect()
    };
    let mut count: usize = 0;
    for &k in &degrees {
        count = count.saturating_add(binomial(d, k).saturating_mul(n.saturating_pow(k as u32)));
    }
    if count > MAX_CANDIDATES {
        return Err(Error::CapExceeded {
            what: "candidate monomials",
            value: count as u128,
            cap: MAX_CANDIDATES as u128,
        });
    }
    let mut out = Vec::with_capacity(count);
    for &k in &degrees {
        for blocks in subsets(d, k) {
            let mut indices = vec![0; k];
            loop {
                out.push(Monomial::new(blocks.clone(), indices.clone())?);
                if !advance(&mut indices, n) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for b in start..d {
            current.push(b);
            rec(b + 1, d, k, current, out);
            current.pop();
        }
    }
    rec(0, d, k, &mut current, &mut out);
    out
}

/// Odometer over `[n]^k`, last position fastest.
fn advance(indices: &mut [usize], n: usize) -> bool {
    for pos in (0..indices.len()).rev() {
        indices[pos] += 1;
        if indices[pos] < n {
            return true;
        }
        indices[pos] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_random_form() {
        let f = random_form(3, 4, &RandomFormSpec::default(), &Seed::new(1)).unwrap();
        assert!(f.is_homogeneous());
        assert!(f.num_terms() > 0);
        assert!((f.variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_random_form_respects_degree() {
        let spec = RandomFormSpec {
            density: 1.0,
            homogeneous: false,
            max_degree: 2,
            normalize: false,
        };
        let f = random_form(3, 2, &spec, &Seed::new(2)).unwrap();
        assert_eq!(f.degree(), 2);
        // 3·2 linear + 3·4 quadratic monomials.
        assert_eq!(f.num_terms(), 18);
    }

    #[test]
    fn deterministic() {
        let spec = RandomFormSpec::default();
        let a = random_form(2, 5, &spec, &Seed::new(9)).unwrap();
        let b = random_form(2, 5, &spec, &Seed::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_density() {
        let spec = RandomFormSpec {
            density: 0.0,
            ..Default::default()
        };
        assert!(random_form(2, 2, &spec, &Seed::new(0)).is_err());
    }
}
