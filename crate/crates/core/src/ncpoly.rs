//! Forms and non-commutative polynomials evaluated at matrix arguments.
//!
//! A block-multilinear form becomes a non-commutative polynomial by keeping
//! the factors of every monomial in increasing block order and replacing the
//! constant `E f` with `E f · I`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::forms::{BlockMultilinearForm, CubePoint, Variable};
use crate::matnum::{SquareMatrix, C64};

/// Slack on `‖U‖_op ≤ 1` for the contractive check.
pub const CONTRACTIVE_TOL: f64 = 1e-9;

/// Matrices of a common dimension `N`, keyed by variable.
#[derive(Clone, Debug)]
pub struct Assignment<K: Ord> {
    dim: usize,
    matrices: BTreeMap<K, SquareMatrix>,
}

/// Form variables `x_b(i)` mapped to matrices.
pub type MatrixAssignment = Assignment<Variable>;

/// Polynomial variables `z_k` mapped to matrices.
pub type VariableAssignment = Assignment<usize>;

impl<K: Ord + Clone + Debug> Assignment<K> {
    pub fn new(dim: usize) -> Self {
        Assignment {
            dim,
            matrices: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, key: K, m: SquareMatrix) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::mismatch(
                format!("{0}×{0} matrix for {key:?}", self.dim),
                format!("{0}×{0}", m.dim()),
            ));
        }
        self.matrices.insert(key, m);
        Ok(())
    }

    pub fn get(&self, key: &K) -> Option<&SquareMatrix> {
        self.matrices.get(key)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &SquareMatrix)> + '_ {
        self.matrices.iter()
    }

    /// Every assigned matrix has `‖U‖_op ≤ 1 + 1e-9`.
    pub fn is_contractive(&self) -> bool {
        self.matrices
            .values()
            .all(|m| m.operator_norm() <= 1.0 + CONTRACTIVE_TOL)
    }

    /// Largest `‖U U* − I‖_F` over the assigned non-zero matrices.
    pub fn max_unitarity_residual(&self) -> f64 {
        self.matrices
            .values()
            .filter(|m| !is_zero(m))
            .map(SquareMatrix::unitarity_residual)
            .fold(0.0, f64::max)
    }
}

impl MatrixAssignment {
    /// `1 × 1` assignment `x_b(i) ↦ [x_b(i)]`.
    pub fn scalars(x: &CubePoint) -> Self {
        let mut a = Assignment::new(1);
        for b in 0..x.d() {
            for i in 0..x.n() {
                let v = C64::new(f64::from(x.get(b, i)), 0.0);
                a.matrices.insert((b, i), SquareMatrix::scalar(1, v));
            }
        }
        a
    }
}

/// What to do with a variable that has no matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unassigned {
    Error,
    /// Substitute the zero matrix.
    Zero,
}

fn is_zero(m: &SquareMatrix) -> bool {
    m.as_array().iter().all(|z| *z == C64::new(0.0, 0.0))
}

/// `Σ c · M_{k_1} ⋯ M_{k_m} + constant · I`, products taken left to right.
///
/// Proper prefixes of length ≥ 2 are cached; since the cached product is the
/// same left-to-right partial product, results are bit-identical to the
/// uncached evaluation. Terms touching a zero matrix are skipped.
fn evaluate_words<'a, K>(
    dim: usize,
    constant: f64,
    terms: impl Iterator<Item = (&'a [K], f64)>,
    lookup: impl Fn(&K) -> Result<Option<&'a SquareMatrix>>,
) -> Result<SquareMatrix>
where
    K: Eq + Hash + Clone + 'a,
{
    let mut out = SquareMatrix::scalar(dim, C64::new(constant, 0.0));
    let mut cache: HashMap<Vec<K>, SquareMatrix> = HashMap::new();
    'terms: for (word, coeff) in terms {
        let mut factors = Vec::with_capacity(word.len());
        for k in word {
            match lookup(k)? {
                Some(m) if !is_zero(m) => factors.push(m),
                _ => continue 'terms,
            }
        }
        let product = match factors.len() {
            0 => SquareMatrix::identity(dim),
            1 => factors[0].clone(),
            len => {
                let mut prefix_len = 1;
                for l in (2..len).rev() {
                    if cache.contains_key(&word[..l]) {
                        prefix_len = l;
                        break;
                    }
                }
                let mut acc = if prefix_len == 1 {
                    factors[0].clone()
                } else {
                    cache[&word[..prefix_len]].clone()
                };
                for l in prefix_len..len {
                    acc = &acc * factors[l];
                    if l + 1 < len {
                        cache.insert(word[..=l].to_vec(), acc.clone());
                    }
                }
                acc
            }
        };
        out.add_scaled(coeff, &product);
    }
    Ok(out)
}

/// `E f · I + Σ f̂_{b,i} U_{b_1}(i_1) ⋯ U_{b_m}(i_m)`.
pub fn evaluate_form(
    f: &BlockMultilinearForm,
    a: &MatrixAssignment,
    unassigned: Unassigned,
) -> Result<SquareMatrix> {
    let words: Vec<(Vec<Variable>, f64)> = f
        .terms()
        .map(|(m, c)| (m.variables().collect(), c))
        .collect();
    evaluate_words(
        a.dim(),
        f.constant(),
        words.iter().map(|(w, c)| (w.as_slice(), *c)),
        |v| match (a.get(v), unassigned) {
            (Some(m), _) => Ok(Some(m)),
            (None, Unassigned::Zero) => Ok(None),
            (None, Unassigned::Error) => Err(Error::UnboundVariable(format!("x{}({})", v.0 + 1, v.1 + 1))),
        },
    )
}

/// `Σ c_w M_w + constant · I` by nesting on the leading variable,
/// `Σ_k M_k · R_k`, so each distinct proper prefix costs one product.
///
/// Agrees with the left-to-right evaluation up to rounding only; used where
/// many monomials share prefixes and exact reproduction of the flat sum is not
/// required.
fn evaluate_words_nested<'a, K>(
    dim: usize,
    constant: f64,
    terms: impl Iterator<Item = (&'a [K], f64)>,
    lookup: impl Fn(&K) -> Result<Option<&'a SquareMatrix>>,
) -> Result<SquareMatrix>
where
    K: Ord + Clone + 'a,
{
    let mut words: Vec<(&[K], f64)> = terms.collect();
    words.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = match nested(&words, 0, &lookup)? {
        Some(Tail::Matrix(m)) => m,
        Some(Tail::Scalar(c)) => SquareMatrix::scalar(dim, C64::new(c, 0.0)),
        None => SquareMatrix::zeros(dim),
    };
    out.add_scaled(constant, &SquareMatrix::identity(dim));
    Ok(out)
}

/// A partial sum that is kept as a scalar while it is a multiple of `I`.
enum Tail {
    Scalar(f64),
    Matrix(SquareMatrix),
}

impl Tail {
    fn add(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Scalar(a), Tail::Scalar(b)) => Tail::Scalar(a + b),
            (Tail::Scalar(c), Tail::Matrix(mut m)) | (Tail::Matrix(mut m), Tail::Scalar(c)) => {
                m.add_scaled(c, &SquareMatrix::identity(m.dim()));
                Tail::Matrix(m)
            }
            (Tail::Matrix(mut a), Tail::Matrix(b)) => {
                a.add_scaled(1.0, &b);
                Tail::Matrix(a)
            }
        }
    }

    fn left_mul(self, m: &SquareMatrix) -> SquareMatrix {
        match self {
            Tail::Scalar(c) => m.scaled(C64::new(c, 0.0)),
            Tail::Matrix(t) => m * &t,
        }
    }
}

fn nested<'a, K: Ord>(
    words: &[(&[K], f64)],
    depth: usize,
    lookup: &impl Fn(&K) -> Result<Option<&'a SquareMatrix>>,
) -> Result<Option<Tail>> {
    let mut acc: Option<Tail> = None;
    let mut push = |t: Tail| {
        acc = Some(match acc.take() {
            Some(a) => a.add(t),
            None => t,
        })
    };
    let mut start = 0;
    while start < words.len() {
        let (word, c) = words[start];
        if word.len() == depth {
            push(Tail::Scalar(c));
            start += 1;
            continue;
        }
        let key = &word[depth];
        let end = start + words[start..].partition_point(|(w, _)| w.len() > depth && &w[depth] == key);
        if let Some(m) = lookup(key)?.filter(|m| !is_zero(m)) {
            if let Some(tail) = nested(&words[start..end], depth + 1, lookup)? {
                push(Tail::Matrix(tail.left_mul(m)));
            }
        }
        start = end;
    }
    Ok(acc)
}

/// [`evaluate_form`] through nested evaluation; equal up to rounding.
pub fn evaluate_form_nested(
    f: &BlockMultilinearForm,
    a: &MatrixAssignment,
    unassigned: Unassigned,
) -> Result<SquareMatrix> {
    let words: Vec<(Vec<Variable>, f64)> = f
        .terms()
        .map(|(m, c)| (m.variables().collect(), c))
        .collect();
    evaluate_words_nested(
        a.dim(),
        f.constant(),
        words.iter().map(|(w, c)| (w.as_slice(), *c)),
        |v| match (a.get(v), unassigned) {
            (Some(m), _) => Ok(Some(m)),
            (None, Unassigned::Zero) => Ok(None),
            (None, Unassigned::Error) => Err(Error::UnboundVariable(format!("x{}({})", v.0 + 1, v.1 + 1))),
        },
    )
}

/// [`evaluate_nc`] through nested evaluation; equal up to rounding.
pub fn evaluate_nc_nested(p: &NCPolynomial, a: &VariableAssignment) -> Result<SquareMatrix> {
    let words = p.terms().filter(|(w, _)| !w.is_empty());
    evaluate_words_nested(a.dim(), p.constant_term(), words, |k| {
        a.get(k)
            .map(Some)
            .ok_or_else(|| Error::UnboundVariable(format!("z{}", k + 1)))
    })
}

/// Real non-commutative polynomial `Σ_w c_w z_w` over variables `z_0, z_1, …`.
/// The empty word holds the constant term.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NCPolynomial {
    terms: BTreeMap<Vec<usize>, f64>,
}

impl NCPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::new();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Self {
        let mut p = Self::new();
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    /// Adds `c` to the coefficient of `word`; exact zeros are dropped.
    pub fn add_term(&mut self, word: Vec<usize>, c: f64) {
        let entry = self.terms.entry(word.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&word);
        }
    }

    pub fn coefficient(&self, word: &[usize]) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&[])
    }

    /// All terms including the constant (as the empty word), in word order.
    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.terms.iter().map(|(w, &c)| (w.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// `Some(d)` if every term has degree `d`; the zero polynomial gives `Some(0)`.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.keys().map(Vec::len);
        match degrees.next() {
            None => Some(0),
            Some(d) => degrees.all(|k| k == d).then_some(d),
        }
    }

    /// Smallest variable count covering every word.
    pub fn num_variables(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|w| w.iter())
            .map(|&k| k + 1)
            .max()
            .unwrap_or(0)
    }

    /// `‖p‖₂ = (Σ_w c_w²)^{1/2}`, constant included.
    pub fn l2_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// The polynomial of a form, with `x_b(i)` numbered `b·n + i`.
    pub fn from_form(f: &BlockMultilinearForm) -> Self {
        let n = f.n();
        let mut p = NCPolynomial::constant(f.constant());
        for (m, c) in f.terms() {
            p.add_term(m.variables().map(|(b, i)| b * n + i).collect(), c);
        }
        p
    }
}

/// `p(A_0, A_1, …)`. Every variable of `p` must be bound.
pub fn evaluate_nc(p: &NCPolynomial, a: &VariableAssignment) -> Result<SquareMatrix> {
    let words = p.terms().filter(|(w, _)| !w.is_empty());
    evaluate_words(a.dim(), p.constant_term(), words, |k| {
        a.get(k)
            .map(Some)
            .ok_or_else(|| Error::UnboundVariable(format!("z{}", k + 1)))
    })
}
