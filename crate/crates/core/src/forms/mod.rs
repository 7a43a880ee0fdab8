//! Block-multilinear forms on the Boolean hypercube and their Fourier analytics.
//!
//! A form of degree `d` over `d` blocks of `n` variables is stored sparsely as a
//! map from monomials to real coefficients. A monomial picks at most one variable
//! from each block, with blocks strictly increasing, so the Fourier expansion is
//! the stored representation itself: variance and influences are plain sums of
//! squared coefficients.
//!
//! Blocks and indices are 0-based in the Rust API. The JSON format (see
//! [`json`]) and the CLI use 1-based numbering.

mod cube;
mod gen;
pub mod json;

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use cube::{CompiledForm, CubePoint};
pub use gen::{random_form, RandomFormSpec};

/// Default cap on the number of variables enumerated by exhaustive scans.
pub const DEFAULT_CUBE_CAP: usize = 24;

/// A variable `x_b(i)`, as `(block, index)`.
pub type Variable = (usize, usize);

/// `x_{b_1}(i_1) x_{b_2}(i_2) ... x_{b_m}(i_m)` with `b_1 < b_2 < ... < b_m`.
///
/// Ordering is lexicographic on `(blocks, indices)`, which is also the order
/// terms are stored, evaluated and serialized in.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    blocks: Vec<usize>,
    indices: Vec<usize>,
}

impl Monomial {
    pub fn new(blocks: Vec<usize>, indices: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidMonomial("empty monomial".into()));
        }
        if blocks.len() != indices.len() {
            return Err(Error::InvalidMonomial(format!(
                "{} blocks but {} indices",
                blocks.len(),
                indices.len()
            )));
        }
        if blocks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMonomial(format!(
                "blocks {blocks:?} are not strictly increasing"
            )));
        }
        Ok(Monomial { blocks, indices })
    }

    /// Builds a monomial from variables given in any block order.
    pub fn from_variables(vars: &[Variable]) -> Result<Self> {
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        let (blocks, indices) = vars.into_iter().unzip();
        Monomial::new(blocks, indices)
    }

    pub fn single(block: usize, index: usize) -> Self {
        Monomial {
            blocks: vec![block],
            indices: vec![index],
        }
    }

    pub fn degree(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn leading_block(&self) -> usize {
        self.blocks[0]
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        self.blocks.iter().copied().zip(self.indices.iter().copied())
    }

    /// Index used by this monomial in `block`, if any.
    pub fn index_in_block(&self, block: usize) -> Option<usize> {
        self.blocks
            .binary_search(&block)
            .ok()
            .map(|pos| self.indices[pos])
    }

    pub fn contains(&self, var: Variable) -> bool {
        self.index_in_block(var.0) == Some(var.1)
    }

    /// Drops the variable in `block`. `None` means nothing is left.
    fn without_block(&self, block: usize) -> Option<Monomial> {
        let pos = self.blocks.binary_search(&block).ok()?;
        if self.blocks.len() == 1 {
            return None;
        }
        let mut blocks = self.blocks.clone();
        let mut indices = self.indices.clone();
        blocks.remove(pos);
        indices.remove(pos);
        Some(Monomial { blocks, indices })
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (b, i)) in self.variables().enumerate() {
            if k > 0 {
                write!(f, "·")?;
            }
            write!(f, "x{}({})", b + 1, i + 1)?;
        }
        Ok(())
    }
}

/// Variable with the largest influence, ties broken towards the lowest
/// `(block, index)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxInfluence {
    pub block: usize,
    pub index: usize,
    pub value: f64,
}

/// A partial assignment of variables to `±1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Restriction {
    assignments: BTreeMap<Variable, i8>,
}

impl Restriction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Variable, i8)>) -> Result<Self> {
        let mut r = Restriction::new();
        for (var, value) in pairs {
            r.assign(var.0, var.1, value)?;
        }
        Ok(r)
    }

    /// Fixes `x_block(index) = value`. Re-assigning a variable is an error.
    pub fn assign(&mut self, block: usize, index: usize, value: i8) -> Result<()> {
        if value != 1 && value != -1 {
            return Err(Error::InvalidParameter(format!(
                "restriction value must be ±1, got {value}"
            )));
        }
        if self.assignments.insert((block, index), value).is_some() {
            return Err(Error::InvalidParameter(format!(
                "variable x{}({}) assigned twice",
                block + 1,
                index + 1
            )));
        }
        Ok(())
    }

    pub fn get(&self, block: usize, index: usize) -> Option<i8> {
        self.assignments.get(&(block, index)).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Variable, i8)> + '_ {
        self.assignments.iter().map(|(&k, &v)| (k, v))
    }

    /// `x` with every assigned coordinate overwritten.
    pub fn merge(&self, x: &CubePoint) -> CubePoint {
        let mut out = x.clone();
        for ((b, i), v) in self.iter() {
            out.set(b, i, v);
        }
        out
    }
}

/// Real-coefficient block-multilinear form `E f + Σ f̂_{b,i} x_{b_1}(i_1)⋯x_{b_m}(i_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMultilinearForm {
    d: usize,
    n: usize,
    constant: f64,
    terms: BTreeMap<Monomial, f64>,
}

impl BlockMultilinearForm {
    /// The zero form.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "form needs d ≥ 1 and n ≥ 1, got d = {d}, n = {n}"
            )));
        }
        Ok(BlockMultilinearForm {
            d,
            n,
            constant: 0.0,
            terms: BTreeMap::new(),
        })
    }

    pub fn constant_form(d: usize, n: usize, constant: f64) -> Result<Self> {
        let mut f = Self::new(d, n)?;
        f.constant = constant;
        Ok(f)
    }

    pub fn from_terms(
        d: usize,
        n: usize,
        constant: f64,
        terms: impl IntoIterator<Item = (Monomial, f64)>,
    ) -> Result<Self> {
        let mut f = Self::constant_form(d, n, constant)?;
        for (mono, coeff) in terms {
            f.add_term(mono, coeff)?;
        }
        Ok(f)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `E f`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn set_constant(&mut self, constant: f64) {
        self.constant = constant;
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, mono: &Monomial) -> f64 {
        self.terms.get(mono).copied().unwrap_or(0.0)
    }

    fn check_monomial(&self, mono: &Monomial) -> Result<()> {
        if let Some((b, i)) = mono.variables().find(|&(b, i)| b >= self.d || i >= self.n) {
            return Err(Error::InvalidMonomial(format!(
                "variable (block {b}, index {i}) outside d = {}, n = {}",
                self.d, self.n
            )));
        }
        Ok(())
    }

    /// Adds `coeff` to the coefficient of `mono`; an exact zero result is removed.
    pub fn add_term(&mut self, mono: Monomial, coeff: f64) -> Result<()> {
        self.check_monomial(&mono)?;
        if !coeff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite coefficient for {mono}"
            )));
        }
        accumulate(&mut self.terms, mono, coeff);
        Ok(())
    }

    /// Highest monomial degree, 0 for a constant form.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Every monomial uses exactly one variable of every block and `E f = 0`.
    pub fn is_homogeneous(&self) -> bool {
        self.constant == 0.0 && self.terms.keys().all(|m| m.degree() == self.d)
    }

    /// Variables that appear in at least one term.
    pub fn support(&self) -> BTreeSet<Variable> {
        self.terms.keys().flat_map(|m| m.variables()).collect()
    }

    pub fn evaluate(&self, x: &CubePoint) -> Result<f64> {
        if x.d() != self.d || x.n() != self.n {
            return Err(Error::mismatch(
                format!("point with d = {}, n = {}", self.d, self.n),
                format!("d = {}, n = {}", x.d(), x.n()),
            ));
        }
        let mut value = self.constant;
        for (mono, coeff) in &self.terms {
            let sign: i8 = mono.variables().map(|(b, i)| x.get(b, i)).product();
            value += coeff * f64::from(sign);
        }
        Ok(value)
    }

    /// `Var[f]`, the sum of squared non-constant coefficients.
    pub fn variance(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    /// `Inf_{b,i}(f)`: squared coefficients of the monomials containing `x_b(i)`.
    pub fn influence(&self, block: usize, index: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| m.contains((block, index)))
            .map(|(_, c)| c * c)
            .sum()
    }

    /// `d × n` table of all influences.
    pub fn influence_table(&self) -> Vec<Vec<f64>> {
        let mut table = vec![vec![0.0; self.n]; self.d];
        for (mono, coeff) in &self.terms {
            for (b, i) in mono.variables() {
                table[b][i] += coeff * coeff;
            }
        }
        table
    }

    pub fn max_influence(&self) -> MaxInfluence {
        let table = self.influence_table();
        let mut best = MaxInfluence {
            block: 0,
            index: 0,
            value: table[0][0],
        };
        for (b, row) in table.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v > best.value {
                    best = MaxInfluence {
                        block: b,
                        index: i,
                        value: v,
                    };
                }
            }
        }
        best
    }

    /// `Σ_i Inf_{b,i}(f)`; at most `Var[f]`, with equality for homogeneous forms.
    pub fn block_influence_sum(&self, block: usize) -> f64 {
        (0..self.n).map(|i| self.influence(block, i)).sum()
    }

    pub fn restrict(&self, r: &Restriction) -> Self {
        let mut constant = self.constant;
        let mut terms = BTreeMap::new();
        for (mono, &coeff) in &self.terms {
            let mut c = coeff;
            let mut free = Vec::with_capacity(mono.degree());
            for (b, i) in mono.variables() {
                match r.get(b, i) {
                    Some(v) => c *= f64::from(v),
                    None => free.push((b, i)),
                }
            }
            if free.is_empty() {
                constant += c;
            } else {
                let (blocks, indices) = free.into_iter().unzip();
                accumulate(&mut terms, Monomial { blocks, indices }, c);
            }
        }
        BlockMultilinearForm {
            d: self.d,
            n: self.n,
            constant,
            terms,
        }
    }

    /// Exact `max_x |f(x)|`, enumerating the variables the form depends on.
    pub fn sup_norm_bruteforce(&self, cap: usize) -> Result<f64> {
        let compiled = CompiledForm::over_support(self);
        let k = compiled.num_variables();
        if k > cap {
            return Err(Error::CapExceeded {
                what: "number of relevant variables",
                value: k as u128,
                cap: cap as u128,
            });
        }
        let best = (0..1u64 << k)
            .into_par_iter()
            .map(|mask| compiled.eval_mask(mask).abs())
            .reduce(|| 0.0, f64::max);
        Ok(best)
    }

    /// Values at every point of the cube, indexed by [`CubePoint::from_mask`].
    pub fn cube_values(&self, cap: usize) -> Result<Vec<f64>> {
        let nd = self.n * self.d;
        if nd > cap {
            return Err(Error::CapExceeded {
                what: "n·d",
                value: nd as u128,
                cap: cap as u128,
            });
        }
        let compiled = CompiledForm::full(self);
        Ok((0..1u64 << nd)
            .into_par_iter()
            .map(|mask| compiled.eval_mask(mask))
            .collect())
    }

    /// The degree-`k` terms (`k = 0` keeps only the constant).
    pub fn homogeneous_part(&self, k: usize) -> Self {
        BlockMultilinearForm {
            d: self.d,
            n: self.n,
            constant: if k == 0 { self.constant } else { 0.0 },
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == k)
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }

    /// `f_b` for every block: the monomials whose first variable lies in block `b`.
    /// `f = E f + Σ_b f_b`.
    pub fn leading_block_decomposition(&self) -> Vec<Self> {
        let mut parts: Vec<BlockMultilinearForm> = (0..self.d)
            .map(|_| BlockMultilinearForm {
                d: self.d,
                n: self.n,
                constant: 0.0,
                terms: BTreeMap::new(),
            })
            .collect();
        for (mono, &c) in &self.terms {
            parts[mono.leading_block()].terms.insert(mono.clone(), c);
        }
        parts
    }

    /// Writes `f = Σ_i x_b(i) g_i + r` and returns the `g_i` (one per index).
    /// Terms without a block-`b` variable, and the constant, are dropped.
    pub fn factor_block(&self, block: usize) -> Vec<Self> {
        let mut factors: Vec<BlockMultilinearForm> = (0..self.n)
            .map(|_| BlockMultilinearForm {
                d: self.d,
                n: self.n,
                constant: 0.0,
                terms: BTreeMap::new(),
            })
            .collect();
        for (mono, &c) in &self.terms {
            if let Some(i) = mono.index_in_block(block) {
                match mono.without_block(block) {
                    Some(rest) => {
                        factors[i].terms.insert(rest, c);
                    }
                    None => factors[i].constant += c,
                }
            }
        }
        factors
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            accumulate(&mut terms, m.clone(), c * factor);
        }
        BlockMultilinearForm {
            d: self.d,
            n: self.n,
            constant: self.constant * factor,
            terms,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if (self.d, self.n) != (other.d, other.n) {
            return Err(Error::mismatch(
                format!("d = {}, n = {}", self.d, self.n),
                format!("d = {}, n = {}", other.d, other.n),
            ));
        }
        let mut out = self.clone();
        out.constant += other.constant;
        for (m, &c) in &other.terms {
            accumulate(&mut out.terms, m.clone(), c);
        }
        Ok(out)
    }
}

fn accumulate(terms: &mut BTreeMap<Monomial, f64>, mono: Monomial, coeff: f64) {
    // Exact zeros only: near-zero values stay so that Parseval sums are untouched.
    match terms.entry(mono) {
        Entry::Vacant(e) => {
            if coeff != 0.0 {
                e.insert(coeff);
            }
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += coeff;
            if *e.get() == 0.0 {
                e.remove();
            }
        }
    }
}
