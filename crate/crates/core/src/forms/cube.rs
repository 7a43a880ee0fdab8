use crate::error::{Error, Result};

use super::{BlockMultilinearForm, Variable};

/// A point of `{±1}^{n×d}`; `x_b(i)` is stored at `b·n + i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubePoint {
    d: usize,
    n: usize,
    values: Vec<i8>,
}

impl CubePoint {
    pub fn ones(d: usize, n: usize) -> Self {
        CubePoint {
            d,
            n,
            values: vec![1; d * n],
        }
    }

    /// Bit `b·n + i` of `mask` set means `x_b(i) = -1`.
    pub fn from_mask(d: usize, n: usize, mask: u64) -> Self {
        let values = (0..d * n)
            .map(|k| if mask >> k & 1 == 1 { -1 } else { 1 })
            .collect();
        CubePoint { d, n, values }
    }

    pub fn from_blocks(blocks: &[Vec<i8>]) -> Result<Self> {
        let d = blocks.len();
        let n = blocks.first().map_or(0, Vec::len);
        if d == 0 || n == 0 {
            return Err(Error::InvalidParameter("empty cube point".into()));
        }
        if let Some(bad) = blocks.iter().find(|b| b.len() != n) {
            return Err(Error::mismatch(format!("{n} entries per block"), bad.len()));
        }
        let values: Vec<i8> = blocks.concat();
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter("cube entries must be ±1".into()));
        }
        Ok(CubePoint { d, n, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, block: usize, index: usize) -> i8 {
        self.values[block * self.n + index]
    }

    pub fn set(&mut self, block: usize, index: usize, value: i8) {
        self.values[block * self.n + index] = value;
    }

    pub fn block(&self, block: usize) -> &[i8] {
        &self.values[block * self.n..(block + 1) * self.n]
    }

    /// Inverse of [`CubePoint::from_mask`].
    pub fn to_mask(&self) -> u64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == -1)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }
}

/// A form flattened to `(sign mask, coefficient)` pairs for fast cube scans.
///
/// Terms keep the form's storage order, so `eval_mask` sums in exactly the
/// order [`BlockMultilinearForm::evaluate`] does.
#[derive(Clone, Debug)]
pub struct CompiledForm {
    constant: f64,
    variables: Vec<Variable>,
    terms: Vec<(u64, f64)>,
}

impl CompiledForm {
    /// Bit `b·n + i` stands for `x_b(i)`. Needs `n·d ≤ 64`.
    pub fn full(f: &BlockMultilinearForm) -> Self {
        assert!(f.n() * f.d() <= 64, "n·d must fit a 64-bit mask");
        let n = f.n();
        let variables = (0..f.d())
            .flat_map(|b| (0..n).map(move |i| (b, i)))
            .collect();
        let terms = f
            .terms()
            .map(|(m, c)| (m.variables().fold(0u64, |acc, (b, i)| acc | 1 << (b * n + i)), c))
            .collect();
        CompiledForm {
            constant: f.constant(),
            variables,
            terms,
        }
    }

    /// Bit `k` stands for the `k`-th variable of the support, in `(block, index)` order.
    pub fn over_support(f: &BlockMultilinearForm) -> Self {
        let variables: Vec<Variable> = f.support().into_iter().collect();
        assert!(variables.len() <= 64, "support must fit a 64-bit mask");
        let terms = f
            .terms()
            .map(|(m, c)| {
                let mask = m.variables().fold(0u64, |acc, v| {
                    let k = variables.binary_search(&v).expect("variable in support");
                    acc | 1 << k
                });
                (mask, c)
            })
            .collect();
        CompiledForm {
            constant: f.constant(),
            variables,
            terms,
        }
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn eval_mask(&self, mask: u64) -> f64 {
        let mut value = self.constant;
        for &(tmask, c) in &self.terms {
            if (tmask & mask).count_ones() & 1 == 1 {
                value += -c;
            } else {
                value += c;
            }
        }
        value
    }
}
