//! Greedy classical decision tree: query the most influential variable until
//! the restricted variance is small, then answer with the restricted mean.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BlockMultilinearForm, CubePoint, Restriction};

/// Default bound on `n·d` for exhaustive error profiles.
pub const DEFAULT_PROFILE_CAP: usize = 20;

/// Errors at or below this count as exact in histograms.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationPolicy {
    pub epsilon: f64,
    pub delta: f64,
    pub variance_threshold: f64,
    pub query_budget: usize,
}

impl SimulationPolicy {
    /// Stops once `Var ≤ ε²δ`, which by Chebyshev leaves at most a `δ` fraction
    /// of the remaining inputs more than `ε` away from the mean.
    pub fn new(epsilon: f64, delta: f64, query_budget: usize) -> Result<Self> {
        Self::with_threshold(epsilon, delta, epsilon * epsilon * delta, query_budget)
    }

    pub fn with_threshold(epsilon: f64, delta: f64, variance_threshold: f64, query_budget: usize) -> Result<Self> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(epsilon) || !positive(delta) || delta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "need ε > 0 and 0 < δ ≤ 1, got ε = {epsilon}, δ = {delta}"
            )));
        }
        if !positive(variance_threshold) {
            return Err(Error::InvalidParameter(format!(
                "variance threshold must be positive, got {variance_threshold}"
            )));
        }
        if query_budget == 0 {
            return Err(Error::InvalidParameter("query budget must be positive".into()));
        }
        Ok(SimulationPolicy {
            epsilon,
            delta,
            variance_threshold,
            query_budget,
        })
    }

    /// `d⁵ ε^{−8} δ^{−5}`, the asymptotic query count shown as a reference line.
    pub fn reference_queries(&self, d: usize) -> f64 {
        (d as f64).powi(5) * self.epsilon.powi(-8) * self.delta.powi(-5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    VarianceThreshold,
    BudgetExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub block: usize,
    pub index: usize,
    pub value: i8,
    /// Variance of the restricted form before this query.
    pub variance_before: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationTranscript {
    pub queries: Vec<Query>,
    pub output: f64,
    pub queries_used: usize,
    pub final_variance: f64,
    pub stop: StopReason,
}

/// One greedy step: the stop reason at `g`, or the variable to query next.
fn next_query(g: &BlockMultilinearForm, policy: &SimulationPolicy, used: usize) -> std::result::Result<(usize, usize), StopReason> {
    if g.variance() <= policy.variance_threshold {
        return Err(StopReason::VarianceThreshold);
    }
    if used >= policy.query_budget {
        return Err(StopReason::BudgetExhausted);
    }
    let best = g.max_influence();
    Ok((best.block, best.index))
}

fn restrict_one(g: &BlockMultilinearForm, block: usize, index: usize, value: i8) -> Result<BlockMultilinearForm> {
    Ok(g.restrict(&Restriction::from_pairs([((block, index), value)])?))
}

/// Runs the tree on one input. Influences are recomputed exactly on every
/// restricted form; ties go to the lowest `(block, index)`.
pub fn simulate_on_input(f: &BlockMultilinearForm, policy: &SimulationPolicy, x: &CubePoint) -> Result<SimulationTranscript> {
    if x.d() != f.d() || x.n() != f.n() {
        return Err(Error::mismatch(
            format!("point in {{±1}}^({}×{})", f.n(), f.d()),
            format!("{}×{}", x.n(), x.d()),
        ));
    }
    let mut g = f.clone();
    let mut queries = Vec::new();
    loop {
        match next_query(&g, policy, queries.len()) {
            Err(stop) => {
                return Ok(SimulationTranscript {
                    output: g.constant(),
                    queries_used: queries.len(),
                    final_variance: g.variance(),
                    queries,
                    stop,
                })
            }
            Ok((block, index)) => {
                let value = x.get(block, index);
                queries.push(Query {
                    block,
                    index,
                    value,
                    variance_before: g.variance(),
                });
                g = restrict_one(&g, block, index, value)?;
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        output: f64,
        depth: usize,
        stop: StopReason,
    },
    Split {
        block: usize,
        index: usize,
        plus: usize,
        minus: usize,
    },
}

/// The whole decision tree, built once and shared by every input.
#[derive(Clone, Debug)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn build(f: &BlockMultilinearForm, policy: &SimulationPolicy) -> Result<Self> {
        let mut tree = DecisionTree { nodes: Vec::new() };
        tree.grow(f.clone(), policy, 0)?;
        Ok(tree)
    }

    fn grow(&mut self, g: BlockMultilinearForm, policy: &SimulationPolicy, depth: usize) -> Result<usize> {
        let id = self.nodes.len();
        match next_query(&g, policy, depth) {
            Err(stop) => self.nodes.push(Node::Leaf {
                output: g.constant(),
                depth,
                stop,
            }),
            Ok((block, index)) => {
                self.nodes.push(Node::Leaf {
                    output: 0.0,
                    depth,
                    stop: StopReason::BudgetExhausted,
                });
                let plus = self.grow(restrict_one(&g, block, index, 1)?, policy, depth + 1)?;
                let minus = self.grow(restrict_one(&g, block, index, -1)?, policy, depth + 1)?;
                self.nodes[id] = Node::Split {
                    block,
                    index,
                    plus,
                    minus,
                };
            }
        }
        Ok(id)
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// `(output, queries used, stop reason)` at `x`.
    pub fn run(&self, x: &CubePoint) -> (f64, usize, StopReason) {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { output, depth, stop } => return (output, depth, stop),
                Node::Split {
                    block,
                    index,
                    plus,
                    minus,
                } => id = if x.get(block, index) > 0 { plus } else { minus },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive upper edge; the last bin is unbounded.
    pub upper: Option<f64>,
    pub count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub epsilon: f64,
    /// Fraction of inputs with error above `epsilon`.
    pub failing_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub policy: SimulationPolicy,
    pub num_inputs: u64,
    pub failing_fraction: f64,
    pub max_error: f64,
    pub mean_queries: f64,
    pub max_queries: usize,
    pub stopped_by_variance: u64,
    pub stopped_by_budget: u64,
    pub histogram: Vec<HistogramBin>,
    pub frontier: Vec<FrontierPoint>,
    pub reference_queries: f64,
}

/// Exact error distribution of the tree over the whole cube.
pub fn error_profile(f: &BlockMultilinearForm, policy: &SimulationPolicy, cap: usize) -> Result<ErrorProfile> {
    let values = f.cube_values(cap)?;
    let tree = DecisionTree::build(f, policy)?;
    let (d, n) = (f.d(), f.n());
    let runs: Vec<(f64, usize, StopReason)> = values
        .par_iter()
        .enumerate()
        .map(|(mask, &fx)| {
            let (out, q, stop) = tree.run(&CubePoint::from_mask(d, n, mask as u64));
            ((out - fx).abs(), q, stop)
        })
        .collect();
    let total = runs.len() as u64;
    let eps = policy.epsilon;
    let edges = [EXACT_TOL, eps / 8.0, eps / 4.0, eps / 2.0, eps, 2.0 * eps];
    let mut histogram: Vec<HistogramBin> = edges
        .iter()
        .map(|&e| HistogramBin { upper: Some(e), count: 0 })
        .chain(std::iter::once(HistogramBin { upper: None, count: 0 }))
        .collect();
    let mut max_error: f64 = 0.0;
    let mut query_sum = 0u64;
    let mut max_queries = 0;
    let (mut by_var, mut by_budget) = (0u64, 0u64);
    for &(err, q, stop) in &runs {
        let bin = edges.iter().position(|&e| err <= e).unwrap_or(edges.len());
        histogram[bin].count += 1;
        max_error = max_error.max(err);
        query_sum += q as u64;
        max_queries = max_queries.max(q);
        match stop {
            StopReason::VarianceThreshold => by_var += 1,
            StopReason::BudgetExhausted => by_budget += 1,
        }
    }
    let fraction_above = |e: f64| runs.iter().filter(|r| r.0 > e).count() as f64 / total as f64;
    let frontier = [eps / 4.0, eps / 2.0, eps, 2.0 * eps]
        .iter()
        .map(|&e| FrontierPoint {
            epsilon: e,
            failing_fraction: fraction_above(e),
        })
        .collect();
    Ok(ErrorProfile {
        policy: *policy,
        num_inputs: total,
        failing_fraction: fraction_above(eps),
        max_error,
        mean_queries: query_sum as f64 / total as f64,
        max_queries,
        stopped_by_variance: by_var,
        stopped_by_budget: by_budget,
        histogram,
        frontier,
        reference_queries: policy.reference_queries(f.d()),
    })
}

/// One row of a budget sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget: usize,
    pub epsilon: f64,
    pub achieved_failing_fraction: f64,
    pub mean_queries: f64,
}

pub fn budget_sweep(
    f: &BlockMultilinearForm,
    epsilon: f64,
    delta: f64,
    budgets: &[usize],
    cap: usize,
) -> Result<Vec<SweepRow>> {
    budgets
        .iter()
        .map(|&budget| {
            let profile = error_profile(f, &SimulationPolicy::new(epsilon, delta, budget)?, cap)?;
            Ok(SweepRow {
                budget,
                epsilon,
                achieved_failing_fraction: profile.failing_fraction,
                mean_queries: profile.mean_queries,
            })
        })
        .collect()
}
