//! Lower bounds on the completely bounded norm from explicit contractive
//! substitutions.
//!
//! Every achieved value is the operator norm of the form (or polynomial) at a
//! concrete assignment of unitaries or zero matrices, so it is a certified
//! lower bound whenever the reported unitarity residual is at round-off level.

use std::f64::consts::E;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BlockMultilinearForm, CubePoint, Variable};
use crate::matnum::{haar_unitary, polar, Seed, Side, SquareMatrix, C64};
use crate::ncpoly::{
    evaluate_form, evaluate_form_nested, evaluate_nc_nested, MatrixAssignment, NCPolynomial, Unassigned,
    VariableAssignment,
};
use crate::quantum::gen_address_form;

/// Default dimension schedule.
pub const DEFAULT_SCHEDULE: [usize; 3] = [64, 128, 256];

/// Residual below which a report counts as certified.
pub const CERTIFIED_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessMethod {
    SignBaseline,
    ScalarPhase,
    PolarHomogeneous,
    PolarGeneral,
}

/// One dimension of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRun {
    pub dim: usize,
    pub achieved: f64,
    pub unitarity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub method: WitnessMethod,
    pub achieved: f64,
    pub target: f64,
    pub dim: usize,
    pub seed: Seed,
    pub unitarity_residual: f64,
    /// 1-based in serialized output.
    #[serde(with = "one_based")]
    pub selected_block: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub side: Option<Side>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub runs: Vec<WitnessRun>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elapsed_ms: Option<f64>,
}

impl WitnessReport {
    pub fn is_certified(&self) -> bool {
        self.unitarity_residual <= CERTIFIED_RESIDUAL
    }

    /// `achieved / target`, or `None` for a zero target.
    pub fn ratio(&self) -> Option<f64> {
        (self.target > 0.0).then(|| self.achieved / self.target)
    }
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|b| b + 1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        let v = Option::<usize>::deserialize(d)?;
        v.map(|b| b.checked_sub(1).ok_or_else(|| serde::de::Error::custom("blocks are 1-based")))
            .transpose()
    }
}

fn require_homogeneous(f: &BlockMultilinearForm) -> Result<()> {
    if f.num_terms() > 0 && !f.is_homogeneous() {
        return Err(Error::NotHomogeneous(f.d()));
    }
    Ok(())
}

fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() || schedule.contains(&0) {
        return Err(Error::InvalidParameter("dimension schedule must be non-empty and positive".into()));
    }
    Ok(())
}

/// Commutative baseline: for each block `b`, draw the other blocks uniformly
/// and set `x_b(i) = sign(f_{b,i})`, so `f(x) = Σ_i |f_{b,i}(x)|`.
///
/// `achieved` is the best per-block empirical mean, a lower bound on `‖f‖_∞`;
/// `target = 2^{−d/2} Σ_i √Inf_{β,i}(f)` for the selected block `β`.
pub fn sign_baseline(f: &BlockMultilinearForm, trials: usize, seed: &Seed) -> Result<WitnessReport> {
    require_homogeneous(f)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let (d, n) = (f.d(), f.n());
    let mut best: Option<(usize, f64)> = None;
    for b in 0..d {
        let parts = f.factor_block(b);
        let block_seed = seed.child(b as u64);
        let total: f64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = block_seed.child(t as u64).rng();
                let mut x = CubePoint::ones(d, n);
                for c in 0..d {
                    for i in 0..n {
                        x.set(c, i, if rng.random::<bool>() { 1 } else { -1 });
                    }
                }
                parts
                    .iter()
                    .map(|g| g.evaluate(&x).map(f64::abs))
                    .sum::<Result<f64>>()
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .sum();
        let mean = total / trials as f64;
        if best.is_none_or(|(_, m)| mean > m) {
            best = Some((b, mean));
        }
    }
    let (beta, achieved) = best.expect("d ≥ 1");
    let root_sum: f64 = (0..n).map(|i| f.influence(beta, i).sqrt()).sum();
    Ok(WitnessReport {
        method: WitnessMethod::SignBaseline,
        achieved,
        target: 2f64.powf(-(d as f64) / 2.0) * root_sum,
        dim: 1,
        seed: seed.clone(),
        unitarity_residual: 0.0,
        selected_block: Some(beta),
        side: None,
        runs: Vec::new(),
        elapsed_ms: None,
    })
}

/// The `1 × 1` assignment `x_b(1) = 1`, `x_b(2) = i` on the address blocks and
/// `x_{d+1}(addr(a)) = conj(g_a) / |g_a|` on the data block, which makes every
/// term add in phase: `|f| = Σ_a |g_a| = 2^{d/2}`.
pub fn scalar_phase_assignment(d: usize) -> Result<MatrixAssignment> {
    let f = gen_address_form(d)?;
    let n = f.n();
    let mut a = MatrixAssignment::new(1);
    let one = C64::new(1.0, 0.0);
    for b in 0..d {
        for i in 0..n {
            let z = if i == 1 { C64::new(0.0, 1.0) } else { one };
            a.insert((b, i), SquareMatrix::scalar(1, z))?;
        }
    }
    for addr in 0..n {
        let mut g = one;
        for b in 0..d {
            let bit = addr >> (d - 1 - b) & 1;
            let sign = if bit == 1 { -1.0 } else { 1.0 };
            g *= (one + C64::new(0.0, sign)) / 2.0;
        }
        a.insert((d, addr), SquareMatrix::scalar(1, g.conj() / g.norm()))?;
    }
    Ok(a)
}

pub fn scalar_phase_witness_address(d: usize) -> Result<WitnessReport> {
    let f = gen_address_form(d)?;
    let a = scalar_phase_assignment(d)?;
    let value = evaluate_form(&f, &a, Unassigned::Error)?;
    Ok(WitnessReport {
        method: WitnessMethod::ScalarPhase,
        achieved: value.as_array()[(0, 0)].norm(),
        target: 2f64.powf(d as f64 / 2.0),
        dim: 1,
        seed: Seed::new(0),
        unitarity_residual: a.max_unitarity_residual(),
        selected_block: None,
        side: None,
        runs: Vec::new(),
        elapsed_ms: None,
    })
}

/// `p = Σ_i y_i q_i + q_0` (left) or `Σ_i q_i y_i + q_0` (right), with the
/// `q`'s over `z_0, …, z_{t−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPolynomial {
    pub side: Side,
    pub qs: Vec<NCPolynomial>,
    pub q0: NCPolynomial,
    pub num_z: usize,
    /// Degree of `p`, entering the target constant.
    pub degree: usize,
    pub homogeneous: bool,
}

impl SplitPolynomial {
    /// Splits `p` whose variables `0..num_y` are the `y`'s and whose remaining
    /// variables `num_y..` become `z_0, z_1, …`. Each `y` may only appear once
    /// per monomial, as its first (left) or last (right) factor.
    pub fn from_polynomial(p: &NCPolynomial, num_y: usize, side: Side) -> Result<Self> {
        let mut qs = vec![NCPolynomial::new(); num_y];
        let mut q0 = NCPolynomial::new();
        let mut num_z = 0;
        for (w, c) in p.terms() {
            let ys: Vec<usize> = w.iter().copied().filter(|&k| k < num_y).collect();
            let rename = |ks: &[usize]| ks.iter().map(|&k| k - num_y).collect::<Vec<_>>();
            num_z = num_z.max(w.iter().filter(|&&k| k >= num_y).map(|&k| k - num_y + 1).max().unwrap_or(0));
            match (ys.len(), side) {
                (0, _) => q0.add_term(rename(w), c),
                (1, Side::Left) if w[0] < num_y => qs[w[0]].add_term(rename(&w[1..]), c),
                (1, Side::Right) if w[w.len() - 1] < num_y => {
                    qs[w[w.len() - 1]].add_term(rename(&w[..w.len() - 1]), c)
                }
                _ => {
                    return Err(Error::NotSplittable {
                        side: if side == Side::Left { "left" } else { "right" },
                        detail: format!("monomial {w:?}"),
                    })
                }
            }
        }
        Ok(SplitPolynomial {
            side,
            qs,
            q0,
            num_z,
            degree: p.degree(),
            homogeneous: p.homogeneous_degree().is_some(),
        })
    }

    /// `(e(d+1))^{−1/2} Σ‖q_i‖₂` when homogeneous, else `(√e (d+1))^{−1} Σ‖q_i‖₂`.
    pub fn target(&self) -> f64 {
        let sum: f64 = self.qs.iter().map(NCPolynomial::l2_norm).sum();
        polar_constant(self.degree, self.homogeneous) * sum
    }
}

fn polar_constant(degree: usize, homogeneous: bool) -> f64 {
    let d1 = degree as f64 + 1.0;
    if homogeneous {
        1.0 / (E * d1).sqrt()
    } else {
        1.0 / (E.sqrt() * d1)
    }
}

/// `V_i` and the assembled matrix `Σ V_i M_i + M_0` (left) or `Σ M_i V_i + M_0`
/// (right). With `M_i = U_i P_i` (left) the choice `V_i = U_0 U_i*` gives
/// `U_0 (P_0 + Σ P_i)`; with `M_i = P_i U_i` (right) `V_i = U_i* U_0` gives
/// `(P_0 + Σ P_i) U_0`. `U_0 = I` when `M_0` is absent, and a missing `M_i`
/// gets `V_i = I`.
struct Assembled {
    vs: Vec<SquareMatrix>,
    matrix: SquareMatrix,
}

fn assemble(ms: &[Option<SquareMatrix>], m0: Option<&SquareMatrix>, side: Side, dim: usize) -> Result<Assembled> {
    let u0 = match m0 {
        Some(m) => polar(m, side)?.unitary,
        None => SquareMatrix::identity(dim),
    };
    let mut matrix = m0.cloned().unwrap_or_else(|| SquareMatrix::zeros(dim));
    let mut vs = Vec::with_capacity(ms.len());
    for m in ms {
        let Some(m) = m else {
            vs.push(SquareMatrix::identity(dim));
            continue;
        };
        let ui_adj = polar(m, side)?.unitary.adjoint();
        let v = match side {
            Side::Left => &u0 * &ui_adj,
            Side::Right => &ui_adj * &u0,
        };
        let term = match side {
            Side::Left => &v * m,
            Side::Right => m * &v,
        };
        matrix.add_scaled(1.0, &term);
        vs.push(v);
    }
    Ok(Assembled { vs, matrix })
}

fn sample_unitaries<K: Send>(keys: Vec<(K, u64)>, dim: usize, seed: &Seed) -> Vec<(K, SquareMatrix)> {
    keys.into_par_iter()
        .map(|(k, path)| (k, haar_unitary(dim, &seed.child(path))))
        .collect()
}

/// The Haar-plus-polar construction for a split polynomial at dimension `dim`.
pub struct PolarWitness {
    pub report: WitnessReport,
    /// Substitutions for the `y`'s.
    pub vs: Vec<SquareMatrix>,
    /// Haar substitutions for the `z`'s, `z_j` from `seed.child(j)`.
    pub ws: VariableAssignment,
}

pub fn polar_witness(p: &SplitPolynomial, dim: usize, seed: &Seed) -> Result<PolarWitness> {
    check_schedule(&[dim])?;
    let mut ws = VariableAssignment::new(dim);
    for (j, w) in sample_unitaries((0..p.num_z).map(|j| (j, j as u64)).collect(), dim, seed) {
        ws.insert(j, w)?;
    }
    let ms = p
        .qs
        .iter()
        .map(|q| Ok((!q.is_zero()).then_some(evaluate_nc_nested(q, &ws)?)))
        .collect::<Result<Vec<_>>>()?;
    let m0 = if p.q0.is_zero() {
        None
    } else {
        Some(evaluate_nc_nested(&p.q0, &ws)?)
    };
    let assembled = assemble(&ms, m0.as_ref(), p.side, dim)?;
    let residual = assembled
        .vs
        .iter()
        .map(SquareMatrix::unitarity_residual)
        .fold(ws.max_unitarity_residual(), f64::max);
    let report = WitnessReport {
        method: if p.homogeneous {
            WitnessMethod::PolarHomogeneous
        } else {
            WitnessMethod::PolarGeneral
        },
        achieved: assembled.matrix.operator_norm(),
        target: p.target(),
        dim,
        seed: seed.clone(),
        unitarity_residual: residual,
        selected_block: None,
        side: Some(p.side),
        runs: Vec::new(),
        elapsed_ms: None,
    };
    Ok(PolarWitness {
        report,
        vs: assembled.vs,
        ws,
    })
}

/// A form witness at one dimension: the full assignment and `‖f(U)‖_op`.
pub struct FormWitness {
    pub assignment: MatrixAssignment,
    pub achieved: f64,
    pub unitarity_residual: f64,
    /// `Σ V_i M_i + M_0`, equal to `f` at `assignment` up to rounding.
    pub matrix: SquareMatrix,
}

/// Pulls out block `beta` of `f = Σ_i x_β(i) q_i + q_0` (or `Σ_i q_i x_β(i) + q_0`),
/// draws Haar unitaries for the support variables of the blocks in `free`,
/// and places the polar-aligned `V_i` at `x_β(i)`. Blocks outside `free` and
/// `β` stay unassigned, i.e. zero.
fn form_witness_at(
    qs: &[BlockMultilinearForm],
    q0: &BlockMultilinearForm,
    beta: usize,
    side: Side,
    free: &[Variable],
    dim: usize,
    seed: &Seed,
) -> Result<FormWitness> {
    let n = q0.n();
    let keys = free.iter().map(|&(b, i)| ((b, i), (b * n + i) as u64)).collect();
    let mut assignment = MatrixAssignment::new(dim);
    for (v, w) in sample_unitaries(keys, dim, seed) {
        assignment.insert(v, w)?;
    }
    let ms = qs
        .iter()
        .map(|q| {
            if q.num_terms() == 0 && q.constant() == 0.0 {
                return Ok(None);
            }
            Ok(Some(evaluate_form_nested(q, &assignment, Unassigned::Zero)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let m0 = if q0.num_terms() == 0 && q0.constant() == 0.0 {
        None
    } else {
        Some(evaluate_form_nested(q0, &assignment, Unassigned::Zero)?)
    };
    let assembled = assemble(&ms, m0.as_ref(), side, dim)?;
    for (i, (v, m)) in assembled.vs.into_iter().zip(&ms).enumerate() {
        if m.is_some() {
            assignment.insert((beta, i), v)?;
        }
    }
    Ok(FormWitness {
        achieved: assembled.matrix.operator_norm(),
        unitarity_residual: assignment.max_unitarity_residual(),
        matrix: assembled.matrix,
        assignment,
    })
}

fn support_outside(f: &BlockMultilinearForm, keep: impl Fn(usize) -> bool) -> Vec<Variable> {
    f.support().into_iter().filter(|&(b, _)| keep(b)).collect()
}

fn best_over_schedule(
    schedule: &[usize],
    run: impl Fn(usize) -> Result<FormWitness>,
) -> Result<(Vec<WitnessRun>, usize)> {
    let mut runs = Vec::with_capacity(schedule.len());
    let mut best = 0;
    for (k, &dim) in schedule.iter().enumerate() {
        let w = run(dim)?;
        runs.push(WitnessRun {
            dim,
            achieved: w.achieved,
            unitarity_residual: w.unitarity_residual,
        });
        if w.achieved > runs[best].achieved {
            best = k;
        }
    }
    Ok((runs, best))
}

/// Which end block the root-influence witness pulls out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndBlock {
    First,
    Last,
}

impl EndBlock {
    fn block(self, d: usize) -> usize {
        match self {
            EndBlock::First => 0,
            EndBlock::Last => d - 1,
        }
    }

    fn side(self) -> Side {
        match self {
            EndBlock::First => Side::Left,
            EndBlock::Last => Side::Right,
        }
    }
}

/// One dimension of [`root_influence_witness`], with the assignment.
/// Dimension `dim` draws from `seed.child(dim)`, then `child(b·n + i)` per variable.
pub fn root_influence_witness_at(
    f: &BlockMultilinearForm,
    end: EndBlock,
    dim: usize,
    seed: &Seed,
) -> Result<FormWitness> {
    require_homogeneous(f)?;
    let beta = end.block(f.d());
    let qs = f.factor_block(beta);
    let q0 = BlockMultilinearForm::new(f.d(), f.n())?;
    let free = support_outside(f, |b| b != beta);
    form_witness_at(&qs, &q0, beta, end.side(), &free, dim, &seed.child(dim as u64))
}

/// Homogeneous root-influence witness pulling out the first or last block;
/// best over the schedule. `target = (e(d+1))^{−1/2} Σ_i √Inf_{β,i}(f)`.
pub fn root_influence_witness(
    f: &BlockMultilinearForm,
    end: EndBlock,
    schedule: &[usize],
    seed: &Seed,
) -> Result<WitnessReport> {
    require_homogeneous(f)?;
    check_schedule(schedule)?;
    let beta = end.block(f.d());
    let root_sum: f64 = (0..f.n()).map(|i| f.influence(beta, i).sqrt()).sum();
    let (runs, best) = best_over_schedule(schedule, |dim| root_influence_witness_at(f, end, dim, seed))?;
    Ok(WitnessReport {
        method: WitnessMethod::PolarHomogeneous,
        achieved: runs[best].achieved,
        target: polar_constant(f.d(), true) * root_sum,
        dim: runs[best].dim,
        seed: seed.clone(),
        unitarity_residual: runs[best].unitarity_residual,
        selected_block: Some(beta),
        side: Some(end.side()),
        runs,
        elapsed_ms: None,
    })
}

/// `β` maximizing `Var[f_β]` over the leading-block decomposition, lowest on ties.
pub fn select_block(f: &BlockMultilinearForm) -> usize {
    let parts = f.leading_block_decomposition();
    let mut best = 0;
    for (b, part) in parts.iter().enumerate() {
        if part.variance() > parts[best].variance() {
            best = b;
        }
    }
    best
}

/// `Var[f] / (√e (d+1)² √MaxInf(f))`, or 0 for a zero-variance form.
pub fn aa_target(f: &BlockMultilinearForm) -> f64 {
    let var = f.variance();
    if var == 0.0 {
        return 0.0;
    }
    let d1 = f.d() as f64 + 1.0;
    var / (E.sqrt() * d1 * d1 * f.max_influence().value.sqrt())
}

/// One dimension of [`aa_witness`], with the assignment; seeds as in
/// [`root_influence_witness_at`].
pub fn aa_witness_at(f: &BlockMultilinearForm, dim: usize, seed: &Seed) -> Result<FormWitness> {
    let beta = select_block(f);
    let parts = f.leading_block_decomposition();
    let qs = parts[beta].factor_block(beta);
    let mut q0 = BlockMultilinearForm::constant_form(f.d(), f.n(), f.constant())?;
    for part in &parts[beta + 1..] {
        q0 = q0.try_add(part)?;
    }
    let free = support_outside(f, |b| b > beta);
    form_witness_at(&qs, &q0, beta, Side::Left, &free, dim, &seed.child(dim as u64))
}

/// General-form witness: zero the blocks before `β`, pull out block `β` over
/// its support and treat the later leading-block parts plus `E f` as `q_0`.
pub fn aa_witness(f: &BlockMultilinearForm, schedule: &[usize], seed: &Seed) -> Result<WitnessReport> {
    check_schedule(schedule)?;
    if f.variance() == 0.0 {
        // All matrices zero: f evaluates to E f · I.
        return Ok(WitnessReport {
            method: WitnessMethod::PolarGeneral,
            achieved: f.constant().abs(),
            target: 0.0,
            dim: 1,
            seed: seed.clone(),
            unitarity_residual: 0.0,
            selected_block: None,
            side: Some(Side::Left),
            runs: Vec::new(),
            elapsed_ms: None,
        });
    }
    let beta = select_block(f);
    let (runs, best) = best_over_schedule(schedule, |dim| aa_witness_at(f, dim, seed))?;
    Ok(WitnessReport {
        method: WitnessMethod::PolarGeneral,
        achieved: runs[best].achieved,
        target: aa_target(f),
        dim: runs[best].dim,
        seed: seed.clone(),
        unitarity_residual: runs[best].unitarity_residual,
        selected_block: Some(beta),
        side: Some(Side::Left),
        runs,
        elapsed_ms: None,
    })
}
