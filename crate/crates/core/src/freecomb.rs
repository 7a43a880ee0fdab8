//! Exact free-probability combinatorics for free Haar unitaries.
//!
//! The trace of a word in free Haar unitaries `u_1, …, u_t` and their adjoints
//! is 1 if the word reduces to the identity in the free group and 0 otherwise,
//! so every moment here is computed by word reduction.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ncpoly::NCPolynomial;

/// Default bound on `2dm` for pairing enumeration.
pub const DEFAULT_PAIRING_CAP: usize = 28;

/// Default bound on `(#terms)^{2m}` for exact moments.
pub const DEFAULT_MOMENT_CAP: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub starred: bool,
}

impl Letter {
    pub fn new(generator: usize, starred: bool) -> Self {
        Letter { generator, starred }
    }

    fn cancels(self, other: Letter) -> bool {
        self.generator == other.generator && self.starred != other.starred
    }
}

/// A word over `u_k` and `u_k*`; the empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// `u_{k_1} ⋯ u_{k_m}`.
    pub fn monomial(gens: &[usize]) -> Self {
        Word(gens.iter().map(|&g| Letter::new(g, false)).collect())
    }

    /// `(u_{k_1} ⋯ u_{k_m})* = u_{k_m}* ⋯ u_{k_1}*`.
    pub fn monomial_adjoint(gens: &[usize]) -> Self {
        Word(gens.iter().rev().map(|&g| Letter::new(g, true)).collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn adjoint(&self) -> Word {
        Word(self.0.iter().rev().map(|l| Letter::new(l.generator, !l.starred)).collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| !w[0].cancels(w[1]))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "⊥");
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "·")?;
            }
            write!(f, "u{}{}", l.generator + 1, if l.starred { "*" } else { "" })?;
        }
        Ok(())
    }
}

fn push_reduced(stack: &mut Vec<Letter>, l: Letter) {
    match stack.last() {
        Some(&top) if top.cancels(l) => {
            stack.pop();
        }
        _ => stack.push(l),
    }
}

/// Free reduction by a single left-to-right stack pass.
pub fn reduce(w: &Word) -> Word {
    let mut stack = Vec::with_capacity(w.len());
    for &l in w.letters() {
        push_reduced(&mut stack, l);
    }
    Word(stack)
}

/// Free reduction removing a uniformly chosen cancelling pair at each step.
/// Confluence means this always agrees with [`reduce`].
pub fn reduce_random_order<R: Rng + ?Sized>(w: &Word, rng: &mut R) -> Word {
    let mut v = w.0.clone();
    loop {
        let spots: Vec<usize> = (0..v.len().saturating_sub(1))
            .filter(|&k| v[k].cancels(v[k + 1]))
            .collect();
        if spots.is_empty() {
            return Word(v);
        }
        let k = spots[rng.random_range(0..spots.len())];
        v.drain(k..k + 2);
    }
}

/// `φ(w) ∈ {0, 1}`: the trace of a word in free Haar unitaries.
pub fn phi(w: &Word) -> u8 {
    u8::from(reduce(w).is_empty())
}

/// Non-crossing perfect matching of `[2dm]` that pairs only opposite colors,
/// where position `k` has color `(k / d) mod 2`. Positions are 0-based and
/// pairs are sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct StarPairing {
    pub d: usize,
    pub m: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl StarPairing {
    pub fn color(&self, k: usize) -> usize {
        (k / self.d) % 2
    }

    /// Checks the matching, color and non-crossing conditions from scratch.
    pub fn is_valid(&self) -> bool {
        let len = 2 * self.d * self.m;
        let mut seen = vec![false; len];
        for &(a, b) in &self.pairs {
            if a >= b || b >= len || seen[a] || seen[b] || self.color(a) == self.color(b) {
                return false;
            }
            seen[a] = true;
            seen[b] = true;
        }
        if !seen.iter().all(|&s| s) {
            return false;
        }
        self.pairs.iter().all(|&(a, b)| {
            self.pairs
                .iter()
                .all(|&(c, e)| !(a < c && c < b && b < e) && !(c < a && a < e && e < b))
        })
    }
}

fn check_pairing_args(d: usize, m: usize, cap: usize) -> Result<usize> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter("d and m must be positive".into()));
    }
    let len = d
        .checked_mul(m)
        .and_then(|x| x.checked_mul(2))
        .ok_or(Error::Overflow("2dm"))?;
    if len > cap {
        return Err(Error::CapExceeded {
            what: "2dm",
            value: len as u128,
            cap: cap as u128,
        });
    }
    Ok(len)
}

struct PairingSearch {
    d: usize,
    len: usize,
    partner: Vec<Option<usize>>,
}

impl PairingSearch {
    fn color(&self, k: usize) -> usize {
        (k / self.d) % 2
    }

    /// Backtracks over the leftmost unpaired position `p`. A partner `q` must be
    /// unpaired, of the opposite color, with no paired position in `(p, q)`
    /// (that would cross) and with the open interval color-balanced so it can
    /// itself be paired off.
    fn run(&mut self, visit: &mut dyn FnMut(&[Option<usize>])) {
        let Some(p) = (0..self.len).find(|&k| self.partner[k].is_none()) else {
            visit(&self.partner);
            return;
        };
        let mut balance: isize = 0;
        for q in p + 1..self.len {
            if self.partner[q].is_some() {
                break;
            }
            if (q - p) % 2 == 1 && balance == 0 && self.color(q) != self.color(p) {
                self.partner[p] = Some(q);
                self.partner[q] = Some(p);
                self.run(visit);
                self.partner[p] = None;
                self.partner[q] = None;
            }
            balance += if self.color(q) == 0 { 1 } else { -1 };
        }
    }
}

fn search(d: usize, m: usize, cap: usize, visit: &mut dyn FnMut(&[Option<usize>])) -> Result<()> {
    let len = check_pairing_args(d, m, cap)?;
    PairingSearch {
        d,
        len,
        partner: vec![None; len],
    }
    .run(visit);
    Ok(())
}

/// All of `NC₂*(d, m)` in lexicographic order of partner choices.
pub fn enumerate_star_pairings(d: usize, m: usize, cap: usize) -> Result<Vec<StarPairing>> {
    let mut out = Vec::new();
    search(d, m, cap, &mut |partner| {
        let pairs = partner
            .iter()
            .enumerate()
            .filter_map(|(a, b)| b.filter(|&b| b > a).map(|b| (a, b)))
            .collect();
        out.push(StarPairing { d, m, pairs });
    })?;
    Ok(out)
}

/// `|NC₂*(d, m)|` by the same search without materializing pairings.
pub fn count_star_pairings(d: usize, m: usize, cap: usize) -> Result<u128> {
    let mut count = 0u128;
    search(d, m, cap, &mut |_| count += 1)?;
    Ok(count)
}

pub fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc · (n − k + i) is divisible by i after the multiplication.
        acc = acc.checked_mul(n - k + i).ok_or(Error::Overflow("binomial"))? / i;
    }
    Ok(acc)
}

/// `C_{d,m} = binom(m(d+1), m−1) / m`.
pub fn fuss_catalan(d: usize, m: usize) -> Result<u128> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter("d and m must be positive".into()));
    }
    let (d, m) = (d as u128, m as u128);
    let top = m
        .checked_mul(d + 1)
        .ok_or(Error::Overflow("fuss-catalan"))?;
    Ok(binomial(top, m - 1)? / m)
}

/// A moment value, exact when every coefficient involved is an integer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MomentValue {
    Integer(i128),
    Real(f64),
}

impl MomentValue {
    pub fn as_f64(self) -> f64 {
        match self {
            MomentValue::Integer(k) => k as f64,
            MomentValue::Real(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, MomentValue::Integer(_))
    }
}

impl fmt::Display for MomentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentValue::Integer(k) => write!(f, "{k}"),
            MomentValue::Real(x) => write!(f, "{x}"),
        }
    }
}

/// Largest magnitude for which an `f64` integer converts to `i128` losslessly.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

fn integer_coefficients(p: &NCPolynomial) -> Option<Vec<i128>> {
    p.terms()
        .map(|(_, c)| (c.fract() == 0.0 && c.abs() <= EXACT_INT_LIMIT).then_some(c as i128))
        .collect()
}

/// Signed sum over coefficient products, exact in `i128` when possible and
/// falling back to `f64` on non-integers or overflow.
enum Accumulator {
    Integer(i128),
    Real(f64),
}

impl Accumulator {
    fn finish(self) -> MomentValue {
        match self {
            Accumulator::Integer(k) => MomentValue::Integer(k),
            Accumulator::Real(x) => MomentValue::Real(x),
        }
    }
}

struct MomentSearch<'a> {
    words: Vec<(Word, Word)>,
    slots: usize,
    letters_per_slot: usize,
    on_hit: &'a mut dyn FnMut(&[usize]),
}

impl MomentSearch<'_> {
    /// Slot `k` holds a monomial for even `k` and an adjoint monomial for odd
    /// `k`; choices whose partial reduction is too long to cancel are pruned.
    fn run(&mut self, chosen: &mut Vec<usize>, stack: &[Letter]) {
        let k = chosen.len();
        if k == self.slots {
            if stack.is_empty() {
                (self.on_hit)(chosen);
            }
            return;
        }
        let remaining = (self.slots - k) * self.letters_per_slot;
        if stack.len() > remaining {
            return;
        }
        for t in 0..self.words.len() {
            let w = if k.is_multiple_of(2) { &self.words[t].0 } else { &self.words[t].1 };
            let mut next = stack.to_vec();
            for &l in w.letters() {
                push_reduced(&mut next, l);
            }
            chosen.push(t);
            self.run(chosen, &next);
            chosen.pop();
        }
    }
}

fn sum_over_reducing_choices(
    words: Vec<(Word, Word)>,
    coeffs: Vec<f64>,
    int_coeffs: Option<Vec<i128>>,
    slots: usize,
    letters_per_slot: usize,
) -> MomentValue {
    let mut acc = match int_coeffs {
        Some(_) => Accumulator::Integer(0),
        None => Accumulator::Real(0.0),
    };
    let mut on_hit = |chosen: &[usize]| {
        if let (Accumulator::Integer(total), Some(ints)) = (&acc, &int_coeffs) {
            let term = chosen
                .iter()
                .try_fold(1i128, |prod, &t| prod.checked_mul(ints[t]));
            if let Some(sum) = term.and_then(|t| total.checked_add(t)) {
                acc = Accumulator::Integer(sum);
                return;
            }
            acc = Accumulator::Real(*total as f64);
        }
        if let Accumulator::Real(total) = &mut acc {
            *total += chosen.iter().map(|&t| coeffs[t]).product::<f64>();
        }
    };
    MomentSearch {
        words,
        slots,
        letters_per_slot,
        on_hit: &mut on_hit,
    }
    .run(&mut Vec::with_capacity(slots), &[]);
    acc.finish()
}

fn homogeneous_degree(p: &NCPolynomial) -> Result<usize> {
    p.homogeneous_degree()
        .ok_or(Error::NotHomogeneous(p.degree()))
}

/// `φ((p p*)^m) = Σ c_{i_1} c_{j_1} ⋯ c_{i_m} c_{j_m} φ(u_{i_1} u_{j_1}* ⋯ u_{i_m} u_{j_m}*)`
/// over all `2m`-fold choices of monomials of the homogeneous polynomial `p`.
pub fn trace_moment_exact(p: &NCPolynomial, m: usize, cap: u128) -> Result<MomentValue> {
    let d = homogeneous_degree(p)?;
    if m == 0 {
        return Ok(MomentValue::Integer(1));
    }
    let choices = (p.num_terms() as u128)
        .checked_pow(2 * m as u32)
        .ok_or(Error::Overflow("moment choices"))?;
    if choices > cap {
        return Err(Error::CapExceeded {
            what: "(#terms)^(2m)",
            value: choices,
            cap,
        });
    }
    let words = p
        .terms()
        .map(|(w, _)| (Word::monomial(w), Word::monomial_adjoint(w)))
        .collect();
    let coeffs = p.terms().map(|(_, c)| c).collect();
    Ok(sum_over_reducing_choices(words, coeffs, integer_coefficients(p), 2 * m, d))
}

/// `φ(p q*)` for arbitrary (not necessarily homogeneous) polynomials.
pub fn trace_inner_product(p: &NCPolynomial, q: &NCPolynomial) -> MomentValue {
    let ints = integer_coefficients(p).zip(integer_coefficients(q));
    let mut exact: Option<i128> = ints.as_ref().map(|_| 0);
    let mut real = 0.0;
    for (a, (wa, ca)) in p.terms().enumerate() {
        for (b, (wb, cb)) in q.terms().enumerate() {
            let word = Word::monomial(wa).concat(&Word::monomial_adjoint(wb));
            if phi(&word) == 0 {
                continue;
            }
            real += ca * cb;
            if let (Some(total), Some((ip, iq))) = (exact, &ints) {
                exact = ip[a]
                    .checked_mul(iq[b])
                    .and_then(|t| total.checked_add(t));
            }
        }
    }
    match exact {
        Some(k) => MomentValue::Integer(k),
        None => MomentValue::Real(real),
    }
}

/// `C_{d,m} · ‖p‖₂^{2m}`, exact when `p` has integer coefficients.
pub fn moment_upper_bound(p: &NCPolynomial, m: usize) -> Result<MomentValue> {
    let d = homogeneous_degree(p)?;
    let count = if m == 0 {
        1
    } else {
        fuss_catalan(d.max(1), m)?
    };
    if let Some(ints) = integer_coefficients(p) {
        let exact = ints
            .iter()
            .try_fold(0i128, |s, c| s.checked_add(c.checked_mul(*c)?))
            .and_then(|norm_sq| norm_sq.checked_pow(m as u32))
            .and_then(|pow| i128::try_from(count).ok()?.checked_mul(pow));
        if let Some(v) = exact {
            return Ok(MomentValue::Integer(v));
        }
    }
    Ok(MomentValue::Real(count as f64 * p.l2_norm().powi(2 * m as i32)))
}

/// Generators at each position of `u_{i_1} u_{j_1}* ⋯ u_{i_m} u_{j_m}*`, where
/// `tuples = [i_1, j_1, …, i_m, j_m]` are degree-`d` index tuples.
fn positions(tuples: &[Vec<usize>], d: usize) -> Vec<usize> {
    tuples
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            let block: Vec<usize> = if k % 2 == 0 {
                t.clone()
            } else {
                t.iter().rev().copied().collect()
            };
            debug_assert_eq!(block.len(), d);
            block
        })
        .collect()
}

/// The word `u_{i_1} u_{j_1}* ⋯ u_{i_m} u_{j_m}*`.
pub fn moment_word(tuples: &[Vec<usize>]) -> Word {
    let mut letters = Vec::new();
    for (k, t) in tuples.iter().enumerate() {
        let w = if k % 2 == 0 {
            Word::monomial(t)
        } else {
            Word::monomial_adjoint(t)
        };
        letters.extend_from_slice(w.letters());
    }
    Word(letters)
}

/// The pairings of `NC₂*(d, m)` that only match positions carrying the same
/// generator in `u_{i_1} u_{j_1}* ⋯`.
pub fn consistent_pairings(tuples: &[Vec<usize>], d: usize, m: usize, cap: usize) -> Result<Vec<StarPairing>> {
    if tuples.len() != 2 * m || tuples.iter().any(|t| t.len() != d) {
        return Err(Error::mismatch(
            format!("{} tuples of length {d}", 2 * m),
            format!("{} tuples", tuples.len()),
        ));
    }
    let gens = positions(tuples, d);
    Ok(enumerate_star_pairings(d, m, cap)?
        .into_iter()
        .filter(|pi| pi.pairs.iter().all(|&(a, b)| gens[a] == gens[b]))
        .collect())
}
