//! The tensor-product ansatz: fundamental operators, the hierarchical
//! construction of the class operators for any species count, and exact
//! trace evaluation as big-integer stationary weights.
//!
//! A class operator at level `N` is a sum of monomials, each a tensor product
//! of `C(N,2)` fundamental symbols acting slot-wise on tuples of queue
//! counters. Weights are traces of site-ordered products of class operators,
//! evaluated sparsely: propagate each basis tuple through the word (rightmost
//! site first, matching the queue-time direction) and read back the diagonal
//! coefficient.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Sector};
use crate::error::{Error, Result};
use crate::exec;

/// The alphabet of slot operators.
///
/// At truncation dimension `d` these act on `|c⟩`, `0 <= c < d`, as the
/// identity, the raising shift, the lowering shift (annihilating `|0⟩`), the
/// projector on `|0⟩`, and the bidiagonal combinations `D = 1 + delta`,
/// `E = 1 + eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FundamentalSymbol {
    One,
    Eps,
    Delta,
    A,
    D,
    E,
}

impl FundamentalSymbol {
    pub fn name(self) -> &'static str {
        match self {
            Self::One => "1",
            Self::Eps => "eps",
            Self::Delta => "delta",
            Self::A => "A",
            Self::D => "D",
            Self::E => "E",
        }
    }

    /// Truncated `d x d` integer realization.
    pub fn matrix(self, d: usize) -> IntMatrix {
        let mut m = IntMatrix::zero(d);
        match self {
            Self::One => {
                for i in 0..d {
                    m.set(i, i, 1);
                }
            }
            Self::Eps => {
                for i in 0..d.saturating_sub(1) {
                    m.set(i + 1, i, 1);
                }
            }
            Self::Delta => {
                for i in 0..d.saturating_sub(1) {
                    m.set(i, i + 1, 1);
                }
            }
            Self::A => {
                m.set(0, 0, 1);
            }
            Self::D => {
                for i in 0..d {
                    m.set(i, i, 1);
                }
                for i in 0..d.saturating_sub(1) {
                    m.set(i, i + 1, 1);
                }
            }
            Self::E => {
                for i in 0..d {
                    m.set(i, i, 1);
                }
                for i in 0..d.saturating_sub(1) {
                    m.set(i + 1, i, 1);
                }
            }
        }
        m
    }

    /// Images of `|c⟩` under the symbol, capped at `d`. At most two branches;
    /// raising out of the truncation window is an error, never a silent clip.
    fn branches(self, c: u32, d: u32) -> Result<([u32; 2], usize)> {
        let raise = |c: u32| -> Result<u32> {
            if c + 1 >= d {
                Err(Error::TruncationOverflow { d: d as usize })
            } else {
                Ok(c + 1)
            }
        };
        Ok(match self {
            Self::One => ([c, 0], 1),
            Self::Eps => ([raise(c)?, 0], 1),
            Self::Delta => {
                if c > 0 {
                    ([c - 1, 0], 1)
                } else {
                    ([0, 0], 0)
                }
            }
            Self::A => {
                if c == 0 {
                    ([0, 0], 1)
                } else {
                    ([0, 0], 0)
                }
            }
            Self::D => {
                if c > 0 {
                    ([c, c - 1], 2)
                } else {
                    ([0, 0], 1)
                }
            }
            Self::E => ([c, raise(c)?], 2),
        })
    }
}

/// Alias for [`FundamentalSymbol::matrix`], the truncated realization.
pub fn build_fundamental(sym: FundamentalSymbol, d: usize) -> IntMatrix {
    sym.matrix(d)
}

/// Dense square integer matrix; big enough for truncated realizations, small
/// enough to stay `i64` (all entries are sums of products of 0/±1 monomials).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    a: Vec<i64>,
}

impl IntMatrix {
    pub fn zero(n: usize) -> Self {
        Self { n, a: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.a[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, val: i64) {
        self.a[row * self.n + col] = val;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let v = self.get(i, k);
                if v == 0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += v * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            a: self.a.iter().zip(&rhs.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self {
            n: self.n,
            a: self.a.iter().zip(&rhs.a).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn scale(&self, k: i64) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().map(|x| x * k).collect(),
        }
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let n = self.n * rhs.n;
        let mut out = Self::zero(n);
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v == 0 {
                    continue;
                }
                for p in 0..rhs.n {
                    for q in 0..rhs.n {
                        let w = rhs.get(p, q);
                        if w != 0 {
                            out.set(i * rhs.n + p, j * rhs.n + q, v * w);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&x| x == 0)
    }
}

/// Integer-weighted sum of tensor monomials of a fixed rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorOperator {
    rank: usize,
    terms: Vec<(i64, Vec<FundamentalSymbol>)>,
}

impl TensorOperator {
    /// Rank-0 scalar.
    pub fn scalar(coeff: i64) -> Self {
        Self {
            rank: 0,
            terms: if coeff == 0 {
                Vec::new()
            } else {
                vec![(coeff, Vec::new())]
            },
        }
    }

    pub fn monomial(coeff: i64, symbols: Vec<FundamentalSymbol>) -> Self {
        Self {
            rank: symbols.len(),
            terms: vec![(coeff, symbols)],
        }
    }

    /// The zero operator of a given rank.
    pub fn zero(rank: usize) -> Self {
        Self {
            rank,
            terms: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &[(i64, Vec<FundamentalSymbol>)] {
        &self.terms
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in operator sum");
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        Self {
            rank: self.rank,
            terms,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .map(|(c, m)| (-c, m.clone()))
                .collect(),
        }
    }

    /// Tensor product: slots of `self` first, then slots of `rhs`.
    pub fn tensor(&self, rhs: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ca, ma) in &self.terms {
            for (cb, mb) in &rhs.terms {
                let mut mono = Vec::with_capacity(self.rank + rhs.rank);
                mono.extend_from_slice(ma);
                mono.extend_from_slice(mb);
                terms.push((ca * cb, mono));
            }
        }
        Self {
            rank: self.rank + rhs.rank,
            terms,
        }
    }

    /// Monomials as name lists, e.g. `[["A","A","E"]]`; coefficients kept
    /// alongside since hat operators carry signs.
    pub fn monomial_names(&self) -> Vec<(i64, Vec<&'static str>)> {
        self.terms
            .iter()
            .map(|(c, m)| (*c, m.iter().map(|s| s.name()).collect()))
            .collect()
    }

    /// Dense truncated realization of dimension `d^rank`.
    pub fn realize(&self, d: usize) -> IntMatrix {
        let dim = d.pow(self.rank as u32);
        let mut out = IntMatrix::zero(dim);
        for (coeff, mono) in &self.terms {
            let mut m = IntMatrix::identity(1);
            for sym in mono {
                m = m.kron(&sym.matrix(d));
            }
            out = out.add(&m.scale(*coeff));
        }
        out
    }

    /// Dense truncated realization of the product `self * rhs`, formed
    /// slot-wise per monomial pair so no `d^rank`-sized multiplication is
    /// ever needed.
    pub fn realize_product(&self, rhs: &Self, d: usize) -> IntMatrix {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in operator product");
        let dim = d.pow(self.rank as u32);
        let mut out = IntMatrix::zero(dim);
        for (ca, ma) in &self.terms {
            for (cb, mb) in &rhs.terms {
                let mut m = IntMatrix::identity(1);
                for (sa, sb) in ma.iter().zip(mb) {
                    m = m.kron(&sa.matrix(d).mul(&sb.matrix(d)));
                }
                out = out.add(&m.scale(ca * cb));
            }
        }
        out
    }

    /// True when every monomial has the projector at the given slot.
    fn pins_slot(&self, slot: usize) -> bool {
        !self.terms.is_empty()
            && self
                .terms
                .iter()
                .all(|(_, m)| m[slot] == FundamentalSymbol::A)
    }
}

impl fmt::Display for TensorOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, m)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *c != 1 {
                write!(f, "{c}*")?;
            }
            if m.is_empty() {
                write!(f, "1")?;
            } else {
                let names: Vec<&str> = m.iter().map(|s| s.name()).collect();
                write!(f, "{}", names.join("(x)"))?;
            }
        }
        Ok(())
    }
}

/// Building block `a_{KM}` at level `n`: a single rank-`(n-1)` monomial.
pub fn build_akm(n: u8, k: u8, m: u8) -> Result<TensorOperator> {
    use FundamentalSymbol::{Delta, Eps, A, One};
    if n < 1 {
        return Err(Error::Precondition {
            required: "level n >= 1".into(),
            got: format!("n = {n}"),
        });
    }
    let rank = (n - 1) as usize;
    let out_of_range = || Error::Precondition {
        required: format!("valid (K, M) indices at level {n}"),
        got: format!("K = {k}, M = {m}"),
    };
    let mut sym = Vec::with_capacity(rank);
    let pad = |sym: &mut Vec<FundamentalSymbol>, count: usize, s: FundamentalSymbol| {
        let len = sym.len();
        sym.resize(len + count, s);
    };
    match (k, m) {
        (0, 0) => pad(&mut sym, rank, One),
        (0, m) if (1..n).contains(&m) => {
            pad(&mut sym, (m - 1) as usize, One);
            sym.push(Eps);
            pad(&mut sym, (n - m - 1) as usize, One);
        }
        (k, 0) if k == n => pad(&mut sym, rank, A),
        (k, 0) if (1..n).contains(&k) => {
            pad(&mut sym, (k - 1) as usize, A);
            sym.push(Delta);
            pad(&mut sym, (n - k - 1) as usize, One);
        }
        (k, m) if k == m && (1..n).contains(&k) => {
            pad(&mut sym, (k - 1) as usize, A);
            pad(&mut sym, (n - k) as usize, One);
        }
        (k, m) if k >= 1 && k < m && m < n => {
            pad(&mut sym, (k - 1) as usize, A);
            sym.push(Delta);
            pad(&mut sym, (m - k - 1) as usize, One);
            sym.push(Eps);
            pad(&mut sym, (n - m - 1) as usize, One);
        }
        _ => return Err(out_of_range()),
    }
    debug_assert_eq!(sym.len(), rank);
    Ok(TensorOperator::monomial(1, sym))
}

/// Class operators `X_0 … X_N` at level `N`, each of rank `C(N,2)`.
///
/// Levels 0 and 1 are scalars (uniform measure); level 2 is the fundamental
/// triple `E, D, A`; higher levels are built recursively, prefixing the
/// `a_{KM}` slots to the level-`(N-1)` slots.
pub fn build_ansatz(n: u8) -> Vec<TensorOperator> {
    use FundamentalSymbol::{A, D, E};
    match n {
        0 => vec![TensorOperator::scalar(1)],
        1 => vec![TensorOperator::scalar(1), TensorOperator::scalar(1)],
        2 => vec![
            TensorOperator::monomial(1, vec![E]),
            TensorOperator::monomial(1, vec![D]),
            TensorOperator::monomial(1, vec![A]),
        ],
        _ => {
            let prev = build_ansatz(n - 1);
            let mut out = Vec::with_capacity(n as usize + 1);
            // X_0 = sum over M of a_{0M} (x) X_M^{(n-1)}
            let mut x0 = TensorOperator::zero((n - 1) as usize + prev[0].rank());
            for m in 0..n {
                let akm = build_akm(n, 0, m).expect("valid index");
                x0 = x0.add(&akm.tensor(&prev[m as usize]));
            }
            out.push(x0);
            // X_K = a_{K0} (x) X_0^{(n-1)} + sum_{M=K}^{n-1} a_{KM} (x) X_M^{(n-1)}
            for k in 1..=n {
                let mut xk = build_akm(n, k, 0)
                    .expect("valid index")
                    .tensor(&prev[0]);
                for m in k..n {
                    let akm = build_akm(n, k, m).expect("valid index");
                    xk = xk.add(&akm.tensor(&prev[m as usize]));
                }
                out.push(xk);
            }
            out
        }
    }
}

/// Sparse vector on tuples of queue counters with big-integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterState {
    rank: usize,
    terms: HashMap<Vec<u32>, BigInt>,
}

impl CounterState {
    /// The basis vector `|v⟩`.
    pub fn basis(tuple: Vec<u32>) -> Self {
        let rank = tuple.len();
        let mut terms = HashMap::new();
        terms.insert(tuple, BigInt::one());
        Self { rank, terms }
    }

    /// A general sparse state; zero coefficients are dropped, coefficients
    /// of repeated tuples add up.
    pub fn from_terms(
        rank: usize,
        entries: impl IntoIterator<Item = (Vec<u32>, BigInt)>,
    ) -> Result<Self> {
        let mut terms: HashMap<Vec<u32>, BigInt> = HashMap::new();
        for (tuple, coeff) in entries {
            if tuple.len() != rank {
                return Err(Error::RankMismatch {
                    op_rank: rank,
                    state_rank: tuple.len(),
                });
            }
            *terms.entry(tuple).or_insert_with(BigInt::zero) += coeff;
        }
        terms.retain(|_, v| !v.is_zero());
        Ok(Self { rank, terms })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, tuple: &[u32]) -> BigInt {
        self.terms.get(tuple).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    fn retain<F: FnMut(&[u32]) -> bool>(&mut self, mut keep: F) {
        self.terms.retain(|k, _| keep(k));
    }
}

/// Applies an operator to a state: slot-wise branch expansion of every
/// monomial against every stored tuple. Counters live in `0..d`; a raise to
/// `d` is a truncation overflow error.
pub fn apply(op: &TensorOperator, state: &CounterState, d: usize) -> Result<CounterState> {
    if op.rank != state.rank {
        return Err(Error::RankMismatch {
            op_rank: op.rank,
            state_rank: state.rank,
        });
    }
    let d = u32::try_from(d).map_err(|_| Error::Precondition {
        required: "truncation dimension below 2^32".into(),
        got: d.to_string(),
    })?;
    if state.terms.keys().any(|t| t.iter().any(|&c| c >= d)) {
        return Err(Error::TruncationOverflow { d: d as usize });
    }
    let mut out: HashMap<Vec<u32>, BigInt> = HashMap::new();
    let mut stack: Vec<Vec<u32>> = Vec::new();
    let mut next: Vec<Vec<u32>> = Vec::new();
    for (coeff, mono) in &op.terms {
        for (tuple, amp) in &state.terms {
            stack.clear();
            stack.push(Vec::with_capacity(op.rank));
            for (slot, sym) in mono.iter().enumerate() {
                let (vals, count) = sym.branches(tuple[slot], d)?;
                next.clear();
                for partial in stack.iter() {
                    for &v in &vals[..count] {
                        let mut ext = partial.clone();
                        ext.push(v);
                        next.push(ext);
                    }
                }
                std::mem::swap(&mut stack, &mut next);
                if stack.is_empty() {
                    break;
                }
            }
            for full in stack.drain(..) {
                let entry = out.entry(full).or_insert_with(BigInt::zero);
                *entry += amp * *coeff;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(CounterState {
        rank: op.rank,
        terms: out,
    })
}

/// Exact trace of a word of same-rank operators over the basis window
/// `[0, start_bound)^rank`, propagating with counter cap `cap`.
///
/// Site order: the last operator of the word acts first. States are pruned
/// against the return condition (a slot further from the start tuple than the
/// number of remaining factors can never contribute to the diagonal).
pub(crate) fn trace_word(
    word: &[&TensorOperator],
    start_bound: usize,
    cap: usize,
) -> Result<BigInt> {
    if word.is_empty() {
        return Ok(BigInt::one());
    }
    let rank = word[0].rank;
    if word.iter().any(|op| op.rank != rank) {
        return Err(Error::RankMismatch {
            op_rank: rank,
            state_rank: 0,
        });
    }
    // Slots pinned to zero by the first or last factor applied.
    let mut domain_sizes = vec![start_bound.max(1); rank];
    for (slot, size) in domain_sizes.iter_mut().enumerate() {
        if word[word.len() - 1].pins_slot(slot) || word[0].pins_slot(slot) {
            *size = 1;
        }
    }
    let total: usize = domain_sizes.iter().product();
    exec::try_sum_bigint(total, |flat| {
        let mut idx = flat;
        let mut start = vec![0u32; rank];
        for slot in (0..rank).rev() {
            start[slot] = (idx % domain_sizes[slot]) as u32;
            idx /= domain_sizes[slot];
        }
        let mut state = CounterState::basis(start.clone());
        for (step, op) in word.iter().rev().enumerate() {
            state = apply(op, &state, cap)?;
            let remaining = (word.len() - 1 - step) as i64;
            state.retain(|tuple| {
                tuple
                    .iter()
                    .zip(&start)
                    .all(|(&u, &v)| (u as i64 - v as i64).abs() <= remaining)
            });
            if state.is_empty() {
                break;
            }
        }
        Ok(state.coefficient(&start))
    })
}

/// Trace of a word, rotated (cyclic invariance) so the factor with the most
/// projector-pinned slots acts first, with overflow retried at a doubled cap.
pub(crate) fn trace_word_auto(word: &[&TensorOperator], start_bound: usize) -> BigInt {
    if word.is_empty() {
        return BigInt::one();
    }
    let pins = |op: &TensorOperator| (0..op.rank).filter(|&s| op.pins_slot(s)).count();
    let best = word
        .iter()
        .enumerate()
        .max_by_key(|(_, op)| pins(op))
        .map(|(i, _)| i)
        .unwrap();
    let mut rotated: Vec<&TensorOperator> = Vec::with_capacity(word.len());
    rotated.extend_from_slice(&word[best + 1..]);
    rotated.extend_from_slice(&word[..=best]);
    let mut cap = start_bound + word.len();
    loop {
        match trace_word(&rotated, start_bound, cap) {
            Ok(w) => return w,
            Err(Error::TruncationOverflow { .. }) => cap *= 2,
            Err(other) => unreachable!("trace evaluation failed: {other}"),
        }
    }
}

/// Stationary weight of a configuration as the trace of the site-ordered
/// operator product, evaluated exactly.
///
/// The configuration is species-reduced first; a single species (or none)
/// gives weight 1. The default truncation `d = L + 1` covers every counter
/// tuple that can contribute: a counter counts waiting customers drawn from
/// at most `L` arrivals. Propagation headroom above `d` is granted
/// separately, and any overflow doubles the cap and retries rather than
/// truncating.
pub fn trace_weight(config: &Configuration, d: Option<usize>) -> BigInt {
    let (reduced, _) = config.reduce_species();
    let n = reduced.n_species();
    if n <= 1 {
        return BigInt::one();
    }
    let xs = build_ansatz(n);
    let word: Vec<&TensorOperator> = reduced
        .sites()
        .iter()
        .map(|&s| &xs[s as usize])
        .collect();
    let start_bound = d.unwrap_or(reduced.len() + 1);
    trace_word_auto(&word, start_bound)
}

/// Normalization `Z = Π_{k=1}^{N} C(L, m_k)`: the number of multiline states
/// of the sector.
pub fn normalization(sector: &Sector) -> BigInt {
    let l = BigInt::from(sector.len());
    sector
        .counts()
        .cumulative()
        .iter()
        .map(|&mk| binomial(l.clone(), BigInt::from(mk)))
        .fold(BigInt::one(), |acc, b| acc * b)
}

/// Exact stationary probability `W / Z`, in lowest terms.
pub fn probability(config: &Configuration) -> BigRational {
    let (reduced, _) = config.reduce_species();
    let w = trace_weight(&reduced, None);
    let z = normalization(&reduced.sector());
    BigRational::new(w, z)
}
