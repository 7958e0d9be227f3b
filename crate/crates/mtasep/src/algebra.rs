//! Algebraic verification layer: quadratic-algebra relations, word reduction
//! for two-species matrix elements, the local generator, hat operators, and
//! the telescoping stationarity identity.
//!
//! Operator identities are checked on truncated realizations restricted to a
//! boundary-safe window: a truncated shift violates `delta * eps = 1` only in
//! the last index, so identities about the semi-infinite operators hold
//! exactly once one index of headroom per raising factor is left out.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::config::{Configuration, Sector};
use crate::error::{Error, Result};
use crate::exec;
use crate::tensor::{self, FundamentalSymbol, IntMatrix, TensorOperator};

/// One letter of a two-species operator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    D,
    E,
    A,
}

impl Letter {
    fn symbol(self) -> FundamentalSymbol {
        match self {
            Letter::D => FundamentalSymbol::D,
            Letter::E => FundamentalSymbol::E,
            Letter::A => FundamentalSymbol::A,
        }
    }
}

/// A finite word over `{D, E, A}`, evaluated as the matrix element
/// `⟨0| w |0⟩`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self(letters)
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
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'D' => Ok(Letter::D),
                'E' => Ok(Letter::E),
                'A' => Ok(Letter::A),
                other => Err(Error::MalformedToken(other.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(
                f,
                "{}",
                match l {
                    Letter::D => 'D',
                    Letter::E => 'E',
                    Letter::A => 'A',
                }
            )?;
        }
        Ok(())
    }
}

/// Evaluates `⟨0| w |0⟩` by term rewriting: `DE -> D + E`, `DA -> A`,
/// `AE -> A`, and boundary absorption `⟨0|E = ⟨0|`, `⟨0|A = ⟨0|`,
/// `D|0⟩ = |0⟩`, `A|0⟩ = |0⟩`. Sorted words evaluate to 1.
pub fn reduce_word(w: &Word) -> BigInt {
    fn strip(mut word: &[Letter]) -> &[Letter] {
        while let Some(Letter::E | Letter::A) = word.first() {
            word = &word[1..];
        }
        while let Some(Letter::D | Letter::A) = word.last() {
            word = &word[..word.len() - 1];
        }
        word
    }

    fn go(word: &[Letter], memo: &mut HashMap<Vec<Letter>, BigInt>) -> BigInt {
        let word = strip(word);
        if word.is_empty() {
            return BigInt::one();
        }
        if let Some(hit) = memo.get(word) {
            return hit.clone();
        }
        let val = if let Some(pos) = word.windows(2).position(|p| p == [Letter::D, Letter::E]) {
            let mut keep_d: Vec<Letter> = Vec::with_capacity(word.len() - 1);
            keep_d.extend_from_slice(&word[..pos + 1]);
            keep_d.extend_from_slice(&word[pos + 2..]);
            let mut keep_e = keep_d.clone();
            keep_e[pos] = Letter::E;
            go(&keep_d, memo) + go(&keep_e, memo)
        } else if let Some(pos) = word.windows(2).position(|p| p == [Letter::D, Letter::A]) {
            let mut rest: Vec<Letter> = Vec::with_capacity(word.len() - 1);
            rest.extend_from_slice(&word[..pos]);
            rest.extend_from_slice(&word[pos + 1..]);
            go(&rest, memo)
        } else if let Some(pos) = word.windows(2).position(|p| p == [Letter::A, Letter::E]) {
            let mut rest: Vec<Letter> = Vec::with_capacity(word.len() - 1);
            rest.extend_from_slice(&word[..pos]);
            rest.extend_from_slice(&word[pos + 2..]);
            rest.insert(pos, Letter::A);
            go(&rest, memo)
        } else {
            // Stripped of leading E/A and trailing D/A with no rewritable
            // pair left, only the empty word remains.
            unreachable!("irreducible non-empty word {word:?}")
        };
        memo.insert(word.to_vec(), val.clone());
        val
    }

    go(&w.0, &mut HashMap::new())
}

/// Numeric cross-check of [`reduce_word`]: `⟨0| w |0⟩` on the truncated
/// realization, exact once `d` exceeds the word length plus one.
pub fn word_matrix_element(w: &Word, d: usize) -> BigInt {
    let mut vec = vec![BigInt::zero(); d];
    vec[0] = BigInt::one();
    for letter in w.0.iter().rev() {
        let m = letter.symbol().matrix(d);
        let mut next = vec![BigInt::zero(); d];
        for (row, slot) in next.iter_mut().enumerate() {
            for (col, amp) in vec.iter().enumerate() {
                let v = m.get(row, col);
                if v != 0 {
                    *slot += amp * v;
                }
            }
        }
        vec = next;
    }
    vec.swap_remove(0)
}

/// Whether the pair `(left, right)` exchanges to `(right, left)` at rate 1:
/// a particle hops over a hole or over any higher class.
pub fn exchange_allowed(left: u8, right: u8) -> bool {
    left >= 1 && (right == 0 || right > left)
}

/// The local bond generator as an `(N+1)^2 x (N+1)^2` integer matrix in the
/// transpose convention: columns index source pairs, `Q(JK, KJ) = 1` and
/// `Q(KJ, KJ) = -1` for each allowed exchange.
pub fn local_generator(n: u8) -> IntMatrix {
    let side = (n as usize + 1) * (n as usize + 1);
    let mut q = IntMatrix::zero(side);
    for left in 0..=n {
        for right in 0..=n {
            if exchange_allowed(left, right) {
                let source = left as usize * (n as usize + 1) + right as usize;
                let target = right as usize * (n as usize + 1) + left as usize;
                q.set(target, source, 1);
                q.set(source, source, -1);
            }
        }
    }
    q
}

/// Outcome of one operator-identity check.
#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub max_abs_deviation: i64,
}

/// Report of the quadratic-algebra checks at one truncation.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticReport {
    pub d: usize,
    pub checks: Vec<RelationCheck>,
}

impl QuadraticReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.max_abs_deviation == 0)
    }
}

/// Verifies `delta * eps = 1`, `delta * A = 0`, `A * eps = 0` on the
/// truncated realizations; the product `delta * eps` is compared on the
/// boundary-safe window (indices below `d - 1`).
pub fn check_quadratic(d: usize) -> QuadraticReport {
    use FundamentalSymbol::{Delta, Eps, A};
    let delta = Delta.matrix(d);
    let eps = Eps.matrix(d);
    let a = A.matrix(d);

    let mut checks = Vec::new();
    let de = delta.mul(&eps);
    let mut dev = 0i64;
    for i in 0..d - 1 {
        for j in 0..d - 1 {
            dev = dev.max((de.get(i, j) - i64::from(i == j)).abs());
        }
    }
    checks.push(RelationCheck {
        relation: "delta*eps = 1".into(),
        max_abs_deviation: dev,
    });

    let da = delta.mul(&a);
    let dev = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| da.get(i, j).abs())
        .max()
        .unwrap_or(0);
    checks.push(RelationCheck {
        relation: "delta*A = 0".into(),
        max_abs_deviation: dev,
    });

    let ae = a.mul(&eps);
    let dev = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| ae.get(i, j).abs())
        .max()
        .unwrap_or(0);
    checks.push(RelationCheck {
        relation: "A*eps = 0".into(),
        max_abs_deviation: dev,
    });

    QuadraticReport { d, checks }
}

/// Hat operators proving stationarity by telescoping; available for two and
/// three species (scalars for two).
#[derive(Debug, Clone)]
pub struct HatSet {
    n: u8,
    hats: Vec<TensorOperator>,
}

impl HatSet {
    pub fn n_species(&self) -> u8 {
        self.n
    }

    pub fn hat(&self, class: u8) -> &TensorOperator {
        &self.hats[class as usize]
    }
}

/// Builds the hat operators: for two species the scalars `(+1, -1, 0)` for
/// classes `(1, 0, 2)` acting as multiples of the identity; for three species
/// the explicit rank-3 forms.
pub fn build_hats(n: u8) -> Result<HatSet> {
    use FundamentalSymbol::{Delta, Eps, A, One};
    match n {
        2 => {
            let identity = TensorOperator::monomial(1, vec![One]);
            Ok(HatSet {
                n,
                hats: vec![
                    identity.neg(),
                    identity,
                    TensorOperator::zero(1),
                ],
            })
        }
        3 => {
            let ones = TensorOperator::monomial(1, vec![One, One, One]);
            let hat1 = ones.add(&TensorOperator::monomial(-1, vec![Delta, One, One]));
            let hat2 = TensorOperator::monomial(-1, vec![A, Delta, One]);
            let hat3 = TensorOperator::monomial(-1, vec![A, A, One]);
            let x0 = build_x(3, 0);
            let hat0 = x0
                .neg()
                .add(&TensorOperator::monomial(1, vec![Eps, One, One]))
                .add(&ones.neg());
            Ok(HatSet {
                n,
                hats: vec![hat0, hat1, hat2, hat3],
            })
        }
        other => Err(Error::Precondition {
            required: "hat operators exist for N = 2 or 3".into(),
            got: format!("N = {other}"),
        }),
    }
}

fn build_x(n: u8, class: u8) -> TensorOperator {
    tensor::build_ansatz(n)
        .into_iter()
        .nth(class as usize)
        .expect("class in range")
}

/// One failed identity instance inside a hat-relation check.
#[derive(Debug, Clone, Serialize)]
pub struct HatFailure {
    pub relation: String,
    pub k: u8,
    pub j: u8,
    pub row: usize,
    pub col: usize,
    pub lhs: i64,
    pub rhs: i64,
}

/// Report of the hat-relation suite for one `(N, d)`.
#[derive(Debug, Clone, Serialize)]
pub struct HatReport {
    pub n: u8,
    pub d: usize,
    pub relations_checked: usize,
    pub failures: Vec<HatFailure>,
}

impl HatReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// First entry where two realizations differ on the boundary-safe window
/// (every tensor index of row and column below `limit`).
fn window_mismatch(
    lhs: &IntMatrix,
    rhs: &IntMatrix,
    d: usize,
    rank: usize,
    limit: usize,
) -> Option<(usize, usize, i64, i64)> {
    let in_window = |mut flat: usize| {
        for _ in 0..rank {
            if flat % d >= limit {
                return false;
            }
            flat /= d;
        }
        true
    };
    let dim = lhs.dim();
    for row in 0..dim {
        if !in_window(row) {
            continue;
        }
        for col in 0..dim {
            if !in_window(col) {
                continue;
            }
            let (a, b) = (lhs.get(row, col), rhs.get(row, col));
            if a != b {
                return Some((row, col, a, b));
            }
        }
    }
    None
}

/// Checks every hat relation at truncation `d`: both telescoping forms for
/// all pairs `(K, J)` with `K >= 1` and `J > K` or `J = 0`, and the
/// commutation form for every `J`. Entries are compared where all counter
/// indices stay below `d - 2`, leaving one raise of headroom per factor.
pub fn check_hat_relations(n: u8, d: usize) -> Result<HatReport> {
    if d < 4 {
        return Err(Error::Precondition {
            required: "truncation d >= 4".into(),
            got: d.to_string(),
        });
    }
    let hats = build_hats(n)?;
    let xs = tensor::build_ansatz(n);
    let rank = xs[0].rank();
    let limit = d - 2;
    let mut failures = Vec::new();
    let mut relations_checked = 0usize;

    let mut pairs = Vec::new();
    for k in 1..=n {
        pairs.push((k, 0u8));
        for j in k + 1..=n {
            pairs.push((k, j));
        }
    }

    for &(k, j) in &pairs {
        let xk = &xs[k as usize];
        let xj = &xs[j as usize];
        let hk = hats.hat(k);
        let hj = hats.hat(j);
        let lhs = xk.realize_product(xj, d);

        let rhs1 = hk.realize_product(xj, d).sub(&xk.realize_product(hj, d));
        relations_checked += 1;
        if let Some((row, col, a, b)) = window_mismatch(&lhs, &rhs1, d, rank, limit) {
            failures.push(HatFailure {
                relation: "X_K X_J = hat(X_K) X_J - X_K hat(X_J)".into(),
                k,
                j,
                row,
                col,
                lhs: a,
                rhs: b,
            });
        }

        let rhs2 = xj.realize_product(hk, d).sub(&hj.realize_product(xk, d));
        relations_checked += 1;
        if let Some((row, col, a, b)) = window_mismatch(&lhs, &rhs2, d, rank, limit) {
            failures.push(HatFailure {
                relation: "X_K X_J = X_J hat(X_K) - hat(X_J) X_K".into(),
                k,
                j,
                row,
                col,
                lhs: a,
                rhs: b,
            });
        }
    }

    for j in 0..=n {
        let xj = &xs[j as usize];
        let hj = hats.hat(j);
        let lhs = xj.realize_product(hj, d);
        let rhs = hj.realize_product(xj, d);
        relations_checked += 1;
        if let Some((row, col, a, b)) = window_mismatch(&lhs, &rhs, d, rank, limit) {
            failures.push(HatFailure {
                relation: "X_J hat(X_J) = hat(X_J) X_J".into(),
                k: j,
                j,
                row,
                col,
                lhs: a,
                rhs: b,
            });
        }
    }

    Ok(HatReport {
        n,
        d,
        relations_checked,
        failures,
    })
}

/// The telescoping stationarity sum for one configuration: over every bond,
/// the trace with the bond pair replaced by its exchange term. Zero exactly
/// for every configuration when the ansatz solves the master equation.
pub fn stationarity_residual(config: &Configuration, d: Option<usize>) -> BigInt {
    let (reduced, _) = config.reduce_species();
    let n = reduced.n_species();
    if n == 0 {
        return BigInt::zero();
    }
    let xs = tensor::build_ansatz(n);
    let sites = reduced.sites();
    let l = sites.len();
    let start_bound = d.unwrap_or(l + 1);
    let word: Vec<&TensorOperator> = sites.iter().map(|&s| &xs[s as usize]).collect();

    let base = tensor::trace_word_auto(&word, start_bound);
    let mut residual = BigInt::zero();
    for i in 0..l {
        let a = sites[i];
        let b = sites[(i + 1) % l];
        // Y for the ordered pair (a, b): -X_a X_b if (a, b) exchanges,
        // +X_b X_a if (b, a) exchanges, zero otherwise.
        if exchange_allowed(a, b) {
            residual -= &base;
        }
        if exchange_allowed(b, a) {
            let mut swapped = word.clone();
            swapped[i] = &xs[b as usize];
            swapped[(i + 1) % l] = &xs[a as usize];
            residual += tensor::trace_word_auto(&swapped, start_bound);
        }
    }
    residual
}

/// Report of stationarity residuals over whole sectors.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub configurations_checked: usize,
    pub failures: Vec<(String, String)>,
}

impl StationarityReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Residual check over every configuration of every fully-populated sector
/// with `n` species on `l` sites.
pub fn check_stationarity(l: usize, n: usize) -> StationarityReport {
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for sector in crate::config::sectors_with_all_classes(l, n) {
        let report = check_stationarity_sector(&sector);
        checked += report.configurations_checked;
        failures.extend(report.failures);
    }
    StationarityReport {
        configurations_checked: checked,
        failures,
    }
}

/// Residual check over every configuration of one sector.
///
/// Every trace in a residual is the weight of a configuration of the same
/// sector (the word with one bond pair swapped), so the sweep computes the
/// sector's weight table once and assembles residuals by lookup. A handful
/// of configurations are re-evaluated through [`stationarity_residual`]
/// directly to pin the two routes together.
pub fn check_stationarity_sector(sector: &Sector) -> StationarityReport {
    let configs = sector.configurations();
    let weights = exec::map_vec(configs.len(), |i| tensor::trace_weight(&configs[i], None));
    let index: HashMap<&[u8], usize> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.sites(), i))
        .collect();
    let l = sector.len();
    let residual_of = |i: usize| -> BigInt {
        let sites = configs[i].sites();
        let mut residual = BigInt::zero();
        for bond in 0..l {
            let a = sites[bond];
            let b = sites[(bond + 1) % l];
            if exchange_allowed(a, b) {
                residual -= &weights[i];
            }
            if exchange_allowed(b, a) {
                let mut swapped = sites.to_vec();
                swapped.swap(bond, (bond + 1) % l);
                residual += &weights[index[&swapped[..]]];
            }
        }
        residual
    };
    let residuals = exec::map_vec(configs.len(), residual_of);
    let mut failures: Vec<(String, String)> = configs
        .iter()
        .zip(&residuals)
        .filter(|(_, r)| !r.is_zero())
        .map(|(c, r)| (c.to_string(), r.to_string()))
        .collect();
    for i in [0, configs.len() / 2, configs.len() - 1] {
        let direct = stationarity_residual(&configs[i], None);
        if direct != residuals[i] {
            failures.push((
                configs[i].to_string(),
                format!("direct residual {direct} != table residual {}", residuals[i]),
            ));
        }
    }
    StationarityReport {
        configurations_checked: configs.len(),
        failures,
    }
}
