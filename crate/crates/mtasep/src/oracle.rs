//! Exact ground truth: the full sector generator and its stationary
//! distribution, solved with fraction-free elimination over big integers.
//!
//! Every configuration probability in this crate is an exact rational, so the
//! oracle must be exact too: the generator is assembled with integer rates
//! and its kernel is computed without ever rounding.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::algebra::exchange_allowed;
use crate::config::{Configuration, Sector};
use crate::error::{Error, Result};
use crate::exec;
use crate::multiline;
use crate::pushing;
use crate::tensor;

/// Default cap on the number of sector states the generator will enumerate.
pub const DEFAULT_MAX_STATES: usize = 200_000;

/// Sparse transition-rate matrix over the configurations of one sector,
/// in the transpose convention: `columns[c]` lists `(row, rate)` with the
/// diagonal depletion included, so every column sums to zero.
#[derive(Debug, Clone)]
pub struct SectorGenerator {
    sector: Sector,
    states: Vec<Configuration>,
    columns: Vec<Vec<(usize, i64)>>,
}

/// Builds the generator with the default state bound.
pub fn build_generator(sector: &Sector) -> Result<SectorGenerator> {
    build_generator_bounded(sector, DEFAULT_MAX_STATES)
}

/// Builds the generator, refusing sectors above `max_states` configurations.
pub fn build_generator_bounded(sector: &Sector, max_states: usize) -> Result<SectorGenerator> {
    let size = sector.size();
    if size > num_bigint::BigUint::from(max_states) {
        return Err(Error::BoundExceeded {
            required: size.try_into().unwrap_or(u128::MAX),
            bound: max_states as u128,
        });
    }
    let states = sector.configurations();
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(i, c)| (c.sites(), i))
        .collect();
    let l = sector.len();
    let columns = exec::map_vec(states.len(), |col| {
        let sites = states[col].sites();
        let mut rates: HashMap<usize, i64> = HashMap::new();
        let mut depletion = 0i64;
        for i in 0..l {
            let j = (i + 1) % l;
            if exchange_allowed(sites[i], sites[j]) {
                let mut swapped = sites.to_vec();
                swapped.swap(i, j);
                let row = index[&swapped[..]];
                *rates.entry(row).or_insert(0) += 1;
                depletion -= 1;
            }
        }
        if depletion != 0 {
            *rates.entry(col).or_insert(0) += depletion;
        }
        let mut entries: Vec<(usize, i64)> = rates.into_iter().collect();
        entries.sort_unstable();
        entries
    });
    Ok(SectorGenerator {
        sector: sector.clone(),
        states,
        columns,
    })
}

impl SectorGenerator {
    pub fn sector(&self) -> &Sector {
        &self.sector
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn column(&self, col: usize) -> &[(usize, i64)] {
        &self.columns[col]
    }

    /// `Q · v`, exactly.
    pub fn apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.dimension()];
        for (col, entries) in self.columns.iter().enumerate() {
            if v[col].is_zero() {
                continue;
            }
            for &(row, rate) in entries {
                out[row] += &v[col] * BigRational::from(BigInt::from(rate));
            }
        }
        out
    }
}

/// Exact stationary distribution of a sector, indexed like the generator's
/// state list (lexicographic).
#[derive(Debug, Clone)]
pub struct StationaryVector {
    states: Vec<Configuration>,
    probs: Vec<BigRational>,
}

impl StationaryVector {
    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn probabilities(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn probability(&self, config: &Configuration) -> Option<&BigRational> {
        self.states
            .binary_search_by(|s| s.sites().cmp(config.sites()))
            .ok()
            .map(|i| &self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, &BigRational)> {
        self.states.iter().zip(self.probs.iter())
    }
}

fn exact_div(num: BigInt, den: &BigInt) -> BigInt {
    debug_assert!(!den.is_zero());
    let (q, r) = num_integer::Integer::div_rem(&num, den);
    debug_assert!(r.is_zero(), "fraction-free elimination lost exactness");
    q
}

/// Solves `Q · P = 0`, normalized to sum 1, by fraction-free row echelon
/// reduction and rational back-substitution. A kernel of dimension other
/// than one is a structural error (the sector would not be irreducible).
pub fn stationary(gen: &SectorGenerator) -> Result<StationaryVector> {
    let n = gen.dimension();
    if n == 1 {
        return Ok(StationaryVector {
            states: gen.states.clone(),
            probs: vec![BigRational::one()],
        });
    }

    // Dense integer copy of the generator.
    let mut m: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    for (col, entries) in gen.columns.iter().enumerate() {
        for &(row, rate) in entries {
            m[row][col] = BigInt::from(rate);
        }
    }

    // Fraction-free forward elimination with row pivoting.
    let mut prev = BigInt::one();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut free_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..n {
        match (row..n).find(|&r| !m[r][col].is_zero()) {
            None => free_cols.push(col),
            Some(r) => {
                m.swap(row, r);
                let (pivot_rows, lower) = m.split_at_mut(row + 1);
                let pivot_row = &pivot_rows[row];
                for target in lower.iter_mut() {
                    if target[col].is_zero() {
                        // Still scale to keep the fraction-free invariant.
                        for entry in target[col + 1..].iter_mut() {
                            if !entry.is_zero() {
                                *entry = exact_div(&pivot_row[col] * &*entry, &prev);
                            }
                        }
                        continue;
                    }
                    for j in col + 1..n {
                        let val = &pivot_row[col] * &target[j] - &target[col] * &pivot_row[j];
                        target[j] = exact_div(val, &prev);
                    }
                    target[col] = BigInt::zero();
                }
                prev = m[row][col].clone();
                pivots.push((row, col));
                row += 1;
                if row == n {
                    break;
                }
            }
        }
    }
    let kernel_dim = n - pivots.len();
    if kernel_dim != 1 {
        return Err(Error::SingularGenerator { dim: kernel_dim });
    }
    let free = free_cols[0];

    // Rational back-substitution with the free variable set to one.
    let mut x = vec![BigRational::zero(); n];
    x[free] = BigRational::one();
    for &(r, c) in pivots.iter().rev() {
        let mut acc = BigRational::zero();
        for j in c + 1..n {
            if !m[r][j].is_zero() && !x[j].is_zero() {
                acc += BigRational::from(m[r][j].clone()) * &x[j];
            }
        }
        x[c] = -acc / BigRational::from(m[r][c].clone());
    }

    let total: BigRational = x.iter().fold(BigRational::zero(), |a, b| a + b);
    if total.is_zero() {
        return Err(Error::SingularGenerator { dim: 0 });
    }
    let probs: Vec<BigRational> = x.into_iter().map(|v| v / &total).collect();
    if probs.iter().any(|p| !p.is_positive()) {
        return Err(Error::InternalConsistency(
            "stationary vector has a non-positive entry".into(),
        ));
    }

    // Independent re-multiplication: global balance must hold exactly.
    let balance = gen.apply(&probs);
    if balance.iter().any(|v| !v.is_zero()) {
        return Err(Error::InternalConsistency(
            "solved vector does not satisfy global balance".into(),
        ));
    }

    Ok(StationaryVector {
        states: gen.states.clone(),
        probs,
    })
}

/// Per-configuration cross-validation of every weight route against the
/// oracle probability.
#[derive(Debug, Clone, Serialize)]
pub struct MethodComparison {
    pub config: String,
    pub oracle_probability: String,
    pub trace_weight: String,
    pub recursive_weight: String,
    pub multiline_count: Option<String>,
    pub factorized_weight: Option<String>,
    pub agree: bool,
}

/// Sector-level cross-validation report.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub l: usize,
    pub populations: Vec<usize>,
    pub states: usize,
    pub normalization: String,
    pub all_agree: bool,
    pub rows: Vec<MethodComparison>,
}

/// Computes the stationary probability of every configuration by all
/// applicable routes and reports exact agreement or the mismatches.
pub fn compare_all(sector: &Sector) -> Result<ComparisonReport> {
    compare_all_bounded(sector, DEFAULT_MAX_STATES)
}

pub fn compare_all_bounded(sector: &Sector, max_states: usize) -> Result<ComparisonReport> {
    let gen = build_generator_bounded(sector, max_states)?;
    let pi = stationary(&gen)?;
    let rows = exec::map_vec(gen.dimension(), |i| {
        let config = &gen.states()[i];
        let oracle_p = &pi.probabilities()[i];
        let w_trace = tensor::trace_weight(config, None);
        let w_rec = pushing::weight_recursive(config);
        let w_multi = match multiline::count_ancestors(config) {
            Ok(w) => Some(w),
            Err(Error::BoundExceeded { .. }) => None,
            Err(e) => unreachable!("ancestor count failed: {e}"),
        };
        let (reduced, _) = config.reduce_species();
        let w_two = (reduced.n_species() == 2)
            .then(|| pushing::two_species_weight(&reduced).expect("two species, P_2 >= 1"));
        let p_tensor = tensor::probability(config);

        let mut agree = w_trace == w_rec && p_tensor == *oracle_p;
        if let Some(w) = &w_multi {
            agree &= *w == w_trace;
        }
        if let Some(w) = &w_two {
            agree &= *w == w_trace;
        }
        MethodComparison {
            config: config.to_string(),
            oracle_probability: oracle_p.to_string(),
            trace_weight: w_trace.to_string(),
            recursive_weight: w_rec.to_string(),
            multiline_count: w_multi.map(|w| w.to_string()),
            factorized_weight: w_two.map(|w| w.to_string()),
            agree,
        }
    });
    Ok(ComparisonReport {
        l: sector.len(),
        populations: sector.counts().populations().to_vec(),
        states: gen.dimension(),
        normalization: tensor::normalization(sector).to_string(),
        all_agree: rows.iter().all(|r| r.agree),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sector(l: usize, p: &[usize]) -> Sector {
        Sector::from_populations(l, p).unwrap()
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn two_state_chain_is_uniform() {
        let gen = build_generator(&sector(2, &[1])).unwrap();
        assert_eq!(gen.dimension(), 2);
        let pi = stationary(&gen).unwrap();
        assert_eq!(pi.probabilities(), &[rational(1, 2), rational(1, 2)]);
    }

    #[test]
    fn sector_sizes_match_multinomials() {
        assert_eq!(build_generator(&sector(4, &[1, 1])).unwrap().dimension(), 12);
        assert_eq!(
            build_generator(&sector(4, &[1, 1, 1])).unwrap().dimension(),
            24
        );
    }

    #[test]
    fn columns_sum_to_zero() {
        let gen = build_generator(&sector(5, &[2, 1])).unwrap();
        for col in 0..gen.dimension() {
            let sum: i64 = gen.column(col).iter().map(|&(_, r)| r).sum();
            assert_eq!(sum, 0);
        }
    }

    #[test]
    fn stationary_matches_worked_probability() {
        let gen = build_generator(&sector(4, &[1, 1])).unwrap();
        let pi = stationary(&gen).unwrap();
        let c = Configuration::parse("0210").unwrap();
        assert_eq!(pi.probability(&c).unwrap(), &rational(3, 24));
        let total: BigRational = pi
            .probabilities()
            .iter()
            .fold(BigRational::zero(), |a, b| a + b);
        assert!(total.is_one());
    }

    #[test]
    fn stationary_three_species_probability() {
        let gen = build_generator(&sector(4, &[1, 1, 1])).unwrap();
        let pi = stationary(&gen).unwrap();
        let c = Configuration::parse("2103").unwrap();
        assert_eq!(pi.probability(&c).unwrap(), &rational(9, 96));
    }

    #[test]
    fn stationary_on_210_states_stays_exact() {
        let gen = build_generator(&sector(7, &[3, 2])).unwrap();
        assert_eq!(gen.dimension(), 210);
        let pi = stationary(&gen).unwrap();
        let c = Configuration::parse("0211021").unwrap();
        assert_eq!(pi.probability(&c).unwrap(), &rational(6, 735));
    }

    #[test]
    fn generator_matches_local_bond_matrix() {
        // Column rates must equal the sum over bonds of the local matrix
        // embedded at that bond.
        let s = sector(4, &[1, 1, 1]);
        let n = s.n_species() as usize;
        let q_loc = crate::algebra::local_generator(s.n_species());
        let gen = build_generator(&s).unwrap();
        let index: HashMap<&[u8], usize> = gen
            .states()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.sites(), i))
            .collect();
        for (col, config) in gen.states().iter().enumerate() {
            let sites = config.sites();
            let mut expected: HashMap<usize, i64> = HashMap::new();
            for i in 0..sites.len() {
                let j = (i + 1) % sites.len();
                let source = sites[i] as usize * (n + 1) + sites[j] as usize;
                for target_pair in 0..(n + 1) * (n + 1) {
                    let rate = q_loc.get(target_pair, source);
                    if rate == 0 {
                        continue;
                    }
                    let mut target = sites.to_vec();
                    target[i] = (target_pair / (n + 1)) as u8;
                    target[j] = (target_pair % (n + 1)) as u8;
                    *expected.entry(index[&target[..]]).or_insert(0) += rate;
                }
            }
            expected.retain(|_, v| *v != 0);
            let got: HashMap<usize, i64> = gen.column(col).iter().copied().collect();
            assert_eq!(got, expected, "column {col} ({config})");
        }
    }

    #[test]
    fn stationary_is_rotation_invariant() {
        let gen = build_generator(&sector(5, &[2, 1])).unwrap();
        let pi = stationary(&gen).unwrap();
        for (config, p) in pi.iter() {
            for k in 0..config.len() as i64 {
                assert_eq!(pi.probability(&config.rotate(k)).unwrap(), p);
            }
        }
    }

    #[test]
    fn frozen_single_state_sector() {
        let gen = build_generator(&sector(3, &[3])).unwrap();
        assert_eq!(gen.dimension(), 1);
        let pi = stationary(&gen).unwrap();
        assert!(pi.probabilities()[0].is_one());
    }

    #[test]
    fn generator_respects_bound() {
        assert!(matches!(
            build_generator_bounded(&sector(6, &[2, 2]), 10),
            Err(Error::BoundExceeded { .. })
        ));
    }

    #[test]
    fn compare_all_small_sector_agrees() {
        let report = compare_all(&sector(4, &[1, 1])).unwrap();
        assert!(report.all_agree);
        assert_eq!(report.states, 12);
        assert_eq!(report.normalization, "24");
    }
}
