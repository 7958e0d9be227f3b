//! Multiline configurations: uniform sampling, the line-by-line labeling
//! procedure, and brute-force ancestor counting.
//!
//! An `N`-line configuration stacks `N` binary rows with nondecreasing
//! particle counts. Labeling associates each particle of a row to a particle
//! of the row below (nearest at the same site or to the left, cyclically) and
//! reads the bottom row as an `N`-species ring configuration. Uniform
//! sampling of multiline configurations followed by labeling samples the ring
//! process in its stationary state, so counting the multiline configurations
//! that label to a given configuration is its stationary weight.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Sector};
use crate::error::{Error, Result};
use crate::exec;

/// Default cap on `Π_{k<N} C(L, m_k)` for [`count_ancestors`].
pub const DEFAULT_ENUMERATION_BOUND: u128 = 10_000_000;

/// `N` stacked binary rows with nondecreasing particle counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultilineConfig {
    rows: Vec<Vec<u8>>,
}

impl MultilineConfig {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyInput);
        }
        let l = rows[0].len();
        let mut prev = 0usize;
        for row in &rows {
            if row.len() != l {
                return Err(Error::InvalidSector("rows must share a length".into()));
            }
            if let Some(&bad) = row.iter().find(|&&b| b > 1) {
                return Err(Error::MalformedToken(bad.to_string()));
            }
            let pop = row.iter().filter(|&&b| b == 1).count();
            if pop < prev {
                return Err(Error::InvalidSector(
                    "row particle counts must be nondecreasing".into(),
                ));
            }
            prev = pop;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn n_lines(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for MultilineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            for &b in row {
                write!(f, "{b}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for MultilineConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(|line| {
                line.trim()
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0u8),
                        '1' => Ok(1u8),
                        other => Err(Error::MalformedToken(other.to_string())),
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<u8>>>>()?;
        Self::new(rows)
    }
}

/// Class labels attributed to the particles of one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledLine {
    labels: Vec<u8>,
    classes: u8,
}

impl LabeledLine {
    /// Wraps a binary row as the first line: every particle is class 1.
    pub fn first_line(row: &[u8]) -> Self {
        Self {
            labels: row.to_vec(),
            classes: 1,
        }
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Declared number of classes (labels run over `0..=classes`).
    pub fn classes(&self) -> u8 {
        self.classes
    }
}

/// One labeling stage: binds each labeled particle of the upper line to the
/// nearest free particle of the lower row at the same site or to the left
/// (cyclically), class by class in increasing order and scanning right to
/// left within a class. Bound particles inherit the class; the rest get the
/// next class.
pub fn associate_line(upper: &LabeledLine, lower_row: &[u8]) -> Result<LabeledLine> {
    let l = upper.labels.len();
    if lower_row.len() != l {
        return Err(Error::InvalidSector("rows must share a length".into()));
    }
    let upper_particles = upper.labels.iter().filter(|&&s| s > 0).count();
    let lower_particles = lower_row.iter().filter(|&&b| b == 1).count();
    if lower_particles < upper_particles {
        return Err(Error::PopcountMismatch);
    }
    let mut labels = vec![0u8; l];
    let mut free: Vec<bool> = lower_row.iter().map(|&b| b == 1).collect();
    for class in 1..=upper.classes {
        // Right-to-left scan; the starting site does not affect the result
        // (property-tested), so start at the last site.
        for offset in 0..l {
            let site = l - 1 - offset;
            if upper.labels[site] != class {
                continue;
            }
            let mut j = site;
            loop {
                if free[j] {
                    free[j] = false;
                    labels[j] = class;
                    break;
                }
                j = (j + l - 1) % l;
                if j == site {
                    return Err(Error::PopcountMismatch);
                }
            }
        }
    }
    for (j, &is_free) in free.iter().enumerate() {
        if is_free {
            labels[j] = upper.classes + 1;
        }
    }
    Ok(LabeledLine {
        labels,
        classes: upper.classes + 1,
    })
}

/// Folds [`associate_line`] from the top line down and reads the bottom line
/// as an `N`-species configuration.
pub fn label_multiline(ml: &MultilineConfig) -> Result<Configuration> {
    let mut line = LabeledLine::first_line(&ml.rows[0]);
    for row in &ml.rows[1..] {
        line = associate_line(&line, row)?;
    }
    Configuration::new(line.labels, ml.rows.len() as u8)
}

fn sample_rows<R: rand::Rng>(sector: &Sector, rng: &mut R) -> Vec<Vec<u8>> {
    let l = sector.len();
    sector
        .counts()
        .cumulative()
        .iter()
        .map(|&m| {
            let mut row = vec![0u8; l];
            for idx in rand::seq::index::sample(rng, l, m) {
                row[idx] = 1;
            }
            row
        })
        .collect()
}

/// Uniform multiline configuration for the sector: row `k` is an independent
/// uniform choice of `m_k` sites. Deterministic given the seed.
pub fn sample_multiline(sector: &Sector, seed: u64) -> Result<MultilineConfig> {
    if sector.counts().total_particles() > sector.len() {
        return Err(Error::InvalidSector("more particles than sites".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MultilineConfig::new(sample_rows(sector, &mut rng))
}

/// Observed counts of labeled configurations over repeated uniform samples.
///
/// Sample `i` draws from its own counter-mode stream of the seeded generator,
/// so the result does not depend on how work is split across threads.
pub fn empirical_distribution(
    sector: &Sector,
    samples: u64,
    seed: u64,
) -> Result<BTreeMap<Configuration, u64>> {
    if samples == 0 {
        return Err(Error::Precondition {
            required: "at least one sample".into(),
            got: "0".into(),
        });
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let counts = exec::fold_merge(
        samples as usize,
        BTreeMap::<Configuration, u64>::new,
        |mut acc, i| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            let ml = MultilineConfig {
                rows: sample_rows(sector, &mut rng),
            };
            let config = label_multiline(&ml).expect("sampled rows have valid shape");
            *acc.entry(config).or_insert(0) += 1;
            acc
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        },
    );
    Ok(counts)
}

fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut res: u128 = 1;
    for i in 1..=k {
        res = res.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(res)
}

/// Lexicographic enumeration of `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let state = (k <= n).then(|| (0..k).collect());
        Self { n, k, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.state.take()?;
        let out = cur.clone();
        // Find the rightmost index that can advance.
        let mut next = cur;
        let mut i = self.k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - self.k + i {
                next[i] += 1;
                for j in i + 1..self.k {
                    next[j] = next[j - 1] + 1;
                }
                self.state = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

fn positions_to_row(l: usize, positions: &[usize]) -> Vec<u8> {
    let mut row = vec![0u8; l];
    for &p in positions {
        row[p] = 1;
    }
    row
}

/// Counts the multiline configurations whose labeling reproduces `config`
/// exactly, with the bottom row fixed at its particle positions. This is the
/// stationary weight up to normalization.
pub fn count_ancestors(config: &Configuration) -> Result<BigInt> {
    count_ancestors_bounded(config, DEFAULT_ENUMERATION_BOUND)
}

/// [`count_ancestors`] with an explicit cap on the enumeration size
/// `Π_{k<N} C(L, m_k)`.
pub fn count_ancestors_bounded(config: &Configuration, bound: u128) -> Result<BigInt> {
    let (reduced, _) = config.reduce_species();
    let n = reduced.n_species() as usize;
    if n <= 1 {
        return Ok(BigInt::one());
    }
    let l = reduced.len();
    let m = reduced.counts().cumulative();
    let mut required: u128 = 1;
    for &mk in &m[..n - 1] {
        required = binomial_u128(l, mk)
            .and_then(|b| required.checked_mul(b))
            .ok_or(Error::BoundExceeded {
                required: u128::MAX,
                bound,
            })?;
    }
    if required > bound {
        return Err(Error::BoundExceeded { required, bound });
    }

    let bottom_row: Vec<u8> = reduced.sites().iter().map(|&s| u8::from(s > 0)).collect();
    let target = reduced.sites();

    // Count matches for fixed upper rows below the first, folding the free
    // middle rows (2..N-1) sequentially.
    fn count_middle(
        first: &LabeledLine,
        m: &[usize],
        row_idx: usize,
        bottom_row: &[u8],
        target: &[u8],
        l: usize,
        n: usize,
    ) -> BigInt {
        if row_idx == n {
            let final_line = associate_line(first, bottom_row).expect("popcounts match");
            return if final_line.labels() == target {
                BigInt::one()
            } else {
                BigInt::from(0)
            };
        }
        let mut total = BigInt::from(0);
        for combo in Combinations::new(l, m[row_idx - 1]) {
            let row = positions_to_row(l, &combo);
            let line = associate_line(first, &row).expect("popcounts match");
            total += count_middle(&line, m, row_idx + 1, bottom_row, target, l, n);
        }
        total
    }

    let first_choices: Vec<Vec<usize>> = Combinations::new(l, m[0]).collect();
    let total = exec::sum_bigint(first_choices.len(), |i| {
        let first = LabeledLine::first_line(&positions_to_row(l, &first_choices[i]));
        count_middle(&first, &m, 2, &bottom_row, target, l, n)
    });
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn cfg(s: &str) -> Configuration {
        Configuration::parse(s).unwrap()
    }

    #[test]
    fn associate_line_hand_example() {
        // Upper: class-1 particle at site 3 (L = 4); lower: particles at 2, 3.
        let upper = LabeledLine {
            labels: vec![0, 0, 0, 1],
            classes: 1,
        };
        let lower = vec![0u8, 0, 1, 1];
        let out = associate_line(&upper, &lower).unwrap();
        assert_eq!(out.labels(), &[0, 0, 2, 1]);
        assert_eq!(out.classes(), 2);
    }

    #[test]
    fn associate_line_same_site_binding() {
        let upper = LabeledLine {
            labels: vec![1, 0, 1, 0],
            classes: 1,
        };
        let out = associate_line(&upper, &[1, 0, 1, 0]).unwrap();
        assert_eq!(out.labels(), &[1, 0, 1, 0]);
    }

    #[test]
    fn associate_line_empty_upper() {
        let upper = LabeledLine {
            labels: vec![0, 0, 0, 0],
            classes: 1,
        };
        let out = associate_line(&upper, &[0, 1, 0, 1]).unwrap();
        assert_eq!(out.labels(), &[0, 2, 0, 2]);
    }

    #[test]
    fn associate_line_wraps_cyclically() {
        // The particle at site 0 must wrap to bind the free particle at site 3.
        let upper = LabeledLine {
            labels: vec![1, 0, 0, 0],
            classes: 1,
        };
        let out = associate_line(&upper, &[0, 0, 0, 1]).unwrap();
        assert_eq!(out.labels(), &[0, 0, 0, 1]);
    }

    #[test]
    fn associate_line_popcount_mismatch() {
        let upper = LabeledLine {
            labels: vec![1, 1, 0],
            classes: 1,
        };
        assert!(matches!(
            associate_line(&upper, &[1, 0, 0]),
            Err(Error::PopcountMismatch)
        ));
    }

    #[test]
    fn label_multiline_degenerate_rows() {
        let ml = MultilineConfig::new(vec![vec![0, 1, 0, 1], vec![0, 1, 0, 1]]).unwrap();
        assert_eq!(label_multiline(&ml).unwrap().to_string(), "0101");

        let ml = MultilineConfig::new(vec![vec![0, 0, 0, 0], vec![0, 1, 0, 1]]).unwrap();
        assert_eq!(label_multiline(&ml).unwrap().to_string(), "0202");
    }

    #[test]
    fn multiline_text_round_trip() {
        let text = "0101\n0111";
        let ml: MultilineConfig = text.parse().unwrap();
        assert_eq!(ml.to_string(), text);
        assert!("011\n100".parse::<MultilineConfig>().is_err()); // decreasing counts
    }

    #[test]
    fn count_ancestors_golden_values() {
        assert_eq!(count_ancestors(&cfg("2103")).unwrap(), BigInt::from(9));
        assert_eq!(count_ancestors(&cfg("0210")).unwrap(), BigInt::from(3));
        assert_eq!(count_ancestors(&cfg("0211021")).unwrap(), BigInt::from(6));
        assert_eq!(count_ancestors(&cfg("0101")).unwrap(), BigInt::one());
    }

    #[test]
    fn count_ancestors_is_rotation_invariant() {
        let c = cfg("21030");
        let w = count_ancestors(&c).unwrap();
        for k in 0..c.len() as i64 {
            assert_eq!(count_ancestors(&c.rotate(k)).unwrap(), w);
        }
    }

    #[test]
    fn count_ancestors_respects_bound() {
        assert!(matches!(
            count_ancestors_bounded(&cfg("2103"), 3),
            Err(Error::BoundExceeded { .. })
        ));
    }

    #[test]
    fn ancestor_counts_sum_over_fixed_positions() {
        // Fix the particle positions of the bottom row; summing the counts of
        // every labeling of those positions must give the number of free
        // upper-row choices.
        let l = 5usize;
        let populations = [1usize, 1, 1];
        let m: Vec<usize> = vec![1, 2, 3];
        let positions = [0usize, 2, 3];
        let mut total = BigInt::from(0);
        let mut labels = vec![1u8, 2, 3];
        loop {
            let mut sites = vec![0u8; l];
            for (i, &p) in positions.iter().enumerate() {
                sites[p] = labels[i];
            }
            let c = Configuration::new(sites, populations.len() as u8).unwrap();
            total += count_ancestors(&c).unwrap();
            if !next_label_permutation(&mut labels) {
                break;
            }
        }
        let expected: u128 = m[..2]
            .iter()
            .map(|&mk| binomial_u128(l, mk).unwrap())
            .product();
        assert_eq!(total, BigInt::from(expected));
    }

    fn next_label_permutation(v: &mut [u8]) -> bool {
        let mut i = v.len() - 1;
        while i > 0 && v[i - 1] >= v[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = v.len() - 1;
        while v[j] <= v[i - 1] {
            j -= 1;
        }
        v.swap(i - 1, j);
        v[i..].reverse();
        true
    }

    #[test]
    fn count_matches_two_species_factorization() {
        for c in Sector::from_populations(5, &[2, 1])
            .unwrap()
            .configurations()
        {
            assert_eq!(
                count_ancestors(&c).unwrap(),
                crate::pushing::two_species_weight(&c).unwrap()
            );
        }
    }

    #[test]
    fn sample_forced_row() {
        let sector = Sector::from_populations(2, &[2]).unwrap();
        for seed in 0..20 {
            let ml = sample_multiline(&sector, seed).unwrap();
            assert_eq!(ml.rows()[0], vec![1, 1]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let sector = Sector::from_populations(6, &[2, 1]).unwrap();
        assert_eq!(
            sample_multiline(&sector, 42).unwrap(),
            sample_multiline(&sector, 42).unwrap()
        );
        assert_eq!(
            empirical_distribution(&sector, 500, 7).unwrap(),
            empirical_distribution(&sector, 500, 7).unwrap()
        );
    }

    #[test]
    fn labeling_ignores_scan_start() {
        // Labeling after rotating all rows by k, then rotating back, must
        // reproduce the original labels.
        let sector = Sector::from_populations(7, &[2, 2, 1]).unwrap();
        for seed in 0..40u64 {
            let ml = sample_multiline(&sector, seed).unwrap();
            let base = label_multiline(&ml).unwrap();
            for k in 1..ml.len() {
                let rotated = MultilineConfig::new(
                    ml.rows()
                        .iter()
                        .map(|row| {
                            let mut r = row[k..].to_vec();
                            r.extend_from_slice(&row[..k]);
                            r
                        })
                        .collect(),
                )
                .unwrap();
                let relabeled = label_multiline(&rotated).unwrap();
                assert_eq!(
                    relabeled.rotate(-(k as i64)),
                    base,
                    "seed {seed}, shift {k}"
                );
            }
        }
    }
}
