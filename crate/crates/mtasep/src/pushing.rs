//! Pushing weights for binary strings and the recursive ancestor algorithm.
//!
//! The weight of a binary string counts the strings reachable by pushing 1s
//! rightward through 0s. Ring weights for two species factorize into these
//! string weights. For more species, a configuration's weight is the sum of
//! the weights of the lower-species configurations obtained by staged pushes,
//! recursed down to the single-species level where the measure is uniform.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;

use crate::config::Configuration;
use crate::error::{Error, Result};

/// A finite word over `{0, 1}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BinaryString(Vec<u8>);

impl BinaryString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::MalformedToken(bad.to_string()));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when all 0s precede all 1s (no `10` factor left to push).
    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

impl FromStr for BinaryString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::MalformedToken(other.to_string())),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Weight by direct closure enumeration: the number of distinct strings
/// reachable from `b` (itself included) by moving a 1 one step rightward
/// through a 0.
pub fn omega_push(b: &BinaryString) -> BigInt {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut queue: VecDeque<Vec<u8>> = VecDeque::new();
    seen.insert(b.0.clone());
    queue.push_back(b.0.clone());
    while let Some(cur) = queue.pop_front() {
        for i in 0..cur.len().saturating_sub(1) {
            if cur[i] == 1 && cur[i + 1] == 0 {
                let mut next = cur.clone();
                next.swap(i, i + 1);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    BigInt::from(seen.len())
}

/// Weight by the reduction relation `w(B10B') = w(B1B') + w(B0B')` with the
/// sorted strings as base case. Must agree with [`omega_push`] everywhere.
pub fn omega_reduce(b: &BinaryString) -> BigInt {
    fn go(bits: &[u8], memo: &mut HashMap<Vec<u8>, BigInt>) -> BigInt {
        if let Some(pos) = bits.windows(2).position(|w| w == [1, 0]) {
            if let Some(hit) = memo.get(bits) {
                return hit.clone();
            }
            let mut keep_one: Vec<u8> = Vec::with_capacity(bits.len() - 1);
            keep_one.extend_from_slice(&bits[..pos + 1]);
            keep_one.extend_from_slice(&bits[pos + 2..]);
            let mut keep_zero = keep_one.clone();
            keep_zero[pos] = 0;
            let val = go(&keep_one, memo) + go(&keep_zero, memo);
            memo.insert(bits.to_vec(), val.clone());
            val
        } else {
            BigInt::one()
        }
    }
    go(&b.0, &mut HashMap::new())
}

/// Two-species ring weight: the product of string weights of the segments
/// separating consecutive class-2 particles, read clockwise with 1 for a
/// first-class particle and 0 for a hole.
pub fn two_species_weight(config: &Configuration) -> Result<BigInt> {
    if config.n_species() != 2 {
        return Err(Error::Precondition {
            required: "a 2-species configuration".into(),
            got: format!("N = {}", config.n_species()),
        });
    }
    let sites = config.sites();
    let twos: Vec<usize> = (0..sites.len()).filter(|&i| sites[i] == 2).collect();
    if twos.is_empty() {
        return Err(Error::Precondition {
            required: "at least one second-class particle (reduce species first)".into(),
            got: "P_2 = 0".into(),
        });
    }
    let l = sites.len();
    let mut weight = BigInt::one();
    for (j, &start) in twos.iter().enumerate() {
        let end = twos[(j + 1) % twos.len()];
        let mut bits = Vec::new();
        let mut i = (start + 1) % l;
        while i != end {
            bits.push(sites[i]);
            i = (i + 1) % l;
        }
        weight *= omega_reduce(&BinaryString(bits));
    }
    Ok(weight)
}

/// All configurations reachable from `config` by pushing class-`class`
/// particles rightward through holes, hopping over lower classes and stopped
/// by `class` or anything higher. `config` itself is included.
pub fn push_class_closure(config: &Configuration, class: u8) -> Vec<Configuration> {
    let l = config.len();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut queue: VecDeque<Vec<u8>> = VecDeque::new();
    let mut order: Vec<Vec<u8>> = Vec::new();
    seen.insert(config.sites().to_vec());
    order.push(config.sites().to_vec());
    queue.push_back(config.sites().to_vec());
    while let Some(cur) = queue.pop_front() {
        for i in 0..l {
            if cur[i] != class {
                continue;
            }
            // Scan rightward past spectators (strictly lower classes) for the
            // first hole; any label >= class blocks the push.
            let mut j = (i + 1) % l;
            while j != i {
                match cur[j] {
                    0 => {
                        let mut next = cur.clone();
                        next[i] = 0;
                        next[j] = class;
                        if seen.insert(next.clone()) {
                            order.push(next.clone());
                            queue.push_back(next);
                        }
                        break;
                    }
                    label if label >= class => break,
                    _ => j = (j + 1) % l,
                }
            }
        }
    }
    order
        .into_iter()
        .map(|sites| Configuration::new(sites, config.n_species()).expect("same alphabet"))
        .collect()
}

/// The complete set of `(N-1)`-species ancestors of an `N`-species
/// configuration: staged pushes of classes `1..N-1`, then class `N`
/// replaced by holes.
///
/// The staged generation cannot repeat a configuration (each stage leaves
/// every lower class fixed); a duplicate is reported as an internal
/// consistency error rather than silently removed.
pub fn ancestors(config: &Configuration) -> Result<Vec<Configuration>> {
    let n = config.n_species();
    if n < 2 {
        return Err(Error::Precondition {
            required: "at least two species".into(),
            got: format!("N = {n}"),
        });
    }
    if config.counts().population(n as usize) == 0 {
        return Err(Error::Precondition {
            required: "at least one top-class particle (reduce species first)".into(),
            got: format!("P_{n} = 0"),
        });
    }
    let mut stage: Vec<Configuration> = vec![config.clone()];
    for class in 1..n {
        let mut next = Vec::new();
        let mut seen: HashSet<Vec<u8>> = HashSet::new();
        for c in &stage {
            for pushed in push_class_closure(c, class) {
                if !seen.insert(pushed.sites().to_vec()) {
                    return Err(Error::InternalConsistency(format!(
                        "duplicate configuration {pushed} while pushing class {class}"
                    )));
                }
                next.push(pushed);
            }
        }
        stage = next;
    }
    let mut out = Vec::with_capacity(stage.len());
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    for c in stage {
        let sites: Vec<u8> = c
            .sites()
            .iter()
            .map(|&s| if s == n { 0 } else { s })
            .collect();
        if !seen.insert(sites.clone()) {
            return Err(Error::InternalConsistency(format!(
                "duplicate ancestor after removing class {n}"
            )));
        }
        out.push(Configuration::new(sites, n - 1)?);
    }
    Ok(out)
}

/// Stationary weight by recursion on the species count: the weight of a
/// single-species configuration is 1, and the weight at level `N` is the sum
/// of the weights of its level-`(N-1)` ancestors.
pub fn weight_recursive(config: &Configuration) -> BigInt {
    fn go(config: &Configuration, memo: &mut HashMap<Vec<u8>, BigInt>) -> BigInt {
        let (reduced, _) = config.reduce_species();
        if reduced.n_species() <= 1 {
            return BigInt::one();
        }
        let key = reduced.canonical_rotation().sites().to_vec();
        if let Some(hit) = memo.get(&key) {
            return hit.clone();
        }
        let parents = ancestors(&reduced).expect("reduced config has a top-class particle");
        let mut total = BigInt::from(0);
        for p in &parents {
            total += go(p, memo);
        }
        memo.insert(key, total.clone());
        total
    }
    go(config, &mut HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BinaryString {
        s.parse().unwrap()
    }

    fn cfg(s: &str) -> Configuration {
        Configuration::parse(s).unwrap()
    }

    #[test]
    fn omega_push_golden_values() {
        assert_eq!(omega_push(&bs("110")), BigInt::from(3));
        assert_eq!(omega_push(&bs("1010")), BigInt::from(5));
        assert_eq!(omega_push(&bs("10")), BigInt::from(2));
        assert_eq!(omega_push(&bs("0011")), BigInt::one());
        assert_eq!(omega_push(&bs("")), BigInt::one());
    }

    #[test]
    fn omega_reduce_golden_values() {
        assert_eq!(omega_reduce(&bs("10")), BigInt::from(2));
        assert_eq!(omega_reduce(&bs("110")), BigInt::from(3));
        assert_eq!(omega_reduce(&bs("1010")), BigInt::from(5));
        assert_eq!(omega_reduce(&bs("")), BigInt::one());
        assert_eq!(omega_reduce(&bs("100")), BigInt::from(3));
    }

    #[test]
    fn omega_routes_agree_exhaustively() {
        // Every binary string of length <= 10.
        for len in 0..=10usize {
            for mask in 0u32..(1 << len) {
                let bits: Vec<u8> = (0..len).map(|i| ((mask >> i) & 1) as u8).collect();
                let b = BinaryString(bits);
                assert_eq!(omega_push(&b), omega_reduce(&b), "mismatch on {b}");
            }
        }
    }

    #[test]
    fn omega_is_one_exactly_on_sorted_strings() {
        for len in 0..=8usize {
            for mask in 0u32..(1 << len) {
                let bits: Vec<u8> = (0..len).map(|i| ((mask >> i) & 1) as u8).collect();
                let b = BinaryString(bits);
                let w = omega_push(&b);
                assert!(w >= BigInt::one());
                assert_eq!(w == BigInt::one(), b.is_sorted(), "on {b}");
            }
        }
    }

    #[test]
    fn two_species_weight_golden_values() {
        assert_eq!(two_species_weight(&cfg("0210")).unwrap(), BigInt::from(3));
        assert_eq!(
            two_species_weight(&cfg("0211021")).unwrap(),
            BigInt::from(6)
        );
        assert_eq!(two_species_weight(&cfg("22")).unwrap(), BigInt::one());
    }

    #[test]
    fn two_species_weight_requires_a_second_class_particle() {
        let c = Configuration::parse_with_species("0110", Some(2)).unwrap();
        assert!(two_species_weight(&c).is_err());
    }

    #[test]
    fn stage_one_closure_matches_worked_example() {
        let set: HashSet<String> = push_class_closure(&cfg("2103"), 1)
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(
            set,
            HashSet::from(["2103".to_string(), "2013".to_string()])
        );
    }

    #[test]
    fn ancestors_match_worked_example() {
        let set: HashSet<String> = ancestors(&cfg("2103"))
            .unwrap()
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(
            set,
            HashSet::from([
                "2100".to_string(),
                "0120".to_string(),
                "2010".to_string(),
                "0210".to_string()
            ])
        );
    }

    #[test]
    fn ancestors_of_lone_top_class() {
        let c = Configuration::parse_with_species("03", Some(3)).unwrap();
        let set = ancestors(&c).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].to_string(), "00");
        assert_eq!(set[0].n_species(), 2);
    }

    #[test]
    fn weight_recursive_golden_values() {
        assert_eq!(weight_recursive(&cfg("2103")), BigInt::from(9));
        assert_eq!(weight_recursive(&cfg("0210")), BigInt::from(3));
        assert_eq!(weight_recursive(&cfg("0211021")), BigInt::from(6));
        assert_eq!(weight_recursive(&cfg("0110")), BigInt::one());
        assert_eq!(weight_recursive(&cfg("0000")), BigInt::one());
    }

    #[test]
    fn weight_recursive_is_rotation_invariant() {
        let c = cfg("201031");
        let w = weight_recursive(&c);
        for k in 0..c.len() as i64 {
            assert_eq!(weight_recursive(&c.rotate(k)), w);
        }
    }

    #[test]
    fn two_species_route_agrees_with_recursion() {
        for c in crate::config::Sector::from_populations(5, &[2, 1])
            .unwrap()
            .configurations()
        {
            assert_eq!(two_species_weight(&c).unwrap(), weight_recursive(&c));
        }
    }
}
