//! Ring configurations, per-class populations, and sectors.
//!
//! A configuration is a ring of `L` site labels in `0..=N`, where `0` is a
//! hole and `K >= 1` a particle of class `K`. The dynamics conserves every
//! per-class population, so all enumeration is organized by sector: the set
//! of configurations with fixed populations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ring configuration of class labels.
///
/// Ordering is lexicographic on the site sequence, which is also the order
/// used for sector tables and generator indexing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    sites: Vec<u8>,
    n_species: u8,
}

/// Wire form: `{"L": 4, "N": 3, "sites": [2,1,0,3]}`.
#[derive(Serialize, Deserialize)]
struct ConfigurationWire {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "N")]
    n: u8,
    sites: Vec<u8>,
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigurationWire {
            l: self.sites.len(),
            n: self.n_species,
            sites: self.sites.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ConfigurationWire::deserialize(deserializer)?;
        if wire.l != wire.sites.len() {
            return Err(serde::de::Error::custom("L does not match the site count"));
        }
        Configuration::new(wire.sites, wire.n).map_err(serde::de::Error::custom)
    }
}

impl Configuration {
    /// Builds a configuration with an explicitly declared species count.
    pub fn new(sites: Vec<u8>, n_species: u8) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&bad) = sites.iter().find(|&&s| s > n_species) {
            return Err(Error::LabelOutOfRange {
                label: bad as u32,
                species: n_species as u32,
            });
        }
        Ok(Self { sites, n_species })
    }

    /// Builds a configuration, declaring the maximum label present as `N`.
    pub fn from_sites(sites: Vec<u8>) -> Result<Self> {
        let n = sites.iter().copied().max().ok_or(Error::EmptyInput)?;
        Self::new(sites, n)
    }

    /// Parses the canonical text form: a compact digit string for labels
    /// `0..=9`, or comma-separated integers otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_species(text, None)
    }

    /// Like [`Configuration::parse`] but with an explicit species count
    /// overriding the default (the maximum label present).
    pub fn parse_with_species(text: &str, n_species: Option<u8>) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::EmptyInput);
        }
        let sites: Vec<u8> = if text.contains(',') {
            text.split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    tok.parse::<u8>()
                        .map_err(|_| Error::MalformedToken(tok.to_string()))
                })
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::MalformedToken(c.to_string()))
                })
                .collect::<Result<_>>()?
        };
        match n_species {
            Some(n) => Self::new(sites, n),
            None => Self::from_sites(sites),
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    /// Highest declared class.
    pub fn n_species(&self) -> u8 {
        self.n_species
    }

    /// Cyclic shift: site `i` of the result is site `i + k` of `self`.
    pub fn rotate(&self, k: i64) -> Self {
        let l = self.sites.len() as i64;
        let k = k.rem_euclid(l) as usize;
        let mut sites = Vec::with_capacity(self.sites.len());
        sites.extend_from_slice(&self.sites[k..]);
        sites.extend_from_slice(&self.sites[..k]);
        Self {
            sites,
            n_species: self.n_species,
        }
    }

    /// Compresses the classes actually present to consecutive labels
    /// `1..=N'`, preserving order, and returns the relabeling map.
    ///
    /// Hole positions are untouched. The rates depend only on the relative
    /// order of classes, so the reduced configuration carries the same
    /// stationary weight data without degenerate (absent-class) slots.
    pub fn reduce_species(&self) -> (Self, BTreeMap<u8, u8>) {
        let mut present: Vec<u8> = self.sites.iter().copied().filter(|&s| s > 0).collect();
        present.sort_unstable();
        present.dedup();
        let map: BTreeMap<u8, u8> = present
            .iter()
            .enumerate()
            .map(|(i, &old)| (old, (i + 1) as u8))
            .collect();
        let sites = self
            .sites
            .iter()
            .map(|&s| if s == 0 { 0 } else { map[&s] })
            .collect();
        let reduced = Self {
            sites,
            n_species: present.len() as u8,
        };
        (reduced, map)
    }

    /// Per-class populations `P_1..P_N`.
    pub fn counts(&self) -> Counts {
        let mut per_class = vec![0usize; self.n_species as usize];
        for &s in &self.sites {
            if s > 0 {
                per_class[s as usize - 1] += 1;
            }
        }
        Counts { per_class }
    }

    /// The sector this configuration belongs to.
    pub fn sector(&self) -> Sector {
        Sector {
            l: self.sites.len(),
            counts: self.counts(),
        }
    }

    /// Lexicographically minimal rotation; rotation-invariant cache key.
    pub fn canonical_rotation(&self) -> Self {
        let l = self.sites.len();
        let mut best = 0usize;
        for k in 1..l {
            for i in 0..l {
                let a = self.sites[(k + i) % l];
                let b = self.sites[(best + i) % l];
                if a != b {
                    if a < b {
                        best = k;
                    }
                    break;
                }
            }
        }
        self.rotate(best as i64)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n_species <= 9 {
            for &s in &self.sites {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.sites.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Per-class populations of a sector, with derived cumulative counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Counts {
    per_class: Vec<usize>,
}

impl Counts {
    pub fn new(per_class: Vec<usize>) -> Self {
        Self { per_class }
    }

    /// Number of classes tracked (the declared `N`).
    pub fn n_species(&self) -> usize {
        self.per_class.len()
    }

    /// `P_K` for `K` in `1..=N`.
    pub fn population(&self, class: usize) -> usize {
        self.per_class[class - 1]
    }

    pub fn populations(&self) -> &[usize] {
        &self.per_class
    }

    /// Cumulative counts `m_k = P_1 + … + P_k`.
    pub fn cumulative(&self) -> Vec<usize> {
        self.per_class
            .iter()
            .scan(0usize, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Total particle count `m_N`.
    pub fn total_particles(&self) -> usize {
        self.per_class.iter().sum()
    }
}

/// The set of all length-`L` configurations with fixed populations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    l: usize,
    counts: Counts,
}

impl Sector {
    pub fn new(l: usize, counts: Counts) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidSector("ring length must be positive".into()));
        }
        if counts.total_particles() > l {
            return Err(Error::InvalidSector(format!(
                "{} particles do not fit on {} sites",
                counts.total_particles(),
                l
            )));
        }
        Ok(Self { l, counts })
    }

    /// Convenience constructor from `L` and the population list.
    pub fn from_populations(l: usize, populations: &[usize]) -> Result<Self> {
        Self::new(l, Counts::new(populations.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn counts(&self) -> &Counts {
        &self.counts
    }

    pub fn n_species(&self) -> u8 {
        self.counts.n_species() as u8
    }

    pub fn holes(&self) -> usize {
        self.l - self.counts.total_particles()
    }

    /// Number of configurations: `L! / (P_1! … P_N! (L - m_N)!)`.
    pub fn size(&self) -> BigUint {
        let mut numer = BigUint::one();
        for i in 2..=self.l {
            numer *= BigUint::from(i);
        }
        let mut denom = BigUint::one();
        for &p in self.counts.populations() {
            for i in 2..=p {
                denom *= BigUint::from(i);
            }
        }
        for i in 2..=self.holes() {
            denom *= BigUint::from(i);
        }
        numer / denom
    }

    /// The multiset of site labels, sorted ascending (the lexicographically
    /// first configuration of the sector).
    fn base_sites(&self) -> Vec<u8> {
        let mut sites = vec![0u8; self.holes()];
        for (idx, &p) in self.counts.populations().iter().enumerate() {
            let len = sites.len();
            sites.resize(len + p, (idx + 1) as u8);
        }
        sites
    }

    /// All configurations of the sector in lexicographic order.
    pub fn configurations(&self) -> Vec<Configuration> {
        let n = self.n_species();
        let mut sites = self.base_sites();
        let mut out = Vec::new();
        loop {
            out.push(Configuration {
                sites: sites.clone(),
                n_species: n,
            });
            if !next_permutation(&mut sites) {
                break;
            }
        }
        out
    }
}

/// All sectors of ring length `l` with exactly `n` species, every class
/// populated. Sectors with an absent class are relabelings of lower-species
/// sectors and are covered there.
pub fn sectors_with_all_classes(l: usize, n: usize) -> Vec<Sector> {
    fn go(l: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Sector>) {
        if remaining == 0 {
            out.push(Sector::from_populations(l, prefix).expect("fits by construction"));
            return;
        }
        let used: usize = prefix.iter().sum();
        // Leave at least one site per class still to place.
        for p in 1..=(l - used).saturating_sub(remaining - 1) {
            prefix.push(p);
            go(l, remaining - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if l > 0 {
            out.push(Sector::from_populations(l, &[]).expect("valid"));
        }
        return out;
    }
    if n <= l {
        go(l, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Advances to the next lexicographic permutation; false when exhausted.
fn next_permutation(v: &mut [u8]) -> bool {
    if v.len() < 2 {
        return false;
    }
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_compact_digits() {
        let c = Configuration::parse("2103").unwrap();
        assert_eq!(c.sites(), &[2, 1, 0, 3]);
        assert_eq!(c.n_species(), 3);
        let c = Configuration::parse("0210").unwrap();
        assert_eq!(c.sites(), &[0, 2, 1, 0]);
        assert_eq!(c.n_species(), 2);
    }

    #[test]
    fn parse_comma_separated() {
        let c = Configuration::parse("2,10,0").unwrap();
        assert_eq!(c.sites(), &[2, 10, 0]);
        assert_eq!(c.n_species(), 10);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(Configuration::parse(""), Err(Error::EmptyInput)));
        assert!(matches!(
            Configuration::parse("21x3"),
            Err(Error::MalformedToken(_))
        ));
        assert!(matches!(
            Configuration::parse("2,,3"),
            Err(Error::MalformedToken(_))
        ));
    }

    #[test]
    fn render_round_trip() {
        for text in ["2103", "0210", "0000", "2,10,0"] {
            let c = Configuration::parse(text).unwrap();
            assert_eq!(c.to_string(), text);
            assert_eq!(Configuration::parse(&c.to_string()).unwrap(), c);
        }
    }

    #[test]
    fn particle_counts() {
        let c = Configuration::parse("2103").unwrap();
        assert_eq!(c.counts().populations(), &[1, 1, 1]);
        assert_eq!(c.counts().cumulative(), vec![1, 2, 3]);

        let c = Configuration::parse("0211021").unwrap();
        assert_eq!(c.counts().populations(), &[3, 2]);
        assert_eq!(c.counts().cumulative(), vec![3, 5]);

        let c = Configuration::parse("0000").unwrap();
        assert_eq!(c.counts().populations(), &[] as &[usize]);
        assert_eq!(c.counts().total_particles(), 0);
    }

    #[test]
    fn rotate_matches_worked_example() {
        let c = Configuration::parse("0210").unwrap();
        assert_eq!(c.rotate(1).to_string(), "2100");
        assert_eq!(c.rotate(0), c);
        assert_eq!(c.rotate(c.len() as i64), c);
        assert_eq!(c.rotate(-3), c.rotate(1));
    }

    #[test]
    fn rotation_preserves_counts() {
        let c = Configuration::parse("0211021").unwrap();
        for k in 0..c.len() as i64 {
            assert_eq!(c.rotate(k).counts(), c.counts());
        }
    }

    #[test]
    fn reduce_species_compresses_labels() {
        let c = Configuration::parse("0303").unwrap();
        let (r, map) = c.reduce_species();
        assert_eq!(r.to_string(), "0101");
        assert_eq!(r.n_species(), 1);
        assert_eq!(map, BTreeMap::from([(3, 1)]));

        let c = Configuration::parse("2103").unwrap();
        let (r, map) = c.reduce_species();
        assert_eq!(r, c);
        assert_eq!(map, BTreeMap::from([(1, 1), (2, 2), (3, 3)]));

        let c = Configuration::parse_with_species("0110", Some(3)).unwrap();
        let (r, _) = c.reduce_species();
        assert_eq!(r.to_string(), "0110");
        assert_eq!(r.n_species(), 1);
    }

    #[test]
    fn reduce_species_preserves_holes_and_order() {
        let c = Configuration::parse_with_species("05020", Some(9)).unwrap();
        let (r, _) = c.reduce_species();
        assert_eq!(r.to_string(), "02010");
    }

    #[test]
    fn sector_sizes_are_multinomials() {
        let s = Sector::from_populations(4, &[1, 1]).unwrap();
        assert_eq!(s.size(), BigUint::from(12u32));
        let s = Sector::from_populations(4, &[1, 1, 1]).unwrap();
        assert_eq!(s.size(), BigUint::from(24u32));
        let s = Sector::from_populations(7, &[3, 2]).unwrap();
        assert_eq!(s.size(), BigUint::from(210u32));
    }

    #[test]
    fn sector_enumeration_is_lexicographic_and_complete() {
        let s = Sector::from_populations(4, &[1, 1]).unwrap();
        let configs = s.configurations();
        assert_eq!(configs.len(), 12);
        let mut sorted = configs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, configs);
        for c in &configs {
            assert_eq!(&c.sector(), &s);
        }
    }

    #[test]
    fn sector_rejects_overfull() {
        assert!(Sector::from_populations(3, &[2, 2]).is_err());
        assert!(Sector::from_populations(0, &[]).is_err());
    }

    #[test]
    fn rotation_is_bijective_on_sector() {
        let s = Sector::from_populations(5, &[2, 1]).unwrap();
        let configs = s.configurations();
        for k in 0..5 {
            let mut rotated: Vec<_> = configs.iter().map(|c| c.rotate(k)).collect();
            rotated.sort();
            rotated.dedup();
            assert_eq!(rotated.len(), configs.len());
        }
    }

    #[test]
    fn sector_enumeration_with_all_classes() {
        let sectors = sectors_with_all_classes(4, 2);
        // (1,1), (1,2), (2,1), (1,3), (3,1), (2,2)
        assert_eq!(sectors.len(), 6);
        for s in &sectors {
            assert!(s.counts().populations().iter().all(|&p| p >= 1));
            assert!(s.counts().total_particles() <= 4);
        }
        assert_eq!(sectors_with_all_classes(3, 4).len(), 0);
        assert_eq!(sectors_with_all_classes(3, 3).len(), 1);
    }

    #[test]
    fn json_rendering_shape() {
        let c = Configuration::parse("2103").unwrap();
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"L": 4, "N": 3, "sites": [2, 1, 0, 3]})
        );
        let back: Configuration = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
    }
}
