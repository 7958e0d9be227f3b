//! Property suites over randomized inputs: route agreement, rotation
//! invariance, parse/render stability, and reduction soundness.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use mtasep::{algebra, multiline, pushing, tensor, Configuration, Sector};

fn binary_string() -> impl Strategy<Value = pushing::BinaryString> {
    prop::collection::vec(0u8..=1, 0..=12)
        .prop_map(|bits| pushing::BinaryString::new(bits).unwrap())
}

fn small_config() -> impl Strategy<Value = Configuration> {
    prop::collection::vec(0u8..=3, 1..=6).prop_map(|sites| {
        let n = sites.iter().copied().max().unwrap_or(0).max(1);
        Configuration::new(sites, n).unwrap()
    })
}

fn word() -> impl Strategy<Value = algebra::Word> {
    prop::collection::vec(0u8..3, 0..=10).prop_map(|codes| {
        algebra::Word::new(
            codes
                .iter()
                .map(|c| match c {
                    0 => algebra::Letter::D,
                    1 => algebra::Letter::E,
                    _ => algebra::Letter::A,
                })
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn omega_routes_agree(b in binary_string()) {
        prop_assert_eq!(pushing::omega_push(&b), pushing::omega_reduce(&b));
    }

    #[test]
    fn omega_bounds(b in binary_string()) {
        let w = pushing::omega_push(&b);
        prop_assert!(w >= BigInt::from(1));
        prop_assert_eq!(w == BigInt::from(1), b.is_sorted());
    }

    #[test]
    fn weight_routes_agree(c in small_config()) {
        let trace = tensor::trace_weight(&c, None);
        prop_assert_eq!(&trace, &pushing::weight_recursive(&c));
        prop_assert_eq!(&trace, &multiline::count_ancestors(&c).unwrap());
    }

    #[test]
    fn weights_are_rotation_invariant(c in small_config(), k in 0i64..6) {
        let rotated = c.rotate(k);
        prop_assert_eq!(
            tensor::trace_weight(&c, None),
            tensor::trace_weight(&rotated, None)
        );
        prop_assert_eq!(
            pushing::weight_recursive(&c),
            pushing::weight_recursive(&rotated)
        );
    }

    #[test]
    fn rotation_round_trips(c in small_config(), k in -12i64..12) {
        prop_assert_eq!(c.rotate(k).rotate(-k), c.clone());
        prop_assert_eq!(c.rotate(k).counts(), c.counts());
    }

    #[test]
    fn parse_render_round_trips(c in small_config()) {
        let text = c.to_string();
        let back = Configuration::parse_with_species(&text, Some(c.n_species())).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn reduction_preserves_holes_and_order(c in small_config()) {
        let (reduced, map) = c.reduce_species();
        prop_assert_eq!(reduced.len(), c.len());
        for (orig, red) in c.sites().iter().zip(reduced.sites()) {
            prop_assert_eq!(*orig == 0, *red == 0);
            if *orig > 0 {
                prop_assert_eq!(*red, map[orig]);
            }
        }
        // Relabeling is strictly monotone, so relative class order survives.
        let keys: Vec<u8> = map.keys().copied().collect();
        let vals: Vec<u8> = map.values().copied().collect();
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn word_reduction_matches_numeric(w in word()) {
        prop_assert_eq!(
            algebra::reduce_word(&w),
            algebra::word_matrix_element(&w, w.len() + 2)
        );
    }

    #[test]
    fn stationarity_residual_vanishes(c in small_config()) {
        prop_assert_eq!(algebra::stationarity_residual(&c, None), BigInt::from(0));
    }
}

#[test]
fn word_reduction_exact_to_length_ten() {
    // Exhaustive agreement of the rewrite evaluation with the truncated
    // numeric matrix element, over every word up to length 10.
    let letters = [algebra::Letter::D, algebra::Letter::E, algebra::Letter::A];
    for len in 8..=10usize {
        for code in 0..3usize.pow(len as u32) {
            let mut c = code;
            let word = algebra::Word::new(
                (0..len)
                    .map(|_| {
                        let l = letters[c % 3];
                        c /= 3;
                        l
                    })
                    .collect(),
            );
            assert_eq!(
                algebra::reduce_word(&word),
                algebra::word_matrix_element(&word, len + 2),
                "word {word}"
            );
        }
    }
}

#[test]
fn row_patterns_are_uniform_over_samples() {
    // Each row of a sampled multiline configuration is uniform over its
    // C(L, m_k) patterns; check row 1 with an exact binomial band.
    let sector = Sector::from_populations(5, &[2, 1]).unwrap();
    let samples = 100_000u64;
    let mut pattern_counts = std::collections::HashMap::<Vec<u8>, u64>::new();
    for i in 0..samples {
        let ml = multiline::sample_multiline(&sector, 977 + i).unwrap();
        *pattern_counts.entry(ml.rows()[0].clone()).or_insert(0) += 1;
    }
    let patterns = 10u64; // C(5, 2)
    assert_eq!(pattern_counts.len() as u64, patterns);
    let p = 1.0 / patterns as f64;
    let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
    for (pattern, count) in pattern_counts {
        let dev = (count as f64 - samples as f64 * p).abs();
        assert!(
            dev <= 4.0 * sigma,
            "pattern {pattern:?}: count {count}, expected {:.0} +- {sigma:.0}",
            samples as f64 * p
        );
    }
}

#[test]
fn empirical_frequencies_track_exact_probabilities() {
    let sector = Sector::from_populations(4, &[1, 1]).unwrap();
    let samples = 200_000u64;
    let counts = multiline::empirical_distribution(&sector, samples, 41).unwrap();
    for config in sector.configurations() {
        let observed = counts.get(&config).copied().unwrap_or(0) as f64;
        let p = tensor::probability(&config).to_f64().unwrap();
        let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (observed - samples as f64 * p).abs() <= 4.0 * sigma,
            "config {config}"
        );
    }
}
