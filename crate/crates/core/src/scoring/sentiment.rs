//! Sentiment disparity over a bundle's per-identity compound scores.

use std::collections::BTreeMap;

use super::cluster;

/// Bundle-level sentiment summary. `range` is the headline disparity; the
/// mean and mean absolute deviation are always carried alongside, plus a
/// secondary one-dimensional clustering diagnostic when enough members exist.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentScores {
    pub per_identity: BTreeMap<String, f64>,
    pub mean: f64,
    pub range: f64,
    pub mad: f64,
    pub silhouette_1d: Option<f64>,
}

/// Mean, range (max - min), and mean absolute deviation of the compounds.
/// `None` with fewer than two members.
pub fn sentiment_disparity(compounds: &[(String, f64)]) -> Option<SentimentScores> {
    if compounds.len() < 2 {
        return None;
    }
    let values: Vec<f64> = compounds.iter().map(|(_, q)| *q).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mad = values.iter().map(|q| (q - mean).abs()).sum::<f64>() / n;
    let silhouette_1d = if values.len() >= 3 {
        let points: Vec<Vec<f64>> = values.iter().map(|&q| vec![q]).collect();
        cluster::kmeans_silhouette(&points, cluster::KMEANS_SEED)
            .filter(|r| !r.degenerate)
            .map(|r| r.value)
    } else {
        None
    };
    Some(SentimentScores {
        per_identity: compounds.iter().cloned().collect(),
        mean,
        range: max - min,
        mad,
        silhouette_1d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(values: &[f64]) -> Vec<(String, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &q)| (format!("id{i}"), q))
            .collect()
    }

    #[test]
    fn constant_bundle_has_zero_spread() {
        let s = sentiment_disparity(&pairs(&[0.5, 0.5])).unwrap();
        assert_eq!(s.range, 0.0);
        assert_eq!(s.mad, 0.0);
        assert_eq!(s.mean, 0.5);
    }

    #[test]
    fn three_member_bundle_arithmetic() {
        let s = sentiment_disparity(&pairs(&[0.8, -0.2, 0.0])).unwrap();
        assert!((s.mean - 0.2).abs() < 1e-12);
        assert!((s.range - 1.0).abs() < 1e-12);
        assert!((s.mad - 0.4).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair() {
        for q in [0.0, 0.3, 0.9] {
            let s = sentiment_disparity(&pairs(&[q, -q])).unwrap();
            assert!((s.range - 2.0 * q).abs() < 1e-12);
            assert!((s.mad - q).abs() < 1e-12);
        }
    }

    #[test]
    fn single_member_unavailable() {
        assert_eq!(sentiment_disparity(&pairs(&[0.4])), None);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // mad <= range / 2 for every bundle
        #[test]
        fn mad_bounded_by_half_range(
            values in proptest::collection::vec(-1.0f64..=1.0, 2..12)
        ) {
            let pairs: Vec<(String, f64)> = values
                .iter()
                .enumerate()
                .map(|(i, &q)| (format!("id{i}"), q))
                .collect();
            let s = sentiment_disparity(&pairs).unwrap();
            prop_assert!(s.mad <= s.range / 2.0 + 1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&s.range));
        }

        // range and mad are permutation invariant
        #[test]
        fn spread_is_permutation_invariant(
            values in proptest::collection::vec(-1.0f64..=1.0, 2..10),
            seed in 0u64..500,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let pairs: Vec<(String, f64)> = values
                .iter()
                .enumerate()
                .map(|(i, &q)| (format!("id{i}"), q))
                .collect();
            let base = sentiment_disparity(&pairs).unwrap();
            let mut shuffled = pairs.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            let perm = sentiment_disparity(&shuffled).unwrap();
            prop_assert!((base.range - perm.range).abs() < 1e-12);
            prop_assert!((base.mad - perm.mad).abs() < 1e-12);
            prop_assert!((base.mean - perm.mean).abs() < 1e-12);
        }
    }
}
