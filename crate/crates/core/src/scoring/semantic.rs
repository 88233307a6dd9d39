//! Semantic dispersion and the noise-corrected framing score.

use std::collections::BTreeMap;

/// Mean pairwise cosine distance `(2 / n(n-1)) * sum_{i<j} (1 - z_i . z_j)`
/// over unit-norm rows. `None` when fewer than two rows are available.
///
/// Computed through the sum-vector identity
/// `sum_{i<j} z_i . z_j = (|S|^2 - sum_i |z_i|^2) / 2`, which is O(n * dim);
/// tests check it against direct pair enumeration.
pub fn dispersion(rows: &[Vec<f64>]) -> Option<f64> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let dim = rows[0].len();
    let mut sum_vec = vec![0.0f64; dim];
    let mut sq_norms = 0.0f64;
    for row in rows {
        for (acc, v) in sum_vec.iter_mut().zip(row) {
            *acc += v;
        }
        sq_norms += row.iter().map(|v| v * v).sum::<f64>();
    }
    let sum_sq: f64 = sum_vec.iter().map(|v| v * v).sum();
    let pair_dot_sum = (sum_sq - sq_norms) / 2.0;
    let pairs = (n * (n - 1) / 2) as f64;
    Some((pairs - pair_dot_sum) * 2.0 / (n as f64 * (n - 1) as f64))
}

/// Within-identity noise: mean over identities of the pairwise dispersion of
/// that identity's repeated generations. Identities with fewer than two
/// repeats are excluded; `None` when none remain.
pub fn within_identity_noise(repeats: &BTreeMap<String, Vec<Vec<f64>>>) -> Option<f64> {
    let per_identity: Vec<f64> = repeats
        .values()
        .filter(|vs| vs.len() >= 2)
        .filter_map(|vs| dispersion(vs))
        .collect();
    if per_identity.is_empty() {
        return None;
    }
    Some(per_identity.iter().sum::<f64>() / per_identity.len() as f64)
}

/// Cross-identity variation in excess of generation noise: `max(0, D - N)`.
pub fn counterfactual_framing_score(d_sem: f64, n_sem: f64) -> f64 {
    (d_sem - n_sem).max(0.0)
}

#[cfg(test)]
pub(crate) fn dispersion_bruteforce(rows: &[Vec<f64>]) -> Option<f64> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            total += 1.0 - dot;
        }
    }
    Some(total * 2.0 / (n as f64 * (n - 1) as f64))
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_rows(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(
            proptest::collection::vec(-1.0f64..1.0, dim..=dim).prop_filter_map(
                "nonzero vector",
                |v| {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (norm > 1e-6).then(|| v.iter().map(|x| x / norm).collect::<Vec<f64>>())
                },
            ),
            n..=n,
        )
    }

    proptest! {
        #[test]
        fn fast_path_matches_bruteforce(rows in (2usize..9).prop_flat_map(|n| unit_rows(n, 5))) {
            let fast = dispersion(&rows).unwrap();
            let brute = dispersion_bruteforce(&rows).unwrap();
            prop_assert!((fast - brute).abs() < 1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&fast));
        }

        #[test]
        fn dispersion_is_permutation_invariant(
            rows in (3usize..7).prop_flat_map(|n| unit_rows(n, 4)),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let base = dispersion(&rows).unwrap();
            let mut shuffled = rows.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            let permuted = dispersion(&shuffled).unwrap();
            prop_assert!((base - permuted).abs() < 1e-12);
        }

        #[test]
        fn framing_score_bounds(d in 0.0f64..2.0, n in 0.0f64..2.0) {
            let s = counterfactual_framing_score(d, n);
            prop_assert!(s >= 0.0);
            prop_assert!(s <= d);
        }
    }
}
