//! Response bundles and their reduction to scalar audit signals.
//!
//! A bundle is the unit of analysis: every identity-conditioned response for
//! one (model, news item, dimension, prompt family, condition), plus any
//! repeated generations. Scoring a bundle is a pure function, so bundles
//! score in parallel without shared state.

use std::collections::BTreeMap;

use crate::news::TopicStratum;
use crate::prompt::ConditionKind;

use super::cluster::{self, KMEANS_SEED};
use super::semantic;
use super::sentiment::{sentiment_disparity, SentimentScores};
use super::tfidf;
use super::vader::SentimentAnalyzer;

#[derive(Debug, Clone)]
pub struct Bundle {
    pub model_id: String,
    pub vendor: String,
    pub news_id: String,
    pub batch_id: String,
    pub topic_stratum: TopicStratum,
    /// None for identity-free bundles, which aggregate repeated generations
    /// of one family's identity-free prompt instead of identities.
    pub dimension: Option<String>,
    pub family: String,
    pub condition: ConditionKind,
    /// Ordered (identity, response text) pairs.
    pub responses: Vec<(String, String)>,
    /// Extra generations per identity (repeat_index >= 1), in index order.
    pub repeats: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticScores {
    pub d_sem: f64,
    pub n_sem: Option<f64>,
    /// Present exactly when `n_sem` is; `max(0, d_sem - n_sem)`.
    pub s_cfs: Option<f64>,
    pub silhouette: Option<f64>,
    pub silhouette_degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct BundleScores {
    pub semantic: Option<SemanticScores>,
    pub sentiment: Option<SentimentScores>,
    pub n_identities: usize,
    /// Responses whose embedding row had no tokens; when nonzero the bundle
    /// is only partially covered.
    pub degenerate_rows: usize,
    pub vocab_size: usize,
}

/// Embed the bundle-local corpus (responses plus repeats) and reduce to the
/// semantic and sentiment signals.
pub fn score_bundle(bundle: &Bundle, analyzer: &SentimentAnalyzer) -> BundleScores {
    let n_identities = bundle.responses.len();

    // corpus: responses in order, then repeats grouped per identity
    let mut docs: Vec<&str> = bundle.responses.iter().map(|(_, t)| t.as_str()).collect();
    let mut repeat_spans: Vec<(usize, usize)> = Vec::new(); // aligned with responses
    for (identity, _) in &bundle.responses {
        let start = docs.len();
        if let Some(extra) = bundle.repeats.get(identity) {
            docs.extend(extra.iter().map(String::as_str));
        }
        repeat_spans.push((start, docs.len()));
    }

    let matrix = tfidf::fit_transform(&docs);

    let identity_rows: Vec<Vec<f64>> = (0..n_identities)
        .filter(|&i| !matrix.degenerate[i])
        .map(|i| matrix.rows[i].clone())
        .collect();
    let degenerate_rows = (0..n_identities).filter(|&i| matrix.degenerate[i]).count();

    let semantic = semantic::dispersion(&identity_rows).map(|d_sem| {
        let mut repeats_vectors: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for (i, (identity, _)) in bundle.responses.iter().enumerate() {
            let (start, end) = repeat_spans[i];
            if end == start || matrix.degenerate[i] {
                continue;
            }
            let mut vectors = vec![matrix.rows[i].clone()];
            for row in start..end {
                if !matrix.degenerate[row] {
                    vectors.push(matrix.rows[row].clone());
                }
            }
            if vectors.len() >= 2 {
                repeats_vectors.insert(identity.clone(), vectors);
            }
        }
        let n_sem = semantic::within_identity_noise(&repeats_vectors);
        let s_cfs = n_sem.map(|n| semantic::counterfactual_framing_score(d_sem, n));
        let diag = if identity_rows.len() >= 3 {
            cluster::kmeans_silhouette(&identity_rows, KMEANS_SEED)
        } else {
            None
        };
        SemanticScores {
            d_sem,
            n_sem,
            s_cfs,
            silhouette: diag.map(|r| r.value),
            silhouette_degenerate: diag.map(|r| r.degenerate).unwrap_or(false),
        }
    });

    let compounds: Vec<(String, f64)> = bundle
        .responses
        .iter()
        .map(|(identity, text)| (identity.clone(), analyzer.compound(text)))
        .collect();
    let sentiment = sentiment_disparity(&compounds);

    BundleScores {
        semantic,
        sentiment,
        n_identities,
        degenerate_rows,
        vocab_size: matrix.vocab_size(),
    }
}
