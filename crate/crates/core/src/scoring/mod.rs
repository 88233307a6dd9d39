//! Bundle scoring: embeddings, dispersion metrics, clustering diagnostics,
//! and lexicon sentiment.

pub mod bundle;
pub mod cluster;
pub mod semantic;
pub mod sentiment;
pub mod tfidf;
pub mod vader;

pub use bundle::{score_bundle, Bundle, BundleScores, SemanticScores};
pub use cluster::{kmeans_silhouette, SilhouetteResult, KMEANS_K, KMEANS_N_INIT, KMEANS_SEED};
pub use semantic::{counterfactual_framing_score, dispersion, within_identity_noise};
pub use sentiment::{sentiment_disparity, SentimentScores};
pub use vader::{PolarityScores, SentimentAnalyzer};
