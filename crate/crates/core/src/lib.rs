//! Monitoring pipeline for group-conditioned framing in LLM news responses.
//!
//! The pipeline expands live news anchors across an identity taxonomy and a
//! set of prompt families, collects model responses into per-dimension
//! bundles, and reduces each bundle to auditable scalar signals: semantic
//! dispersion over TF-IDF embeddings, a noise-corrected framing score,
//! clustering diagnostics, and lexicon sentiment disparity. Scores roll up
//! into vendor/model/dimension summaries with uncertainty estimates and are
//! persisted as versioned, hash-manifested score tables.
//!
//! Modules follow the pipeline stages:
//!
//! - [`taxonomy`]: identity dimensions, prompt-family templates, rendering
//! - [`news`]: feed/fixture ingestion, batch assignment, topic stratification
//! - [`prompt`]: expansion into the full prompt plan (main + controls)
//! - [`gateway`]: provider dispatch, retries, caching, mock providers
//! - [`scoring`]: TF-IDF embeddings, dispersion, silhouette, VADER sentiment
//! - [`aggregate`]: summaries, intervals, control deltas, coverage accounting
//! - [`store`]: run directories, score tables, manifests
//! - [`pipeline`]: end-to-end orchestration used by the CLI

pub mod aggregate;
pub mod config;
pub mod error;
pub mod gateway;
pub mod news;
pub mod pipeline;
pub mod prompt;
pub mod scoring;
pub mod store;
pub mod taxonomy;

pub use error::Error;
