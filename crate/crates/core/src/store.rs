//! Versioned run artifacts: score tables, prompt inventories, response logs,
//! news metadata, summaries, and the hash manifest that seals them.
//!
//! Run directories are immutable: writing refuses an existing `run_id`, and
//! every file lands in the manifest with a sha256 digest that readers verify
//! before trusting the contents. Score tables are delimited text (UTF-8 CSV,
//! fixed header, one row per cell and metric) with full-precision values;
//! report rounding happens only at summary emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregate::ScoreCell;
use crate::gateway::{DecodingParams, GenerationResult, ModelSpec};
use crate::news::{NewsAnchor, TopicStratum};
use crate::prompt::{ConditionKind, PromptInstance};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const NEWS_FILE: &str = "news.jsonl";
pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const SCORES_FILE: &str = "scores.csv";
pub const SUMMARIES_DIR: &str = "summaries";

pub const SCORES_HEADER: [&str; 12] = [
    "run_id",
    "batch_id",
    "news_id",
    "vendor",
    "model",
    "dimension",
    "family",
    "condition",
    "metric",
    "value",
    "n_identities",
    "valid",
];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run {run_id:?} already exists at {path:?}; runs are immutable")]
    RunExists { run_id: String, path: PathBuf },
    #[error("integrity error: {path:?} digest {actual} does not match manifest {expected}")]
    Integrity {
        path: String,
        expected: String,
        actual: String,
    },
    #[error("score table {path:?} line {line}: {message}")]
    MalformedRow {
        path: String,
        line: usize,
        message: String,
    },
    #[error("csv error on {path:?}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Scoring knobs recorded for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub tokenizer: String,
    pub silhouette_distance: String,
    pub sentiment_engine: String,
    pub kmeans_k: usize,
    pub kmeans_n_init: usize,
    pub kmeans_seed: u64,
    pub bootstrap_replicates: usize,
    pub bootstrap_seed: u64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            tokenizer: "unicode-alnum-runs-lowercase".into(),
            silhouette_distance: "euclidean".into(),
            sentiment_engine: "vader-3.3.2-port".into(),
            kmeans_k: crate::scoring::KMEANS_K,
            kmeans_n_init: crate::scoring::KMEANS_N_INIT,
            kmeans_seed: crate::scoring::KMEANS_SEED,
            bootstrap_replicates: 10_000,
            bootstrap_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created_at: DateTime<Utc>,
    pub seed: u64,
    pub taxonomy_hash: String,
    pub prompt_inventory_hash: String,
    pub model_specs: Vec<ModelSpec>,
    pub decoding_defaults: DecodingParams,
    pub scoring: ScoringConfig,
    /// Relative path -> sha256 of every file in the run directory.
    pub files: BTreeMap<String, String>,
}

/// Response-log record; carries text only when redistribution is permitted,
/// otherwise the hash stands in for it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub prompt_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub response_hash: String,
    pub latency_ms: u64,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid_reason: Option<crate::gateway::InvalidReason>,
}

pub struct RunArtifacts<'a> {
    pub run_id: &'a str,
    pub seed: u64,
    pub taxonomy_hash: String,
    pub model_specs: &'a [ModelSpec],
    pub decoding_defaults: DecodingParams,
    pub scoring: ScoringConfig,
    pub anchors: &'a [NewsAnchor],
    pub prompts: &'a [PromptInstance],
    pub results: &'a [GenerationResult],
    pub cells: &'a [ScoreCell],
    /// (file name under summaries/, content)
    pub summaries: &'a [(String, String)],
    /// When false the response log holds hashes only.
    pub redistribute_text: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<String, StoreError> {
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(bytes).map_err(io_err(path))?;
    Ok(sha256_hex(bytes))
}

/// Serialize cells to the fixed score-table format. Metrics present on a
/// cell each get a row; an invalid cell gets marker rows for the two
/// headline metrics with empty values.
pub fn score_table_csv(cells: &[ScoreCell]) -> Result<String, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(SCORES_HEADER)?;
    let mut sorted: Vec<&ScoreCell> = cells.iter().collect();
    sorted.sort_by(|a, b| {
        (
            &a.batch_id,
            &a.news_id,
            &a.vendor,
            &a.model_id,
            &a.dimension,
            &a.family,
            a.condition,
        )
            .cmp(&(
                &b.batch_id,
                &b.news_id,
                &b.vendor,
                &b.model_id,
                &b.dimension,
                &b.family,
                b.condition,
            ))
    });
    for cell in sorted {
        let metrics: [(&str, Option<f64>); 8] = [
            ("d_sem", cell.d_sem),
            ("n_sem", cell.n_sem),
            ("s_cfs", cell.s_cfs),
            ("silhouette", cell.silhouette),
            ("sent_mean", cell.sent_mean),
            ("sent_range", cell.sent_range),
            ("sent_mad", cell.sent_mad),
            ("sent_silhouette", cell.sent_silhouette),
        ];
        let mut wrote_any = false;
        for (metric, value) in metrics {
            if let Some(v) = value {
                write_score_row(&mut writer, cell, metric, Some(v))?;
                wrote_any = true;
            }
        }
        if !wrote_any || !cell.valid {
            if cell.d_sem.is_none() {
                write_score_row(&mut writer, cell, "d_sem", None)?;
            }
            if cell.sent_range.is_none() {
                write_score_row(&mut writer, cell, "sent_range", None)?;
            }
        }
    }
    let bytes = writer.into_inner().expect("vec writer never fails");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_score_row<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    cell: &ScoreCell,
    metric: &str,
    value: Option<f64>,
) -> Result<(), csv::Error> {
    writer.write_record([
        cell.run_id.as_str(),
        cell.batch_id.as_str(),
        cell.news_id.as_str(),
        cell.vendor.as_str(),
        cell.model_id.as_str(),
        cell.dimension.as_deref().unwrap_or(""),
        cell.family.as_str(),
        cell.condition.as_str(),
        metric,
        &value.map(|v| format!("{v}")).unwrap_or_default(),
        &cell.n_identities.to_string(),
        if cell.valid { "true" } else { "false" },
    ])
}

/// Parse a score table back into typed cells, rejecting malformed rows with
/// their line numbers. When `expected_digest` is given the raw bytes must
/// match it first.
pub fn load_score_table(
    path: &Path,
    expected_digest: Option<&str>,
) -> Result<Vec<ScoreCell>, StoreError> {
    let raw = std::fs::read(path).map_err(io_err(path))?;
    if let Some(expected) = expected_digest {
        let actual = sha256_hex(&raw);
        if actual != expected {
            return Err(StoreError::Integrity {
                path: path.display().to_string(),
                expected: expected.to_string(),
                actual,
            });
        }
    }
    parse_score_table(&raw, &path.display().to_string())
}

fn parse_score_table(raw: &[u8], path: &str) -> Result<Vec<ScoreCell>, StoreError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(raw);
    {
        let headers = reader.headers().map_err(|source| StoreError::Csv {
            path: path.to_string(),
            source,
        })?;
        let expected: Vec<&str> = SCORES_HEADER.to_vec();
        let actual: Vec<&str> = headers.iter().collect();
        if actual != expected {
            return Err(StoreError::MalformedRow {
                path: path.to_string(),
                line: 1,
                message: format!("unexpected header {actual:?}"),
            });
        }
    }

    let mut cells: BTreeMap<(String, String, String, String, String, String, String, String), ScoreCell> =
        BTreeMap::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2; // header is line 1
        let record = record.map_err(|source| StoreError::Csv {
            path: path.to_string(),
            source,
        })?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let condition = ConditionKind::parse(&field(7)).ok_or_else(|| StoreError::MalformedRow {
            path: path.to_string(),
            line,
            message: format!("unknown condition {:?}", field(7)),
        })?;
        let n_identities: usize = field(10).parse().map_err(|_| StoreError::MalformedRow {
            path: path.to_string(),
            line,
            message: format!("bad n_identities {:?}", field(10)),
        })?;
        let valid = match field(11).as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(StoreError::MalformedRow {
                    path: path.to_string(),
                    line,
                    message: format!("bad valid flag {other:?}"),
                })
            }
        };
        let value: Option<f64> = match field(9).as_str() {
            "" => None,
            raw => Some(raw.parse().map_err(|_| StoreError::MalformedRow {
                path: path.to_string(),
                line,
                message: format!("bad value {raw:?}"),
            })?),
        };

        let key = (
            field(0),
            field(1),
            field(2),
            field(3),
            field(4),
            field(5),
            field(6),
            field(7),
        );
        let cell = cells.entry(key).or_insert_with(|| ScoreCell {
            run_id: field(0),
            batch_id: field(1),
            news_id: field(2),
            vendor: field(3),
            model_id: field(4),
            dimension: (!field(5).is_empty()).then(|| field(5)),
            family: field(6),
            condition,
            topic_stratum: TopicStratum::Unlabeled,
            d_sem: None,
            n_sem: None,
            s_cfs: None,
            silhouette: None,
            sent_mean: None,
            sent_range: None,
            sent_mad: None,
            sent_silhouette: None,
            n_identities,
            valid,
        });
        cell.valid = cell.valid && valid;
        match field(8).as_str() {
            "d_sem" => cell.d_sem = value,
            "n_sem" => cell.n_sem = value,
            "s_cfs" => cell.s_cfs = value,
            "silhouette" => cell.silhouette = value,
            "sent_mean" => cell.sent_mean = value,
            "sent_range" => cell.sent_range = value,
            "sent_mad" => cell.sent_mad = value,
            "sent_silhouette" => cell.sent_silhouette = value,
            other => {
                return Err(StoreError::MalformedRow {
                    path: path.to_string(),
                    line,
                    message: format!("unknown metric {other:?}"),
                })
            }
        }
    }
    Ok(cells.into_values().collect())
}

/// Re-attach topic strata to loaded cells from news metadata.
pub fn apply_strata(cells: &mut [ScoreCell], strata: &BTreeMap<String, TopicStratum>) {
    for cell in cells {
        if let Some(stratum) = strata.get(&cell.news_id) {
            cell.topic_stratum = *stratum;
        }
    }
}

fn jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// Write the complete artifact set for a run and seal it with a manifest.
/// Refuses to touch an existing run directory.
pub fn write_run(root: &Path, artifacts: &RunArtifacts) -> Result<RunManifest, StoreError> {
    let run_dir = root.join(artifacts.run_id);
    if run_dir.exists() {
        return Err(StoreError::RunExists {
            run_id: artifacts.run_id.to_string(),
            path: run_dir,
        });
    }
    std::fs::create_dir_all(run_dir.join(SUMMARIES_DIR)).map_err(io_err(&run_dir))?;

    let mut files = BTreeMap::new();

    let news = jsonl(artifacts.anchors.iter());
    files.insert(
        NEWS_FILE.to_string(),
        write_file(&run_dir.join(NEWS_FILE), news.as_bytes())?,
    );

    let prompts = jsonl(artifacts.prompts.iter());
    let prompt_inventory_hash = write_file(&run_dir.join(PROMPTS_FILE), prompts.as_bytes())?;
    files.insert(PROMPTS_FILE.to_string(), prompt_inventory_hash.clone());

    let responses = jsonl(artifacts.results.iter().map(|r| ResponseRecord {
        prompt_id: r.prompt_id.clone(),
        model_id: r.model_id.clone(),
        text: artifacts.redistribute_text.then(|| r.text.clone()),
        response_hash: r.response_hash.clone(),
        latency_ms: r.latency_ms,
        valid: r.valid,
        invalid_reason: r.invalid_reason,
    }));
    files.insert(
        RESPONSES_FILE.to_string(),
        write_file(&run_dir.join(RESPONSES_FILE), responses.as_bytes())?,
    );

    let scores = score_table_csv(artifacts.cells).map_err(|source| StoreError::Csv {
        path: SCORES_FILE.to_string(),
        source,
    })?;
    files.insert(
        SCORES_FILE.to_string(),
        write_file(&run_dir.join(SCORES_FILE), scores.as_bytes())?,
    );

    for (name, content) in artifacts.summaries {
        let rel = format!("{SUMMARIES_DIR}/{name}");
        files.insert(
            rel.clone(),
            write_file(&run_dir.join(&rel), content.as_bytes())?,
        );
    }

    let manifest = RunManifest {
        run_id: artifacts.run_id.to_string(),
        created_at: Utc::now(),
        seed: artifacts.seed,
        taxonomy_hash: artifacts.taxonomy_hash.clone(),
        prompt_inventory_hash,
        model_specs: artifacts.model_specs.to_vec(),
        decoding_defaults: artifacts.decoding_defaults,
        scoring: artifacts.scoring.clone(),
        files,
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&run_dir.join(MANIFEST_FILE), manifest_json.as_bytes())?;
    Ok(manifest)
}

pub fn load_manifest(run_dir: &Path) -> Result<RunManifest, StoreError> {
    let path = run_dir.join(MANIFEST_FILE);
    let raw = std::fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&raw).map_err(|e| StoreError::Manifest(e.to_string()))
}

/// Verify every file digest recorded in the manifest.
pub fn verify_run(run_dir: &Path) -> Result<RunManifest, StoreError> {
    let manifest = load_manifest(run_dir)?;
    for (rel, expected) in &manifest.files {
        let path = run_dir.join(rel);
        let raw = std::fs::read(&path).map_err(io_err(&path))?;
        let actual = sha256_hex(&raw);
        if &actual != expected {
            return Err(StoreError::Integrity {
                path: path.display().to_string(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    Ok(manifest)
}

/// Load news metadata (for strata joins and audits).
pub fn load_news(run_dir: &Path) -> Result<Vec<NewsAnchor>, StoreError> {
    let path = run_dir.join(NEWS_FILE);
    let raw = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut anchors = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        anchors.push(
            serde_json::from_str(line).map_err(|e| StoreError::MalformedRow {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(anchors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::ScoreCell;

    fn sample_cell(news: &str, family: &str, valid: bool) -> ScoreCell {
        ScoreCell {
            run_id: "r1".into(),
            batch_id: "b1".into(),
            news_id: news.into(),
            vendor: "mock".into(),
            model_id: "m1".into(),
            dimension: Some("Geography".into()),
            family: family.into(),
            condition: ConditionKind::Main,
            topic_stratum: TopicStratum::Unlabeled,
            d_sem: valid.then_some(0.12345678901234567),
            n_sem: None,
            s_cfs: None,
            silhouette: valid.then_some(0.5),
            sent_mean: valid.then_some(0.25),
            sent_range: valid.then_some(0.5),
            sent_mad: valid.then_some(0.125),
            sent_silhouette: None,
            n_identities: 6,
            valid,
        }
    }

    #[test]
    fn round_trip_preserves_cells_exactly() {
        let cells = vec![
            sample_cell("n1", "Impact", true),
            sample_cell("n1", "Significance", false),
            sample_cell("n2", "Impact", true),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        std::fs::write(&path, score_table_csv(&cells).unwrap()).unwrap();
        let mut loaded = load_score_table(&path, None).unwrap();
        loaded.sort_by(|a, b| a.key().cmp(&b.key()));
        let mut expected = cells.clone();
        expected.sort_by(|a, b| a.key().cmp(&b.key()));
        assert_eq!(loaded, expected);
    }

    #[test]
    fn header_is_the_pinned_contract() {
        let csv = score_table_csv(&[sample_cell("n1", "Impact", true)]).unwrap();
        let first = csv.lines().next().unwrap();
        assert_eq!(
            first,
            "run_id,batch_id,news_id,vendor,model,dimension,family,condition,metric,value,n_identities,valid"
        );
    }

    #[test]
    fn tampered_table_fails_integrity() {
        let cells = vec![sample_cell("n1", "Impact", true)];
        let csv = score_table_csv(&cells).unwrap();
        let digest = sha256_hex(csv.as_bytes());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let mut tampered = csv.into_bytes();
        let last = tampered.len() - 2;
        tampered[last] ^= 1;
        std::fs::write(&path, &tampered).unwrap();
        assert!(matches!(
            load_score_table(&path, Some(&digest)),
            Err(StoreError::Integrity { .. })
        ));
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let csv = "run_id,batch_id,news_id,vendor,model,dimension,family,condition,metric,value,n_identities,valid\n\
                   r1,b1,n1,v,m,D,F,main,d_sem,notanumber,6,true\n";
        std::fs::write(&path, csv).unwrap();
        match load_score_table(&path, None) {
            Err(StoreError::MalformedRow { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_cells_round_trip_with_empty_values() {
        let cells = vec![sample_cell("n1", "Impact", false)];
        let csv = score_table_csv(&cells).unwrap();
        assert!(csv.contains(",d_sem,,"), "empty value column for invalid cell:\n{csv}");
        assert!(csv.contains(",false"));
    }

    #[test]
    fn write_run_refuses_existing_run_id() {
        let dir = tempfile::tempdir().unwrap();
        let artifacts = RunArtifacts {
            run_id: "runx",
            seed: 1,
            taxonomy_hash: "t".into(),
            model_specs: &[],
            decoding_defaults: DecodingParams::default(),
            scoring: ScoringConfig::default(),
            anchors: &[],
            prompts: &[],
            results: &[],
            cells: &[],
            summaries: &[],
            redistribute_text: true,
        };
        write_run(dir.path(), &artifacts).unwrap();
        assert!(matches!(
            write_run(dir.path(), &artifacts),
            Err(StoreError::RunExists { .. })
        ));
    }

    #[test]
    fn manifest_digests_verify_and_detect_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let cells = vec![sample_cell("n1", "Impact", true)];
        let artifacts = RunArtifacts {
            run_id: "runy",
            seed: 1,
            taxonomy_hash: "t".into(),
            model_specs: &[],
            decoding_defaults: DecodingParams::default(),
            scoring: ScoringConfig::default(),
            anchors: &[],
            prompts: &[],
            results: &[],
            cells: &cells,
            summaries: &[("vendors.csv".into(), "vendor\n".into())],
            redistribute_text: true,
        };
        write_run(dir.path(), &artifacts).unwrap();
        let run_dir = dir.path().join("runy");
        verify_run(&run_dir).unwrap();
        // flip one byte in the score table
        let scores_path = run_dir.join(SCORES_FILE);
        let mut bytes = std::fs::read(&scores_path).unwrap();
        let last = bytes.len() - 2;
        bytes[last] ^= 1;
        std::fs::write(&scores_path, bytes).unwrap();
        assert!(matches!(verify_run(&run_dir), Err(StoreError::Integrity { .. })));
    }

    #[test]
    fn hash_only_response_log_when_redistribution_off() {
        let dir = tempfile::tempdir().unwrap();
        let result = GenerationResult {
            prompt_id: "p1".into(),
            model_id: "m1".into(),
            text: "secret response text".into(),
            latency_ms: 3,
            response_hash: sha256_hex(b"secret response text"),
            valid: true,
            invalid_reason: None,
            from_cache: false,
        };
        let artifacts = RunArtifacts {
            run_id: "runz",
            seed: 1,
            taxonomy_hash: "t".into(),
            model_specs: &[],
            decoding_defaults: DecodingParams::default(),
            scoring: ScoringConfig::default(),
            anchors: &[],
            prompts: &[],
            results: std::slice::from_ref(&result),
            cells: &[],
            summaries: &[],
            redistribute_text: false,
        };
        write_run(dir.path(), &artifacts).unwrap();
        let log = std::fs::read_to_string(dir.path().join("runz").join(RESPONSES_FILE)).unwrap();
        assert!(!log.contains("secret response text"));
        assert!(log.contains(&result.response_hash));
    }
}
