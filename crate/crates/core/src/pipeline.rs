//! End-to-end run orchestration: ingest news, expand the prompt plan,
//! dispatch to providers, assemble and score bundles, aggregate summaries,
//! and persist the sealed run directory.
//!
//! Everything downstream of ingestion is deterministic given the manifest
//! seed: repeat sampling, mock generation, bundle assembly order, bootstrap
//! draws, and file contents. Two runs with the same inputs and seed produce
//! byte-identical score tables and summaries.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::Utc;

use crate::aggregate::{
    self, control_delta, coverage_report, dimension_prompt_matrix, grouped_means,
    metric_correlation, model_means, round_half_even, vendor_summaries, ControlDelta,
    CoverageReport, ModelSummary, ScoreCell,
};
use crate::config::RunConfig;
use crate::error::Error;
use crate::gateway::{Gateway, GatewayConfig, GenerationResult, ModelSpec};
use crate::news::{self, NewsAnchor, TopicStratum};
use crate::prompt::{self, ConditionKind, PromptInstance};
use crate::scoring::{score_bundle, Bundle, SentimentAnalyzer};
use crate::store::{self, sha256_hex, RunArtifacts, RunManifest, ScoringConfig};
use crate::taxonomy::Taxonomy;

/// Per-condition instance counts for one expansion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanCounts {
    pub main: usize,
    pub identity_free: usize,
    pub random_label: usize,
    pub paraphrase: usize,
    pub repeats: usize,
}

impl PlanCounts {
    pub fn total(&self) -> usize {
        self.main + self.identity_free + self.random_label + self.paraphrase + self.repeats
    }
}

#[derive(Debug, Clone)]
pub struct PromptPlan {
    pub instances: Vec<PromptInstance>,
    pub counts: PlanCounts,
}

/// Expand the full prompt plan for a set of anchors under the configured
/// controls. Repeat sampling is seeded once for the whole run.
pub fn expand_plan(
    anchors: &[NewsAnchor],
    taxonomy: &Taxonomy,
    config: &RunConfig,
) -> Result<PromptPlan, Error> {
    let mut instances = Vec::new();
    let mut counts = PlanCounts::default();

    let mut all_main = Vec::new();
    for anchor in anchors {
        let main = prompt::expand_main(anchor, taxonomy);
        counts.main += main.len();
        all_main.extend(main.iter().cloned());
        instances.extend(main);

        if config.controls.identity_free {
            let free = prompt::expand_identity_free(anchor, taxonomy)?;
            for inst in &free {
                for sample in 1..config.controls.identity_free_samples {
                    let clone = prompt::with_repeat_index(inst, sample);
                    counts.identity_free += 1;
                    instances.push(clone);
                }
            }
            counts.identity_free += free.len();
            instances.extend(free);
        }
        if config.controls.random_label {
            let random = prompt::expand_random_label(anchor, taxonomy);
            counts.random_label += random.len();
            instances.extend(random);
        }
        if config.controls.paraphrase {
            let para = prompt::expand_paraphrase(anchor, taxonomy)?;
            counts.paraphrase += para.len();
            instances.extend(para);
        }
    }

    if let Some(repeats) = &config.controls.repeats {
        let extra = prompt::plan_repeats(&all_main, repeats.r, repeats.fraction, config.seed)?;
        counts.repeats = extra.len();
        instances.extend(extra);
    }

    Ok(PromptPlan { instances, counts })
}

/// Ingest configured fixtures and feeds. Each source is one ingestion
/// invocation and becomes one batch (unless records carry explicit batch
/// overrides). Live feeds are truncated newest-first to `items_per_batch`.
pub fn ingest_sources(config: &RunConfig) -> Result<Vec<NewsAnchor>, Error> {
    let now = Utc::now();
    let mut all = Vec::new();
    let mut batch_index = 0usize;
    let mut next_batch_id = || {
        batch_index += 1;
        format!("b{batch_index:03}")
    };

    for path in &config.fixtures {
        let (anchors, stats) = news::ingest_fixture_file(path, now)?;
        if stats.skipped_empty_headline > 0 {
            log::warn!(
                "{}: skipped {} items with empty headlines",
                path.display(),
                stats.skipped_empty_headline
            );
        }
        let batches = news::assign_batch(anchors, &next_batch_id(), now);
        all.extend(batches.into_iter().flat_map(|b| b.anchors));
    }
    for feed in &config.feeds {
        let (mut anchors, _) = news::ingest_feed_url(
            &feed.url,
            &feed.source,
            std::time::Duration::from_secs(30),
        )?;
        // newest first, capped per poll
        anchors.sort_by(|a, b| b.published_at.cmp(&a.published_at));
        anchors.truncate(config.items_per_batch);
        let batches = news::assign_batch(anchors, &next_batch_id(), now);
        all.extend(batches.into_iter().flat_map(|b| b.anchors));
    }

    if all.is_empty() {
        return Err(Error::Config(
            "no news anchors: configure fixtures or feeds".into(),
        ));
    }
    Ok(all)
}

/// Deterministic run identifier from the seed and input fingerprints.
pub fn derive_run_id(
    seed: u64,
    taxonomy_hash: &str,
    specs: &[ModelSpec],
    anchors: &[NewsAnchor],
) -> String {
    let mut canon = format!("run\x1f{seed}\x1f{taxonomy_hash}");
    let mut models: Vec<&str> = specs.iter().map(|s| s.model_id.as_str()).collect();
    models.sort();
    for model in models {
        canon.push('\x1f');
        canon.push_str(model);
    }
    let mut ids: Vec<&str> = anchors.iter().map(|a| a.news_id.as_str()).collect();
    ids.sort();
    for id in ids {
        canon.push('\x1f');
        canon.push_str(id);
    }
    format!("r{}", &sha256_hex(canon.as_bytes())[..12])
}

struct AssembledBundle {
    bundle: Bundle,
    all_members_valid: bool,
    expected_members: usize,
}

/// Group generation results into scoreable bundles, deterministically.
fn assemble_bundles(
    specs: &[ModelSpec],
    instances: &[PromptInstance],
    results: &[GenerationResult],
    anchors: &BTreeMap<String, &NewsAnchor>,
) -> Vec<AssembledBundle> {
    let result_map: BTreeMap<(&str, &str), &GenerationResult> = results
        .iter()
        .map(|r| ((r.model_id.as_str(), r.prompt_id.as_str()), r))
        .collect();

    let mut bundles = Vec::new();
    for spec in specs {
        // (condition, news, dimension, family) -> members in instance order
        let mut members: BTreeMap<(ConditionKind, String, String, String), Vec<(String, String, bool)>> =
            BTreeMap::new();
        // (news, dimension, family, identity) -> (repeat_index, text) of valid repeats
        let mut repeats: BTreeMap<(String, String, String, String), Vec<(u32, String)>> =
            BTreeMap::new();
        // (news, family) -> (sample_index, text, valid)
        let mut identity_free: BTreeMap<(String, String), Vec<(u32, String, bool)>> =
            BTreeMap::new();

        for inst in instances {
            let Some(result) = result_map.get(&(spec.model_id.as_str(), inst.prompt_id.as_str()))
            else {
                continue;
            };
            match inst.condition {
                ConditionKind::Main | ConditionKind::RandomLabel | ConditionKind::Paraphrase => {
                    let key = (
                        inst.condition,
                        inst.news_id.clone(),
                        inst.dimension.clone().unwrap_or_default(),
                        inst.family.clone(),
                    );
                    members.entry(key).or_default().push((
                        inst.identity.clone().unwrap_or_default(),
                        result.text.clone(),
                        result.valid,
                    ));
                }
                ConditionKind::Repeat => {
                    if result.valid {
                        let key = (
                            inst.news_id.clone(),
                            inst.dimension.clone().unwrap_or_default(),
                            inst.family.clone(),
                            inst.identity.clone().unwrap_or_default(),
                        );
                        repeats
                            .entry(key)
                            .or_default()
                            .push((inst.repeat_index, result.text.clone()));
                    }
                }
                ConditionKind::IdentityFree => {
                    let key = (inst.news_id.clone(), inst.family.clone());
                    identity_free.entry(key).or_default().push((
                        inst.repeat_index,
                        result.text.clone(),
                        result.valid,
                    ));
                }
            }
        }

        for ((condition, news_id, dimension, family), list) in members {
            let anchor = anchors.get(news_id.as_str());
            let all_valid = list.iter().all(|(_, _, valid)| *valid);
            let expected = list.len();
            let mut bundle = Bundle {
                model_id: spec.model_id.clone(),
                vendor: spec.vendor.clone(),
                news_id: news_id.clone(),
                batch_id: anchor.map(|a| a.batch_id.clone()).unwrap_or_default(),
                topic_stratum: anchor
                    .map(|a| a.topic_stratum)
                    .unwrap_or(TopicStratum::Unlabeled),
                dimension: Some(dimension.clone()),
                family: family.clone(),
                condition,
                responses: list
                    .into_iter()
                    .map(|(identity, text, _)| (identity, text))
                    .collect(),
                repeats: BTreeMap::new(),
            };
            if condition == ConditionKind::Main {
                for ((r_news, r_dim, r_family, identity), mut texts) in repeats
                    .iter()
                    .filter(|((n, d, f, _), _)| n == &news_id && d == &dimension && f == &family)
                    .map(|(k, v)| (k.clone(), v.clone()))
                {
                    texts.sort_by_key(|(index, _)| *index);
                    let _ = (r_news, r_dim, r_family);
                    bundle
                        .repeats
                        .insert(identity, texts.into_iter().map(|(_, t)| t).collect());
                }
            }
            bundles.push(AssembledBundle {
                bundle,
                all_members_valid: all_valid,
                expected_members: expected,
            });
        }

        for ((news_id, family), mut samples) in identity_free {
            samples.sort_by_key(|(index, _, _)| *index);
            let anchor = anchors.get(news_id.as_str());
            let all_valid = samples.iter().all(|(_, _, valid)| *valid);
            let expected = samples.len();
            bundles.push(AssembledBundle {
                bundle: Bundle {
                    model_id: spec.model_id.clone(),
                    vendor: spec.vendor.clone(),
                    news_id,
                    batch_id: anchor.map(|a| a.batch_id.clone()).unwrap_or_default(),
                    topic_stratum: anchor
                        .map(|a| a.topic_stratum)
                        .unwrap_or(TopicStratum::Unlabeled),
                    dimension: None,
                    family,
                    condition: ConditionKind::IdentityFree,
                    responses: samples
                        .into_iter()
                        .map(|(index, text, _)| (format!("sample {index}"), text))
                        .collect(),
                    repeats: BTreeMap::new(),
                },
                all_members_valid: all_valid,
                expected_members: expected,
            });
        }
    }
    bundles
}

fn cell_for(run_id: &str, assembled: &AssembledBundle, analyzer: &SentimentAnalyzer) -> ScoreCell {
    let bundle = &assembled.bundle;
    let mut cell = ScoreCell {
        run_id: run_id.to_string(),
        batch_id: bundle.batch_id.clone(),
        news_id: bundle.news_id.clone(),
        vendor: bundle.vendor.clone(),
        model_id: bundle.model_id.clone(),
        dimension: bundle.dimension.clone(),
        family: bundle.family.clone(),
        condition: bundle.condition,
        topic_stratum: bundle.topic_stratum,
        d_sem: None,
        n_sem: None,
        s_cfs: None,
        silhouette: None,
        sent_mean: None,
        sent_range: None,
        sent_mad: None,
        sent_silhouette: None,
        n_identities: assembled.expected_members,
        valid: false,
    };
    if !assembled.all_members_valid {
        return cell;
    }
    let scores = score_bundle(bundle, analyzer);
    cell.valid = true;
    cell.n_identities = scores.n_identities;
    if let Some(semantic) = &scores.semantic {
        cell.d_sem = Some(semantic.d_sem);
        cell.n_sem = semantic.n_sem;
        cell.s_cfs = semantic.s_cfs;
        cell.silhouette = semantic.silhouette.filter(|_| !semantic.silhouette_degenerate);
    }
    if let Some(sentiment) = &scores.sentiment {
        cell.sent_mean = Some(sentiment.mean);
        cell.sent_range = Some(sentiment.range);
        cell.sent_mad = Some(sentiment.mad);
        cell.sent_silhouette = sentiment.silhouette_1d;
    }
    cell
}

/// Score every assembled bundle into cells, sorted deterministically.
fn score_all(
    run_id: &str,
    bundles: &[AssembledBundle],
    analyzer: &SentimentAnalyzer,
) -> Vec<ScoreCell> {
    let mut cells: Vec<ScoreCell> = bundles
        .iter()
        .map(|b| cell_for(run_id, b, analyzer))
        .collect();
    cells.sort_by(|a, b| a.key().cmp(&b.key()));
    cells
}

/// Control-condition comparison rows, including topic strata and the
/// repeat-noise floor (whose semantic channel is the mean within-identity
/// noise of main cells).
pub fn control_summary(cells: &[ScoreCell]) -> Vec<ControlDelta> {
    let main: Vec<&ScoreCell> = cells
        .iter()
        .filter(|c| c.condition == ConditionKind::Main && c.valid)
        .collect();
    let by_condition = |kind: ConditionKind| -> Vec<&ScoreCell> {
        cells
            .iter()
            .filter(|c| c.condition == kind && c.valid)
            .collect()
    };

    let mut rows = Vec::new();
    let main_sem = aggregate::mean(
        &main.iter().filter_map(|c| c.d_sem).collect::<Vec<f64>>(),
    );
    let main_sent = aggregate::mean(
        &main.iter().filter_map(|c| c.sent_range).collect::<Vec<f64>>(),
    );
    rows.push(ControlDelta {
        condition: "identity_conditioned".into(),
        pairs: main.len(),
        sem: main_sem,
        sent: main_sent,
        delta_sem: None,
        delta_sent: None,
    });

    for (kind, label) in [
        (ConditionKind::IdentityFree, "identity_free"),
        (ConditionKind::RandomLabel, "random_label"),
        (ConditionKind::Paraphrase, "paraphrase"),
    ] {
        let ctrl = by_condition(kind);
        if let Some(delta) = control_delta(&main, &ctrl, label) {
            rows.push(delta);
        }
    }

    // repeat noise: pseudo-cells carrying n_sem as their semantic channel
    let noise_cells: Vec<ScoreCell> = main
        .iter()
        .filter(|c| c.n_sem.is_some())
        .map(|c| ScoreCell {
            d_sem: c.n_sem,
            sent_range: None,
            ..(*c).clone()
        })
        .collect();
    let noise_refs: Vec<&ScoreCell> = noise_cells.iter().collect();
    if let Some(delta) = control_delta(&main, &noise_refs, "repeat_noise") {
        rows.push(delta);
    }

    // news strata: neutral gets a delta against the full main mean
    for (stratum, label, with_delta) in [
        (TopicStratum::IdentityNeutral, "identity_neutral_news", true),
        (TopicStratum::IdentityRelevant, "identity_relevant_news", false),
    ] {
        let subset: Vec<&ScoreCell> = main
            .iter()
            .filter(|c| c.topic_stratum == stratum)
            .copied()
            .collect();
        if subset.is_empty() {
            continue;
        }
        let sem = aggregate::mean(&subset.iter().filter_map(|c| c.d_sem).collect::<Vec<f64>>());
        let sent = aggregate::mean(
            &subset.iter().filter_map(|c| c.sent_range).collect::<Vec<f64>>(),
        );
        rows.push(ControlDelta {
            condition: label.into(),
            pairs: subset.len(),
            sem,
            sent,
            delta_sem: if with_delta {
                main_sem.zip(sem).map(|(m, s)| m - s)
            } else {
                None
            },
            delta_sent: if with_delta {
                main_sent.zip(sent).map(|(m, s)| m - s)
            } else {
                None
            },
        });
    }
    rows
}

fn fmt3(value: Option<f64>) -> String {
    value
        .map(|v| format!("{:.3}", round_half_even(v, 3)))
        .unwrap_or_default()
}

/// Render every summary table for a cell set. Values round to three decimal
/// places (ties to even) for report parity; the score table keeps full
/// precision.
pub fn build_summaries(
    cells: &[ScoreCell],
    expected_per_article: usize,
    scoring: &ScoringConfig,
) -> Vec<(String, String)> {
    let model_ids: std::collections::BTreeSet<&str> =
        cells.iter().map(|c| c.model_id.as_str()).collect();
    let models: Vec<ModelSummary> = model_ids
        .iter()
        .map(|id| model_means(cells, id))
        .collect();
    let vendors = vendor_summaries(&models);

    let mut out = Vec::new();

    let mut vendors_csv = String::from(
        "vendor,models,sem_mean,sem_ci_lo,sem_ci_hi,sent_mean,sent_ci_lo,sent_ci_hi\n",
    );
    for v in &vendors {
        vendors_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            v.vendor,
            v.model_count,
            fmt3(v.sem_mean),
            fmt3(v.sem_ci_95.map(|c| c.0)),
            fmt3(v.sem_ci_95.map(|c| c.1)),
            fmt3(v.sent_mean),
            fmt3(v.sent_ci_95.map(|c| c.0)),
            fmt3(v.sent_ci_95.map(|c| c.1)),
        ));
    }
    out.push(("vendors.csv".to_string(), vendors_csv));

    let mut models_csv = String::from(
        "vendor,model,sem_mean,sem_boot_lo,sem_boot_hi,sent_mean,std_news,valid_scores\n",
    );
    for m in &models {
        let model_sems: Vec<f64> = cells
            .iter()
            .filter(|c| {
                c.model_id == m.model_id && c.condition == ConditionKind::Main && c.valid
            })
            .filter_map(|c| c.d_sem)
            .collect();
        let boot = aggregate::bootstrap_interval(
            &model_sems,
            0.95,
            scoring.bootstrap_replicates,
            scoring.bootstrap_seed,
        );
        models_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.vendor,
            m.model_id,
            fmt3(m.sem_mean),
            fmt3(boot.map(|b| b.0)),
            fmt3(boot.map(|b| b.1)),
            fmt3(m.sent_mean),
            fmt3(m.std_news),
            m.valid_scores,
        ));
    }
    out.push(("models.csv".to_string(), models_csv));

    let mut dims_csv = String::from("dimension,sem_mean,sent_mean,pairs\n");
    for (key, sem, sent, pairs) in grouped_means(cells, |c| c.dimension.clone()) {
        dims_csv.push_str(&format!("{key},{},{},{pairs}\n", fmt3(sem), fmt3(sent)));
    }
    out.push(("dimensions.csv".to_string(), dims_csv));

    let mut fams_csv = String::from("family,sem_mean,sent_mean,pairs\n");
    for (key, sem, sent, pairs) in grouped_means(cells, |c| Some(c.family.clone())) {
        fams_csv.push_str(&format!("{key},{},{},{pairs}\n", fmt3(sem), fmt3(sent)));
    }
    out.push(("families.csv".to_string(), fams_csv));

    let matrix = dimension_prompt_matrix(cells, 5);
    let mut matrix_csv = String::from("dimension,family,sem_mean,sent_mean,pairs\n");
    for cell in &matrix.cells {
        matrix_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.dimension,
            cell.family,
            fmt3(cell.sem_mean),
            fmt3(cell.sent_mean),
            cell.pairs
        ));
    }
    out.push(("dimension_family.csv".to_string(), matrix_csv));

    let mut extremes_csv = String::from("bucket,dimension,family,sem_mean,sent_mean,pairs\n");
    for (bucket, cells) in [("highest", &matrix.highest), ("lowest", &matrix.lowest)] {
        for cell in cells {
            extremes_csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                bucket,
                cell.dimension,
                cell.family,
                fmt3(cell.sem_mean),
                fmt3(cell.sent_mean),
                cell.pairs
            ));
        }
    }
    out.push(("interaction_extremes.csv".to_string(), extremes_csv));

    let mut batches_csv = String::from("batch,vendor,sem_mean,sent_mean,pairs\n");
    for (key, sem, sent, pairs) in
        grouped_means(cells, |c| Some(format!("{},{}", c.batch_id, c.vendor)))
    {
        batches_csv.push_str(&format!("{key},{},{},{pairs}\n", fmt3(sem), fmt3(sent)));
    }
    out.push(("batches.csv".to_string(), batches_csv));

    let mut controls_csv = String::from("condition,pairs,sem,sent,delta_sem,delta_sent\n");
    for row in control_summary(cells) {
        controls_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.condition,
            row.pairs,
            fmt3(row.sem),
            fmt3(row.sent),
            fmt3(row.delta_sem),
            fmt3(row.delta_sent),
        ));
    }
    out.push(("controls.csv".to_string(), controls_csv));

    // robustness baseline: the primary scorer against itself over matched cells
    let matched = cells
        .iter()
        .filter(|c| c.condition == ConditionKind::Main && c.valid && c.d_sem.is_some())
        .count();
    let sem_corr = metric_correlation(cells, cells, |c| c.d_sem);
    let sent_corr = metric_correlation(cells, cells, |c| c.sent_range);
    let mut corr_csv = String::from("variant,pairs,sem_corr,sent_corr\n");
    corr_csv.push_str(&format!(
        "tfidf_vader_primary,{matched},{},{}\n",
        sem_corr.map(|r| format!("{:.2}", round_half_even(r, 2))).unwrap_or_default(),
        sent_corr.map(|r| format!("{:.2}", round_half_even(r, 2))).unwrap_or_default(),
    ));
    out.push(("correlations.csv".to_string(), corr_csv));

    let coverage = coverage_report(cells, expected_per_article);
    let mut cov_articles = String::from("model,batch,news_id,valid,expected\n");
    for row in &coverage.articles {
        cov_articles.push_str(&format!(
            "{},{},{},{},{}\n",
            row.model_id, row.batch_id, row.news_id, row.valid, row.expected
        ));
    }
    out.push(("coverage_articles.csv".to_string(), cov_articles));

    let mut cov_batches = String::from("model,batch,valid,expected\n");
    for row in &coverage.batches {
        cov_batches.push_str(&format!(
            "{},{},{},{}\n",
            row.model_id, row.batch_id, row.valid, row.expected
        ));
    }
    cov_batches.push_str(&format!(
        "total,,{},{}\n",
        coverage.total_valid, coverage.total_expected
    ));
    out.push(("coverage_batches.csv".to_string(), cov_batches));

    out
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub manifest: RunManifest,
    pub coverage: CoverageReport,
    pub cells: Vec<ScoreCell>,
    pub counts: PlanCounts,
    pub warnings: Vec<String>,
}

/// Execute a full monitoring run from configuration.
pub fn execute_run(config: &RunConfig) -> Result<RunOutcome, Error> {
    config.validate()?;
    if config.models.is_empty() {
        return Err(Error::Config("no models configured".into()));
    }

    let taxonomy = match &config.taxonomy {
        Some(path) => Taxonomy::load(path)?,
        None => Taxonomy::bundled_default(),
    };
    let warnings = taxonomy.control_warnings();
    for warning in &warnings {
        log::warn!("{warning}");
    }

    let mut anchors = ingest_sources(config)?;
    for anchor in &mut anchors {
        anchor.topic_stratum = news::stratify_topic(anchor, &taxonomy.topic_rules);
    }

    let specs: Vec<ModelSpec> = config
        .models
        .iter()
        .map(|m| m.to_spec(Default::default()))
        .collect();

    let plan = expand_plan(&anchors, &taxonomy, config)?;

    let gateway = Gateway::new(GatewayConfig {
        parallelism: config.parallelism,
        ..GatewayConfig::default()
    });
    let results = gateway.run_all(&specs, &plan.instances, config.seed)?;

    let taxonomy_hash = taxonomy.content_hash();
    let run_id = config
        .run_id
        .clone()
        .unwrap_or_else(|| derive_run_id(config.seed, &taxonomy_hash, &specs, &anchors));

    let anchor_map: BTreeMap<String, &NewsAnchor> = anchors
        .iter()
        .map(|a| (a.news_id.clone(), a))
        .collect();
    let analyzer = SentimentAnalyzer::new();
    let bundles = assemble_bundles(&specs, &plan.instances, &results, &anchor_map);
    let cells = score_all(&run_id, &bundles, &analyzer);

    let scoring = ScoringConfig {
        bootstrap_seed: config.seed,
        ..ScoringConfig::default()
    };
    let expected_per_article = taxonomy.expansion_counts().scores_per_model_article;
    let summaries = build_summaries(&cells, expected_per_article, &scoring);
    let coverage = coverage_report(&cells, expected_per_article);

    let artifacts = RunArtifacts {
        run_id: &run_id,
        seed: config.seed,
        taxonomy_hash,
        model_specs: &specs,
        decoding_defaults: Default::default(),
        scoring,
        anchors: &anchors,
        prompts: &plan.instances,
        results: &results,
        cells: &cells,
        summaries: &summaries,
        redistribute_text: config.redistribute_text,
    };
    let manifest = store::write_run(&config.output_root, &artifacts)?;

    Ok(RunOutcome {
        run_dir: config.output_root.join(&run_id),
        manifest,
        coverage,
        cells,
        counts: plan.counts,
        warnings,
    })
}

/// Rebuild summary tables for an existing run directory after verifying the
/// manifest digests. Returns the summaries; callers decide where they go.
pub fn rebuild_report(run_dir: &std::path::Path) -> Result<Vec<(String, String)>, Error> {
    let manifest = store::verify_run(run_dir)?;
    let scores_digest = manifest.files.get(store::SCORES_FILE).cloned();
    let mut cells = store::load_score_table(
        &run_dir.join(store::SCORES_FILE),
        scores_digest.as_deref(),
    )?;
    let anchors = store::load_news(run_dir)?;
    let strata: BTreeMap<String, TopicStratum> = anchors
        .iter()
        .map(|a| (a.news_id.clone(), a.topic_stratum))
        .collect();
    store::apply_strata(&mut cells, &strata);

    // the expected-scalar budget is recoverable from the cell shape: count
    // distinct (dimension, family) pairs under the main condition, two
    // headline scalars each
    let pairs: std::collections::BTreeSet<(String, String)> = cells
        .iter()
        .filter(|c| c.condition == ConditionKind::Main)
        .filter_map(|c| c.dimension.clone().map(|d| (d, c.family.clone())))
        .collect();
    let expected_per_article = 2 * pairs.len();
    Ok(build_summaries(&cells, expected_per_article, &manifest.scoring))
}
