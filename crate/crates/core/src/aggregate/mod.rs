//! Roll-ups from score cells to vendor, model, dimension, prompt-family,
//! interaction, batch, control-delta, and robustness summaries.
//!
//! Aggregation is a pure fold over immutable cells: means ignore missing
//! cells (they surface through coverage counts instead), vendors average
//! model-level means with equal weights, and every ranking breaks ties
//! lexicographically so reports are deterministic.

pub mod stats;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::news::TopicStratum;
use crate::prompt::ConditionKind;

pub use stats::{
    bootstrap_interval, mean, pearson, round_half_even, sample_std, t_interval, MeanAccumulator,
};

/// The scalar audit outputs of one bundle, keyed by its cell coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub run_id: String,
    pub batch_id: String,
    pub news_id: String,
    pub vendor: String,
    pub model_id: String,
    /// Empty for identity-free cells.
    pub dimension: Option<String>,
    pub family: String,
    pub condition: ConditionKind,
    pub topic_stratum: TopicStratum,
    pub d_sem: Option<f64>,
    pub n_sem: Option<f64>,
    pub s_cfs: Option<f64>,
    pub silhouette: Option<f64>,
    pub sent_mean: Option<f64>,
    pub sent_range: Option<f64>,
    pub sent_mad: Option<f64>,
    pub sent_silhouette: Option<f64>,
    pub n_identities: usize,
    pub valid: bool,
}

impl ScoreCell {
    /// Identity of the bundle this cell scores.
    pub fn key(&self) -> CellKey {
        CellKey {
            model_id: self.model_id.clone(),
            news_id: self.news_id.clone(),
            dimension: self.dimension.clone(),
            family: self.family.clone(),
            condition: self.condition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub model_id: String,
    pub news_id: String,
    pub dimension: Option<String>,
    pub family: String,
    pub condition: ConditionKind,
}

fn main_valid(cells: &[ScoreCell]) -> impl Iterator<Item = &ScoreCell> {
    cells
        .iter()
        .filter(|c| c.condition == ConditionKind::Main && c.valid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub vendor: String,
    pub sem_mean: Option<f64>,
    pub sent_mean: Option<f64>,
    /// Sample std of per-batch mean semantic scores; `None` below two batches.
    pub std_news: Option<f64>,
    /// Number of valid headline scalars (semantic + sentiment) averaged.
    pub valid_scores: usize,
}

impl ModelSummary {
    pub fn has_data(&self) -> bool {
        self.valid_scores > 0
    }
}

/// Mean over a model's valid main-condition cells. Missing cells are ignored
/// in the means and surface through `valid_scores` / coverage instead.
pub fn model_means(cells: &[ScoreCell], model_id: &str) -> ModelSummary {
    let mut vendor = String::new();
    let mut sem = MeanAccumulator::default();
    let mut sent = MeanAccumulator::default();
    for cell in main_valid(cells).filter(|c| c.model_id == model_id) {
        vendor = cell.vendor.clone();
        if let Some(d) = cell.d_sem {
            sem.push(d);
        }
        if let Some(r) = cell.sent_range {
            sent.push(r);
        }
    }
    if vendor.is_empty() {
        if let Some(cell) = cells.iter().find(|c| c.model_id == model_id) {
            vendor = cell.vendor.clone();
        }
    }
    ModelSummary {
        model_id: model_id.to_string(),
        vendor,
        sem_mean: sem.mean(),
        sent_mean: sent.mean(),
        std_news: std_news(cells, model_id),
        valid_scores: sem.count + sent.count,
    }
}

/// Sample standard deviation of per-batch mean semantic scores for one model
/// (per-batch mean over dimensions and families). `None` below two batches.
pub fn std_news(cells: &[ScoreCell], model_id: &str) -> Option<f64> {
    let mut per_batch: BTreeMap<&str, MeanAccumulator> = BTreeMap::new();
    for cell in main_valid(cells).filter(|c| c.model_id == model_id) {
        if let Some(d) = cell.d_sem {
            per_batch.entry(cell.batch_id.as_str()).or_default().push(d);
        }
    }
    let batch_means: Vec<f64> = per_batch.values().filter_map(|a| a.mean()).collect();
    sample_std(&batch_means)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VendorSummary {
    pub vendor: String,
    pub model_count: usize,
    pub sem_mean: Option<f64>,
    /// 95% t-interval over model-level means, not cells.
    pub sem_ci_95: Option<(f64, f64)>,
    pub sent_mean: Option<f64>,
    pub sent_ci_95: Option<(f64, f64)>,
}

/// Equal-weight vendor aggregation over model-level means. Models without
/// data are excluded entirely.
pub fn vendor_summaries(models: &[ModelSummary]) -> Vec<VendorSummary> {
    let mut by_vendor: BTreeMap<&str, Vec<&ModelSummary>> = BTreeMap::new();
    for model in models.iter().filter(|m| m.has_data()) {
        by_vendor.entry(model.vendor.as_str()).or_default().push(model);
    }
    by_vendor
        .into_iter()
        .map(|(vendor, models)| {
            let sems: Vec<f64> = models.iter().filter_map(|m| m.sem_mean).collect();
            let sents: Vec<f64> = models.iter().filter_map(|m| m.sent_mean).collect();
            VendorSummary {
                vendor: vendor.to_string(),
                model_count: models.len(),
                sem_mean: mean(&sems),
                sem_ci_95: t_interval(&sems, 0.95),
                sent_mean: mean(&sents),
                sent_ci_95: t_interval(&sents, 0.95),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFamilyCell {
    pub dimension: String,
    pub family: String,
    pub sem_mean: Option<f64>,
    pub sent_mean: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFamilyMatrix {
    /// One entry per observed (dimension, family), ordered lexicographically.
    pub cells: Vec<DimensionFamilyCell>,
    /// Top interactions by semantic mean, descending, ties lexicographic.
    pub highest: Vec<DimensionFamilyCell>,
    /// Bottom interactions by semantic mean, ascending, ties lexicographic.
    pub lowest: Vec<DimensionFamilyCell>,
}

/// Per-(dimension, family) means with ranked extremes.
pub fn dimension_prompt_matrix(cells: &[ScoreCell], extremes: usize) -> DimensionFamilyMatrix {
    let mut sem: BTreeMap<(String, String), MeanAccumulator> = BTreeMap::new();
    let mut sent: BTreeMap<(String, String), MeanAccumulator> = BTreeMap::new();
    let mut pairs: BTreeMap<(String, String), usize> = BTreeMap::new();
    for cell in main_valid(cells) {
        let Some(dimension) = cell.dimension.clone() else {
            continue;
        };
        let key = (dimension, cell.family.clone());
        if let Some(d) = cell.d_sem {
            sem.entry(key.clone()).or_default().push(d);
        }
        if let Some(r) = cell.sent_range {
            sent.entry(key.clone()).or_default().push(r);
        }
        *pairs.entry(key).or_default() += 1;
    }
    let keys: BTreeSet<(String, String)> = sem.keys().chain(sent.keys()).cloned().collect();
    let cells_out: Vec<DimensionFamilyCell> = keys
        .into_iter()
        .map(|key| DimensionFamilyCell {
            sem_mean: sem.get(&key).and_then(|a| a.mean()),
            sent_mean: sent.get(&key).and_then(|a| a.mean()),
            pairs: pairs.get(&key).copied().unwrap_or(0),
            dimension: key.0,
            family: key.1,
        })
        .collect();

    let mut ranked: Vec<&DimensionFamilyCell> =
        cells_out.iter().filter(|c| c.sem_mean.is_some()).collect();
    // descending by mean, lexicographic (dimension, family) tie-break
    ranked.sort_by(|a, b| {
        b.sem_mean
            .partial_cmp(&a.sem_mean)
            .unwrap()
            .then_with(|| (&a.dimension, &a.family).cmp(&(&b.dimension, &b.family)))
    });
    let highest: Vec<DimensionFamilyCell> = ranked.iter().take(extremes).map(|c| (*c).clone()).collect();
    ranked.sort_by(|a, b| {
        a.sem_mean
            .partial_cmp(&b.sem_mean)
            .unwrap()
            .then_with(|| (&a.dimension, &a.family).cmp(&(&b.dimension, &b.family)))
    });
    let lowest: Vec<DimensionFamilyCell> = ranked.iter().take(extremes).map(|c| (*c).clone()).collect();

    DimensionFamilyMatrix {
        cells: cells_out,
        highest,
        lowest,
    }
}

/// Marginal means over one grouping of the main cells (dimension, family,
/// batch-vendor, ...).
pub fn grouped_means<F>(cells: &[ScoreCell], group: F) -> Vec<(String, Option<f64>, Option<f64>, usize)>
where
    F: Fn(&ScoreCell) -> Option<String>,
{
    let mut sem: BTreeMap<String, MeanAccumulator> = BTreeMap::new();
    let mut sent: BTreeMap<String, MeanAccumulator> = BTreeMap::new();
    let mut pairs: BTreeMap<String, usize> = BTreeMap::new();
    for cell in main_valid(cells) {
        let Some(key) = group(cell) else { continue };
        if let Some(d) = cell.d_sem {
            sem.entry(key.clone()).or_default().push(d);
        }
        if let Some(r) = cell.sent_range {
            sent.entry(key.clone()).or_default().push(r);
        }
        *pairs.entry(key).or_default() += 1;
    }
    let keys: BTreeSet<String> = sem.keys().chain(sent.keys()).cloned().collect();
    keys.into_iter()
        .map(|key| {
            (
                key.clone(),
                sem.get(&key).and_then(|a| a.mean()),
                sent.get(&key).and_then(|a| a.mean()),
                pairs.get(&key).copied().unwrap_or(0),
            )
        })
        .collect()
}

/// Mean-level comparison of main cells against one control condition.
/// Positive deltas mean identity conditioning raises variation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlDelta {
    pub condition: String,
    pub pairs: usize,
    pub sem: Option<f64>,
    pub sent: Option<f64>,
    pub delta_sem: Option<f64>,
    pub delta_sent: Option<f64>,
}

/// `delta = mean(main) - mean(control)` for the semantic and sentiment
/// channels. `None` components when a side is empty.
pub fn control_delta(
    main_cells: &[&ScoreCell],
    control_cells: &[&ScoreCell],
    condition: &str,
) -> Option<ControlDelta> {
    if main_cells.is_empty() || control_cells.is_empty() {
        return None;
    }
    let collect = |cells: &[&ScoreCell], f: fn(&ScoreCell) -> Option<f64>| -> Vec<f64> {
        cells.iter().filter(|c| c.valid).filter_map(|c| f(c)).collect()
    };
    let main_sem = mean(&collect(main_cells, |c| c.d_sem));
    let main_sent = mean(&collect(main_cells, |c| c.sent_range));
    let ctrl_sem = mean(&collect(control_cells, |c| c.d_sem));
    let ctrl_sent = mean(&collect(control_cells, |c| c.sent_range));
    Some(ControlDelta {
        condition: condition.to_string(),
        pairs: control_cells.iter().filter(|c| c.valid).count(),
        sem: ctrl_sem,
        sent: ctrl_sent,
        delta_sem: main_sem.zip(ctrl_sem).map(|(m, c)| m - c),
        delta_sent: main_sent.zip(ctrl_sent).map(|(m, c)| m - c),
    })
}

/// Pearson correlation between two scorers over matched cells. Cells join on
/// (model, news, dimension, family, condition); `metric` selects the channel.
pub fn metric_correlation<F>(cells_a: &[ScoreCell], cells_b: &[ScoreCell], metric: F) -> Option<f64>
where
    F: Fn(&ScoreCell) -> Option<f64>,
{
    let index_b: BTreeMap<CellKey, f64> = cells_b
        .iter()
        .filter(|c| c.valid)
        .filter_map(|c| metric(c).map(|v| (c.key(), v)))
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for cell in cells_a.iter().filter(|c| c.valid) {
        if let (Some(x), Some(y)) = (metric(cell), index_b.get(&cell.key())) {
            xs.push(x);
            ys.push(*y);
        }
    }
    pearson(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub model_id: String,
    pub batch_id: String,
    pub news_id: String,
    pub valid: usize,
    pub expected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    /// Per (model, article) rows.
    pub articles: Vec<CoverageRow>,
    /// Per (model, batch) roll-ups; `news_id` empty.
    pub batches: Vec<CoverageRow>,
    pub total_valid: usize,
    pub total_expected: usize,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        if self.total_expected == 0 {
            return 1.0;
        }
        self.total_valid as f64 / self.total_expected as f64
    }
}

/// Valid-versus-expected headline-scalar accounting under the main
/// condition. `expected_per_article` is the taxonomy's scalar budget
/// (2 * |D| * |C|); a cell contributes one count per present headline
/// metric (semantic, sentiment).
pub fn coverage_report(cells: &[ScoreCell], expected_per_article: usize) -> CoverageReport {
    let mut articles: BTreeMap<(String, String, String), usize> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(String, String, String)> = BTreeSet::new();
    for cell in cells.iter().filter(|c| c.condition == ConditionKind::Main) {
        let key = (
            cell.model_id.clone(),
            cell.batch_id.clone(),
            cell.news_id.clone(),
        );
        seen_pairs.insert(key.clone());
        if cell.valid {
            let count = articles.entry(key).or_default();
            if cell.d_sem.is_some() {
                *count += 1;
            }
            if cell.sent_range.is_some() {
                *count += 1;
            }
        }
    }
    let article_rows: Vec<CoverageRow> = seen_pairs
        .iter()
        .map(|(model_id, batch_id, news_id)| CoverageRow {
            model_id: model_id.clone(),
            batch_id: batch_id.clone(),
            news_id: news_id.clone(),
            valid: articles.get(&(model_id.clone(), batch_id.clone(), news_id.clone())).copied().unwrap_or(0),
            expected: expected_per_article,
        })
        .collect();

    let mut batch_rows: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for row in &article_rows {
        let entry = batch_rows
            .entry((row.model_id.clone(), row.batch_id.clone()))
            .or_default();
        entry.0 += row.valid;
        entry.1 += row.expected;
    }
    let batches: Vec<CoverageRow> = batch_rows
        .into_iter()
        .map(|((model_id, batch_id), (valid, expected))| CoverageRow {
            model_id,
            batch_id,
            news_id: String::new(),
            valid,
            expected,
        })
        .collect();

    let total_valid = article_rows.iter().map(|r| r.valid).sum();
    let total_expected = article_rows.iter().map(|r| r.expected).sum();
    CoverageReport {
        articles: article_rows,
        batches,
        total_valid,
        total_expected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cell(
        model: &str,
        vendor: &str,
        batch: &str,
        news: &str,
        dimension: &str,
        family: &str,
        condition: ConditionKind,
        d_sem: Option<f64>,
        sent_range: Option<f64>,
    ) -> ScoreCell {
        ScoreCell {
            run_id: "r1".into(),
            batch_id: batch.into(),
            news_id: news.into(),
            vendor: vendor.into(),
            model_id: model.into(),
            dimension: Some(dimension.into()),
            family: family.into(),
            condition,
            topic_stratum: TopicStratum::Unlabeled,
            d_sem,
            n_sem: None,
            s_cfs: None,
            silhouette: None,
            sent_mean: sent_range.map(|r| r / 2.0),
            sent_range,
            sent_mad: sent_range.map(|r| r / 4.0),
            sent_silhouette: None,
            n_identities: 7,
            valid: true,
        }
    }

    #[test]
    fn constant_cells_average_to_constant() {
        let cells: Vec<ScoreCell> = (0..5)
            .map(|i| {
                cell(
                    "m1",
                    "v",
                    "b1",
                    &format!("n{i}"),
                    "D",
                    "F",
                    ConditionKind::Main,
                    Some(0.05),
                    Some(0.4),
                )
            })
            .collect();
        let summary = model_means(&cells, "m1");
        assert_eq!(summary.sem_mean, Some(0.05));
        assert_eq!(summary.sent_mean, Some(0.4));
        assert_eq!(summary.valid_scores, 10);
    }

    #[test]
    fn missing_cells_ignored_in_means_but_counted() {
        let mut cells = vec![
            cell("m1", "v", "b1", "n1", "D", "F1", ConditionKind::Main, Some(0.1), Some(0.2)),
            cell("m1", "v", "b1", "n1", "D", "F2", ConditionKind::Main, None, Some(0.4)),
        ];
        cells[1].valid = true;
        let summary = model_means(&cells, "m1");
        assert_eq!(summary.sem_mean, Some(0.1));
        assert_eq!(summary.sent_mean, Some(0.3));
        assert_eq!(summary.valid_scores, 3);
    }

    #[test]
    fn no_data_model_is_flagged() {
        let cells = vec![cell(
            "other",
            "v",
            "b1",
            "n1",
            "D",
            "F",
            ConditionKind::Main,
            Some(0.1),
            Some(0.2),
        )];
        let summary = model_means(&cells, "m-silent");
        assert!(!summary.has_data());
        assert_eq!(summary.sem_mean, None);
    }

    #[test]
    fn std_news_two_batches_closed_form() {
        let cells = vec![
            cell("m1", "v", "b1", "n1", "D", "F", ConditionKind::Main, Some(0.03), None),
            cell("m1", "v", "b2", "n2", "D", "F", ConditionKind::Main, Some(0.05), None),
        ];
        let s = std_news(&cells, "m1").unwrap();
        assert!((s - 0.02 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!((s - 0.014142135623730951).abs() < 1e-12);
    }

    #[test]
    fn std_news_single_batch_unavailable() {
        let cells = vec![cell(
            "m1",
            "v",
            "b1",
            "n1",
            "D",
            "F",
            ConditionKind::Main,
            Some(0.03),
            None,
        )];
        assert_eq!(std_news(&cells, "m1"), None);
    }

    #[test]
    fn std_news_identical_batches_zero() {
        let cells = vec![
            cell("m1", "v", "b1", "n1", "D", "F", ConditionKind::Main, Some(0.04), None),
            cell("m1", "v", "b2", "n2", "D", "F", ConditionKind::Main, Some(0.04), None),
        ];
        assert_eq!(std_news(&cells, "m1"), Some(0.0));
    }

    #[test]
    fn vendor_mean_is_unweighted_over_models() {
        // model m1 has 4 cells at 0.02, m2 one cell at 0.06; vendor mean must
        // be (0.02 + 0.06) / 2, not cell-weighted
        let mut cells = Vec::new();
        for i in 0..4 {
            cells.push(cell(
                "m1",
                "v",
                "b1",
                &format!("n{i}"),
                "D",
                "F",
                ConditionKind::Main,
                Some(0.02),
                Some(0.2),
            ));
        }
        cells.push(cell("m2", "v", "b1", "n9", "D", "F", ConditionKind::Main, Some(0.06), Some(0.4)));
        let models = vec![model_means(&cells, "m1"), model_means(&cells, "m2")];
        let vendors = vendor_summaries(&models);
        assert_eq!(vendors.len(), 1);
        assert!((vendors[0].sem_mean.unwrap() - 0.04).abs() < 1e-12);
        assert_eq!(vendors[0].model_count, 2);
    }

    #[test]
    fn control_delta_sign_convention() {
        let main = vec![cell("m", "v", "b", "n", "D", "F", ConditionKind::Main, Some(0.050), Some(0.5))];
        let ctrl = vec![cell("m", "v", "b", "n", "D", "F", ConditionKind::IdentityFree, Some(0.018), Some(0.4))];
        let main_refs: Vec<&ScoreCell> = main.iter().collect();
        let ctrl_refs: Vec<&ScoreCell> = ctrl.iter().collect();
        let delta = control_delta(&main_refs, &ctrl_refs, "identity_free").unwrap();
        assert!((delta.delta_sem.unwrap() - 0.032).abs() < 1e-12);
        assert_eq!(delta.pairs, 1);
        assert_eq!(delta.sem, Some(0.018));
    }

    #[test]
    fn control_delta_empty_side_unavailable() {
        let main = vec![cell("m", "v", "b", "n", "D", "F", ConditionKind::Main, Some(0.05), None)];
        let main_refs: Vec<&ScoreCell> = main.iter().collect();
        assert!(control_delta(&main_refs, &[], "identity_free").is_none());
    }

    #[test]
    fn identical_scorers_correlate_perfectly() {
        let cells: Vec<ScoreCell> = (0..6)
            .map(|i| {
                cell(
                    "m",
                    "v",
                    "b",
                    &format!("n{i}"),
                    "D",
                    "F",
                    ConditionKind::Main,
                    Some(0.01 * (i + 1) as f64),
                    None,
                )
            })
            .collect();
        let r = metric_correlation(&cells, &cells, |c| c.d_sem).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anticorrelated_scorers() {
        let a: Vec<ScoreCell> = (0..5)
            .map(|i| {
                cell("m", "v", "b", &format!("n{i}"), "D", "F", ConditionKind::Main, Some(i as f64), None)
            })
            .collect();
        let b: Vec<ScoreCell> = (0..5)
            .map(|i| {
                cell("m", "v", "b", &format!("n{i}"), "D", "F", ConditionKind::Main, Some(-(i as f64)), None)
            })
            .collect();
        let r = metric_correlation(&a, &b, |c| c.d_sem).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_extremes_rank_with_lexicographic_ties() {
        let cells = vec![
            cell("m", "v", "b", "n", "Geo", "Policy", ConditionKind::Main, Some(0.09), Some(0.5)),
            cell("m", "v", "b", "n", "Rel", "World", ConditionKind::Main, Some(0.02), Some(0.5)),
            cell("m", "v", "b", "n", "Gen", "Policy", ConditionKind::Main, Some(0.02), Some(0.5)),
        ];
        let matrix = dimension_prompt_matrix(&cells, 2);
        assert_eq!(matrix.highest[0].dimension, "Geo");
        // tie at 0.02 resolves lexicographically: Gen before Rel
        assert_eq!(matrix.lowest[0].dimension, "Gen");
        assert_eq!(matrix.lowest[1].dimension, "Rel");
    }

    #[test]
    fn coverage_counts_valid_headline_scalars() {
        let mut cells = Vec::new();
        for f in 0..3 {
            cells.push(cell(
                "m",
                "v",
                "b1",
                "n1",
                "D",
                &format!("F{f}"),
                ConditionKind::Main,
                Some(0.1),
                Some(0.2),
            ));
        }
        // a bundle that lost its semantic channel
        cells.push(cell("m", "v", "b1", "n1", "D", "F3", ConditionKind::Main, None, Some(0.2)));
        // an entirely invalid bundle
        let mut dead = cell("m", "v", "b1", "n1", "D", "F4", ConditionKind::Main, None, None);
        dead.valid = false;
        cells.push(dead);
        let report = coverage_report(&cells, 10);
        assert_eq!(report.articles.len(), 1);
        assert_eq!(report.articles[0].valid, 7);
        assert_eq!(report.articles[0].expected, 10);
        assert_eq!(report.total_valid, 7);
        assert!(report.fraction() > 0.69 && report.fraction() < 0.71);
    }

    #[test]
    fn aggregation_invariant_to_cell_order() {
        let mut cells: Vec<ScoreCell> = (0..20)
            .map(|i| {
                cell(
                    "m",
                    "v",
                    &format!("b{}", i % 3),
                    &format!("n{i}"),
                    "D",
                    "F",
                    ConditionKind::Main,
                    Some((i as f64).sin().abs() / 10.0),
                    Some((i as f64).cos().abs() / 2.0),
                )
            })
            .collect();
        let forward = model_means(&cells, "m");
        cells.reverse();
        let backward = model_means(&cells, "m");
        assert!((forward.sem_mean.unwrap() - backward.sem_mean.unwrap()).abs() < 1e-12);
        assert!((forward.std_news.unwrap() - backward.std_news.unwrap()).abs() < 1e-12);
    }
}
