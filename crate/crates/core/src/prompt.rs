//! Prompt expansion: the main identity-conditioned plan plus the control
//! conditions (identity-free, random-label, paraphrase) and repeat schedules.
//!
//! Expansion is pure and deterministically ordered (dimension, identity,
//! family), so re-expanding the same anchor and taxonomy reproduces the same
//! instances with the same ids.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::news::NewsAnchor;
use crate::store::sha256_hex;
use crate::taxonomy::{render_identity_free, render_prompt, Taxonomy, TaxonomyError};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error(transparent)]
    Render(#[from] TaxonomyError),
    #[error("paraphrase control enabled but family {family:?} has no paraphrase template")]
    MissingParaphrase { family: String },
    #[error("repeat planning needs at least 2 generations per sampled cell, got {repeats}")]
    RepeatCountTooSmall { repeats: u32 },
    #[error("repeat sample fraction must lie in [0, 1], got {fraction}")]
    BadFraction { fraction: f64 },
}

/// Control condition of a prompt instance or response bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Main,
    IdentityFree,
    RandomLabel,
    Paraphrase,
    /// Extra generation of a main prompt; carries the main prompt text with
    /// `repeat_index > 0`.
    Repeat,
}

impl ConditionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKind::Main => "main",
            ConditionKind::IdentityFree => "identity_free",
            ConditionKind::RandomLabel => "random_label",
            ConditionKind::Paraphrase => "paraphrase",
            ConditionKind::Repeat => "repeat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "main" => Some(ConditionKind::Main),
            "identity_free" => Some(ConditionKind::IdentityFree),
            "random_label" => Some(ConditionKind::RandomLabel),
            "paraphrase" => Some(ConditionKind::Paraphrase),
            "repeat" => Some(ConditionKind::Repeat),
            _ => None,
        }
    }
}

/// One fully rendered prompt. `prompt_id` is a pure function of every other
/// field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub prompt_id: String,
    pub news_id: String,
    pub dimension: Option<String>,
    pub identity: Option<String>,
    pub family: String,
    pub condition: ConditionKind,
    pub repeat_index: u32,
    pub text: String,
}

fn prompt_id(
    news_id: &str,
    dimension: Option<&str>,
    identity: Option<&str>,
    family: &str,
    condition: ConditionKind,
    repeat_index: u32,
    text: &str,
) -> String {
    let canon = format!(
        "{news_id}\x1f{}\x1f{}\x1f{family}\x1f{}\x1f{repeat_index}\x1f{text}",
        dimension.unwrap_or(""),
        identity.unwrap_or(""),
        condition.as_str(),
    );
    sha256_hex(canon.as_bytes())[..16].to_string()
}

fn instance(
    anchor: &NewsAnchor,
    dimension: Option<&str>,
    identity: Option<&str>,
    family: &str,
    condition: ConditionKind,
    repeat_index: u32,
    text: String,
) -> PromptInstance {
    PromptInstance {
        prompt_id: prompt_id(
            &anchor.news_id,
            dimension,
            identity,
            family,
            condition,
            repeat_index,
            &text,
        ),
        news_id: anchor.news_id.clone(),
        dimension: dimension.map(str::to_string),
        identity: identity.map(str::to_string),
        family: family.to_string(),
        condition,
        repeat_index,
        text,
    }
}

/// One instance per (dimension, identity, family), in that order.
pub fn expand_main(anchor: &NewsAnchor, taxonomy: &Taxonomy) -> Vec<PromptInstance> {
    let anchor_text = anchor.anchor_text();
    let mut out = Vec::with_capacity(taxonomy.expansion_counts().prompts_per_model_article);
    for dim in &taxonomy.dimensions {
        for identity in &dim.identities {
            for family in &taxonomy.families {
                let text = render_prompt(&family.template, identity, &anchor_text)
                    .expect("non-empty anchor renders against validated template");
                out.push(instance(
                    anchor,
                    Some(&dim.name),
                    Some(identity),
                    &family.name,
                    ConditionKind::Main,
                    0,
                    text,
                ));
            }
        }
    }
    out
}

/// One instance per family with the identity clause removed.
pub fn expand_identity_free(
    anchor: &NewsAnchor,
    taxonomy: &Taxonomy,
) -> Result<Vec<PromptInstance>, PromptError> {
    let anchor_text = anchor.anchor_text();
    let mut out = Vec::with_capacity(taxonomy.families.len());
    for family in &taxonomy.families {
        let text = render_identity_free(&family.template, &anchor_text)?;
        out.push(instance(
            anchor,
            None,
            None,
            &family.name,
            ConditionKind::IdentityFree,
            0,
            text,
        ));
    }
    Ok(out)
}

/// Neutral label for position `index` within a dimension: "Group A" ..
/// "Group Z", then "Group AA", "Group AB", ... for oversized dimensions.
pub fn group_label(index: usize) -> String {
    let mut n = index + 1; // bijective base-26
    let mut letters = Vec::new();
    while n > 0 {
        let rem = (n - 1) % 26;
        letters.push((b'A' + rem as u8) as char);
        n = (n - 1) / 26;
    }
    letters.reverse();
    format!("Group {}", letters.into_iter().collect::<String>())
}

/// Size-matched neutral-label expansion: per dimension and family, as many
/// instances as the dimension has identities, labeled alphabetically.
pub fn expand_random_label(anchor: &NewsAnchor, taxonomy: &Taxonomy) -> Vec<PromptInstance> {
    let anchor_text = anchor.anchor_text();
    let mut out = Vec::with_capacity(taxonomy.expansion_counts().prompts_per_model_article);
    for dim in &taxonomy.dimensions {
        for position in 0..dim.identities.len() {
            let label = group_label(position);
            for family in &taxonomy.families {
                let text = render_prompt(&family.template, &label, &anchor_text)
                    .expect("non-empty anchor renders against validated template");
                out.push(instance(
                    anchor,
                    Some(&dim.name),
                    Some(&label),
                    &family.name,
                    ConditionKind::RandomLabel,
                    0,
                    text,
                ));
            }
        }
    }
    out
}

/// Mirrors [`expand_main`] using the paraphrase templates.
pub fn expand_paraphrase(
    anchor: &NewsAnchor,
    taxonomy: &Taxonomy,
) -> Result<Vec<PromptInstance>, PromptError> {
    let anchor_text = anchor.anchor_text();
    let mut out = Vec::with_capacity(taxonomy.expansion_counts().prompts_per_model_article);
    for dim in &taxonomy.dimensions {
        for identity in &dim.identities {
            for family in &taxonomy.families {
                let template = taxonomy.paraphrase_for(&family.name).ok_or_else(|| {
                    PromptError::MissingParaphrase {
                        family: family.name.clone(),
                    }
                })?;
                let text = render_prompt(template, identity, &anchor_text)?;
                out.push(instance(
                    anchor,
                    Some(&dim.name),
                    Some(identity),
                    &family.name,
                    ConditionKind::Paraphrase,
                    0,
                    text,
                ));
            }
        }
    }
    Ok(out)
}

/// Clone an instance as an extra generation slot with a new repeat index,
/// keeping the condition and text. The id is re-derived. Used by the pipeline
/// to sample identity-free prompts more than once so their bundles can be
/// scored.
pub fn with_repeat_index(instance: &PromptInstance, repeat_index: u32) -> PromptInstance {
    PromptInstance {
        prompt_id: prompt_id(
            &instance.news_id,
            instance.dimension.as_deref(),
            instance.identity.as_deref(),
            &instance.family,
            instance.condition,
            repeat_index,
            &instance.text,
        ),
        repeat_index,
        ..instance.clone()
    }
}

/// Plan extra generations for a seeded-deterministic subset of main cells.
///
/// A cell is one (news, dimension, family) bundle; when a cell is sampled,
/// every identity instance in it gets `repeats - 1` extra instances with
/// `repeat_index` 1..R-1 carrying the same prompt text under
/// [`ConditionKind::Repeat`].
pub fn plan_repeats(
    instances: &[PromptInstance],
    repeats: u32,
    sample_fraction: f64,
    seed: u64,
) -> Result<Vec<PromptInstance>, PromptError> {
    if !(0.0..=1.0).contains(&sample_fraction) || sample_fraction.is_nan() {
        return Err(PromptError::BadFraction {
            fraction: sample_fraction,
        });
    }
    if sample_fraction == 0.0 {
        return Ok(Vec::new());
    }
    if repeats < 2 {
        return Err(PromptError::RepeatCountTooSmall { repeats });
    }

    let cells: BTreeSet<(String, String, String)> = instances
        .iter()
        .filter(|p| p.condition == ConditionKind::Main)
        .filter_map(|p| {
            p.dimension
                .as_ref()
                .map(|d| (p.news_id.clone(), d.clone(), p.family.clone()))
        })
        .collect();
    let mut ordered: Vec<&(String, String, String)> = cells.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ordered.shuffle(&mut rng);
    let take = ((sample_fraction * cells.len() as f64).round() as usize).min(cells.len());
    let sampled: BTreeSet<&(String, String, String)> = ordered.into_iter().take(take).collect();

    let mut out = Vec::new();
    for p in instances {
        if p.condition != ConditionKind::Main {
            continue;
        }
        let Some(dim) = p.dimension.as_ref() else {
            continue;
        };
        let key = (p.news_id.clone(), dim.clone(), p.family.clone());
        if !sampled.contains(&key) {
            continue;
        }
        for repeat_index in 1..repeats {
            out.push(PromptInstance {
                prompt_id: prompt_id(
                    &p.news_id,
                    p.dimension.as_deref(),
                    p.identity.as_deref(),
                    &p.family,
                    ConditionKind::Repeat,
                    repeat_index,
                    &p.text,
                ),
                condition: ConditionKind::Repeat,
                repeat_index,
                ..p.clone()
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::news::{news_id, TopicStratum};
    use chrono::Utc;

    fn anchor(headline: &str) -> NewsAnchor {
        NewsAnchor {
            news_id: news_id("test", headline, None),
            source: "test".into(),
            url: None,
            headline: headline.into(),
            description: None,
            retrieved_at: Utc::now(),
            published_at: None,
            batch_id: "b1".into(),
            topic_stratum: TopicStratum::Unlabeled,
        }
    }

    #[test]
    fn main_expansion_has_published_count_and_order() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("Jobs report released");
        let main = expand_main(&a, &tax);
        assert_eq!(main.len(), 294);
        // deterministic (dimension, identity, family) order
        assert_eq!(main[0].dimension.as_deref(), Some("Race / Ethnicity"));
        assert_eq!(main[0].identity.as_deref(), Some("Black American"));
        assert_eq!(main[0].family, "Impact");
        assert_eq!(main[1].family, "Significance");
        // geography has 6 identities, so exactly 6 instances per family there
        let geo_policy = main
            .iter()
            .filter(|p| {
                p.dimension.as_deref() == Some("Geography") && p.family == "Policy / Action"
            })
            .count();
        assert_eq!(geo_policy, 6);
    }

    #[test]
    fn unit_taxonomy_expands_to_one() {
        let tax = Taxonomy::from_toml_str(
            r#"
            [[dimension]]
            name = "Only"
            identities = ["Solo"]

            [[family]]
            name = "Ask"
            template = "I am {identity}. What does {article} mean?"
            "#,
        )
        .unwrap();
        assert_eq!(expand_main(&anchor("x"), &tax).len(), 1);
    }

    #[test]
    fn identity_free_one_per_family_no_identity() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("Jobs report released");
        let free = expand_identity_free(&a, &tax).unwrap();
        assert_eq!(free.len(), 7);
        for p in &free {
            assert_eq!(p.dimension, None);
            assert_eq!(p.identity, None);
            assert_eq!(p.condition, ConditionKind::IdentityFree);
        }
        let impact = free.iter().find(|p| p.family == "Impact").unwrap();
        assert_eq!(
            impact.text,
            "Tell me how this news article Jobs report released impacts me."
        );
    }

    #[test]
    fn no_real_identity_leaks_into_controls() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("0 plain numeric headline 1");
        let mut texts: Vec<String> = expand_identity_free(&a, &tax)
            .unwrap()
            .into_iter()
            .map(|p| p.text)
            .collect();
        texts.extend(expand_random_label(&a, &tax).into_iter().map(|p| p.text));
        for text in &texts {
            for identity in tax.all_identities() {
                assert!(
                    !text.contains(identity),
                    "text {text:?} leaks identity {identity:?}"
                );
            }
        }
    }

    #[test]
    fn random_label_is_size_matched_and_alphabetic() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("Jobs report released");
        let main = expand_main(&a, &tax);
        let random = expand_random_label(&a, &tax);
        assert_eq!(random.len(), main.len());
        let geo_impact: Vec<&str> = random
            .iter()
            .filter(|p| p.dimension.as_deref() == Some("Geography") && p.family == "Impact")
            .map(|p| p.identity.as_deref().unwrap())
            .collect();
        assert_eq!(
            geo_impact,
            vec!["Group A", "Group B", "Group C", "Group D", "Group E", "Group F"]
        );
        assert!(random[0].text.contains("Group A"));
    }

    #[test]
    fn group_labels_extend_past_z() {
        assert_eq!(group_label(0), "Group A");
        assert_eq!(group_label(25), "Group Z");
        assert_eq!(group_label(26), "Group AA");
        assert_eq!(group_label(27), "Group AB");
        assert_eq!(group_label(51), "Group AZ");
        assert_eq!(group_label(52), "Group BA");
    }

    #[test]
    fn paraphrase_mirrors_main_with_different_text() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("Jobs report released");
        let main = expand_main(&a, &tax);
        let para = expand_paraphrase(&a, &tax).unwrap();
        assert_eq!(para.len(), main.len());
        for (m, p) in main.iter().zip(&para) {
            assert_eq!(m.dimension, p.dimension);
            assert_eq!(m.identity, p.identity);
            assert_eq!(m.family, p.family);
            assert_ne!(m.text, p.text, "paraphrase identical for {}", m.family);
            assert_eq!(p.condition, ConditionKind::Paraphrase);
        }
    }

    #[test]
    fn paraphrase_missing_template_errors() {
        let tax = Taxonomy::from_toml_str(
            r#"
            [[dimension]]
            name = "Only"
            identities = ["Solo"]

            [[family]]
            name = "Ask"
            template = "I am {identity}. What does {article} mean?"
            "#,
        )
        .unwrap();
        let err = expand_paraphrase(&anchor("x"), &tax).unwrap_err();
        assert!(matches!(err, PromptError::MissingParaphrase { .. }));
    }

    #[test]
    fn repeats_full_fraction_r2_doubles_main() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("Jobs report released");
        let main = expand_main(&a, &tax);
        let extra = plan_repeats(&main, 2, 1.0, 7).unwrap();
        assert_eq!(extra.len(), 294);
        for p in &extra {
            assert_eq!(p.condition, ConditionKind::Repeat);
            assert_eq!(p.repeat_index, 1);
        }
    }

    #[test]
    fn repeats_zero_fraction_is_empty() {
        let tax = Taxonomy::bundled_default();
        let main = expand_main(&anchor("x y"), &tax);
        assert!(plan_repeats(&main, 3, 0.0, 7).unwrap().is_empty());
    }

    #[test]
    fn repeats_r1_with_positive_fraction_errors() {
        let tax = Taxonomy::bundled_default();
        let main = expand_main(&anchor("x y"), &tax);
        assert!(matches!(
            plan_repeats(&main, 1, 0.5, 7),
            Err(PromptError::RepeatCountTooSmall { .. })
        ));
    }

    #[test]
    fn repeat_sampling_is_seed_deterministic() {
        let tax = Taxonomy::bundled_default();
        let main = expand_main(&anchor("x y"), &tax);
        let a = plan_repeats(&main, 3, 0.25, 99).unwrap();
        let b = plan_repeats(&main, 3, 0.25, 99).unwrap();
        assert_eq!(a, b);
        let c = plan_repeats(&main, 3, 0.25, 100).unwrap();
        assert_ne!(
            a.iter().map(|p| &p.prompt_id).collect::<Vec<_>>(),
            c.iter().map(|p| &p.prompt_id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn reexpansion_yields_identical_ids_in_order() {
        let tax = Taxonomy::bundled_default();
        let a = anchor("stable ids");
        let first: Vec<String> = expand_main(&a, &tax).into_iter().map(|p| p.prompt_id).collect();
        let second: Vec<String> = expand_main(&a, &tax).into_iter().map(|p| p.prompt_id).collect();
        assert_eq!(first, second);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use crate::news::{news_id, TopicStratum};
    use crate::taxonomy::Taxonomy;
    use chrono::Utc;
    use proptest::prelude::*;

    fn toy_taxonomy(dims: &[(String, Vec<String>)], families: usize) -> Taxonomy {
        let mut toml = String::new();
        for (name, ids) in dims {
            toml.push_str(&format!("[[dimension]]\nname = \"{name}\"\nidentities = ["));
            for id in ids {
                toml.push_str(&format!("\"{id}\", "));
            }
            toml.push_str("]\n\n");
        }
        for f in 0..families {
            toml.push_str(&format!(
                "[[family]]\nname = \"F{f}\"\ntemplate = \"I am {{identity}}. Q{f} about {{article}}?\"\n\n"
            ));
        }
        Taxonomy::from_toml_str(&toml).unwrap()
    }

    proptest! {
        // prompts = |C| * sum_d |G_d|, checked by enumerating the actual expansion
        #[test]
        fn expansion_formula_matches_enumeration(
            dim_sizes in proptest::collection::vec(1usize..6, 1..4),
            families in 1usize..5,
        ) {
            let dims: Vec<(String, Vec<String>)> = dim_sizes
                .iter()
                .enumerate()
                .map(|(d, n)| {
                    (format!("D{d}"), (0..*n).map(|i| format!("d{d}i{i}")).collect())
                })
                .collect();
            let tax = toy_taxonomy(&dims, families);
            let anchor = NewsAnchor {
                news_id: news_id("p", "h", None),
                source: "p".into(),
                url: None,
                headline: "h".into(),
                description: None,
                retrieved_at: Utc::now(),
                published_at: None,
                batch_id: String::new(),
                topic_stratum: TopicStratum::Unlabeled,
            };
            let counts = tax.expansion_counts();
            let main = expand_main(&anchor, &tax);
            prop_assert_eq!(main.len(), counts.prompts_per_model_article);
            prop_assert_eq!(
                counts.prompts_per_model_article,
                families * dim_sizes.iter().sum::<usize>()
            );
            // size-matched controls
            prop_assert_eq!(expand_random_label(&anchor, &tax).len(), main.len());
            // ids unique
            let ids: std::collections::BTreeSet<&str> =
                main.iter().map(|p| p.prompt_id.as_str()).collect();
            prop_assert_eq!(ids.len(), main.len());
        }

        // rendering is injective in identity for fixed family and anchor
        #[test]
        fn rendering_injective_in_identity(
            a in "[a-z]{1,8}", b in "[a-z]{1,8}",
        ) {
            prop_assume!(a != b);
            let tax = Taxonomy::bundled_default();
            let template = &tax.families[0].template;
            let ra = crate::taxonomy::render_prompt(template, &a, "anchor").unwrap();
            let rb = crate::taxonomy::render_prompt(template, &b, "anchor").unwrap();
            prop_assert_ne!(ra, rb);
        }
    }
}
