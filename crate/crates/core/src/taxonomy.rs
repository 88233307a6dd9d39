//! Identity taxonomy, prompt-family templates, and template rendering.
//!
//! The taxonomy is data-driven: it loads from a TOML document (a default is
//! bundled with the crate) and is immutable after load, so it can be shared
//! read-only across workers. Templates carry two named placeholders,
//! `{identity}` and `{article}`, each required exactly once.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Placeholder for the audience identity in a prompt template.
pub const IDENTITY_PLACEHOLDER: &str = "{identity}";
/// Placeholder for the news anchor text in a prompt template.
pub const ARTICLE_PLACEHOLDER: &str = "{article}";

const DEFAULT_TAXONOMY_TOML: &str = include_str!("../data/default_taxonomy.toml");

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("taxonomy config failed to parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("dimension {dimension:?} has no identities")]
    EmptyDimension { dimension: String },
    #[error("dimension {dimension:?} lists identity {identity:?} more than once")]
    DuplicateIdentity { dimension: String, identity: String },
    #[error("dimension {name:?} appears more than once")]
    DuplicateDimension { name: String },
    #[error("family {name:?} appears more than once")]
    DuplicateFamily { name: String },
    #[error("family {family:?} template must contain {placeholder} exactly once")]
    BadPlaceholder { family: String, placeholder: &'static str },
    #[error("paraphrase entry {family:?} does not name a configured family")]
    UnknownParaphraseFamily { family: String },
    #[error("anchor text must be non-empty")]
    EmptyAnchor,
    #[error("taxonomy config has no dimensions or no families")]
    Empty,
    #[error("could not read taxonomy config {path:?}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct IdentityDimension {
    pub name: String,
    pub identities: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PromptFamily {
    pub name: String,
    pub template: String,
}

/// Keyword ruleset for topic stratification; see [`crate::news::stratify_topic`].
#[derive(Debug, Clone, Default, Deserialize)]
pub struct TopicRules {
    #[serde(default)]
    pub identity_relevant: Vec<String>,
    #[serde(default)]
    pub identity_neutral: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawTaxonomy {
    #[serde(rename = "dimension", default)]
    dimensions: Vec<IdentityDimension>,
    #[serde(rename = "family", default)]
    families: Vec<PromptFamily>,
    #[serde(default)]
    paraphrases: BTreeMap<String, String>,
    #[serde(default)]
    topic_rules: TopicRules,
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    pub dimensions: Vec<IdentityDimension>,
    pub families: Vec<PromptFamily>,
    /// Family name -> alternate (paraphrased) template.
    pub paraphrases: BTreeMap<String, String>,
    pub topic_rules: TopicRules,
}

/// Raw-prompt and scalar-score counts implied by a taxonomy for one
/// (model, article) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionCounts {
    /// One prompt per (identity, family): `|C| * sum_d |G_d|`.
    pub prompts_per_model_article: usize,
    /// Two headline scalars (semantic + sentiment) per (dimension, family):
    /// `2 * |C| * |D|`.
    pub scores_per_model_article: usize,
}

impl Taxonomy {
    pub fn from_toml_str(text: &str) -> Result<Self, TaxonomyError> {
        let raw: RawTaxonomy = toml::from_str(text)?;
        let taxonomy = Taxonomy {
            dimensions: raw.dimensions,
            families: raw.families,
            paraphrases: raw.paraphrases,
            topic_rules: raw.topic_rules,
        };
        taxonomy.validate()?;
        Ok(taxonomy)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path).map_err(|source| TaxonomyError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The taxonomy bundled with the crate.
    pub fn bundled_default() -> Self {
        Self::from_toml_str(DEFAULT_TAXONOMY_TOML)
            .expect("bundled default taxonomy must validate")
    }

    fn validate(&self) -> Result<(), TaxonomyError> {
        if self.dimensions.is_empty() || self.families.is_empty() {
            return Err(TaxonomyError::Empty);
        }
        let mut dim_names = BTreeSet::new();
        for dim in &self.dimensions {
            if !dim_names.insert(dim.name.as_str()) {
                return Err(TaxonomyError::DuplicateDimension {
                    name: dim.name.clone(),
                });
            }
            if dim.identities.is_empty() {
                return Err(TaxonomyError::EmptyDimension {
                    dimension: dim.name.clone(),
                });
            }
            let mut seen = BTreeSet::new();
            for identity in &dim.identities {
                if !seen.insert(identity.as_str()) {
                    return Err(TaxonomyError::DuplicateIdentity {
                        dimension: dim.name.clone(),
                        identity: identity.clone(),
                    });
                }
            }
        }
        let mut family_names = BTreeSet::new();
        for family in &self.families {
            if !family_names.insert(family.name.as_str()) {
                return Err(TaxonomyError::DuplicateFamily {
                    name: family.name.clone(),
                });
            }
            check_placeholder(&family.name, &family.template, IDENTITY_PLACEHOLDER)?;
            check_placeholder(&family.name, &family.template, ARTICLE_PLACEHOLDER)?;
        }
        for (family, template) in &self.paraphrases {
            if !family_names.contains(family.as_str()) {
                return Err(TaxonomyError::UnknownParaphraseFamily {
                    family: family.clone(),
                });
            }
            check_placeholder(family, template, IDENTITY_PLACEHOLDER)?;
            check_placeholder(family, template, ARTICLE_PLACEHOLDER)?;
        }
        Ok(())
    }

    /// Non-fatal control-condition warnings, e.g. a paraphrase identical to
    /// the canonical template (which makes the paraphrase control degenerate).
    pub fn control_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        for family in &self.families {
            if let Some(paraphrase) = self.paraphrases.get(&family.name) {
                if paraphrase == &family.template {
                    warnings.push(format!(
                        "paraphrase for family {:?} is identical to the canonical template; \
                         the paraphrase control will be degenerate",
                        family.name
                    ));
                }
            }
        }
        warnings
    }

    pub fn family(&self, name: &str) -> Option<&PromptFamily> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn paraphrase_for(&self, family: &str) -> Option<&str> {
        self.paraphrases.get(family).map(String::as_str)
    }

    pub fn identity_count(&self) -> usize {
        self.dimensions.iter().map(|d| d.identities.len()).sum()
    }

    /// Every identity label in the taxonomy, across all dimensions.
    pub fn all_identities(&self) -> impl Iterator<Item = &str> {
        self.dimensions
            .iter()
            .flat_map(|d| d.identities.iter().map(String::as_str))
    }

    pub fn expansion_counts(&self) -> ExpansionCounts {
        ExpansionCounts {
            prompts_per_model_article: self.families.len() * self.identity_count(),
            scores_per_model_article: 2 * self.families.len() * self.dimensions.len(),
        }
    }

    /// Hash of the canonical serialized form, recorded in run manifests.
    pub fn content_hash(&self) -> String {
        let mut canon = String::new();
        for dim in &self.dimensions {
            canon.push_str(&dim.name);
            canon.push('\x1f');
            for identity in &dim.identities {
                canon.push_str(identity);
                canon.push('\x1f');
            }
            canon.push('\x1e');
        }
        for family in &self.families {
            canon.push_str(&family.name);
            canon.push('\x1f');
            canon.push_str(&family.template);
            canon.push('\x1e');
        }
        for (family, template) in &self.paraphrases {
            canon.push_str(family);
            canon.push('\x1f');
            canon.push_str(template);
            canon.push('\x1e');
        }
        crate::store::sha256_hex(canon.as_bytes())
    }
}

fn check_placeholder(
    family: &str,
    template: &str,
    placeholder: &'static str,
) -> Result<(), TaxonomyError> {
    if template.matches(placeholder).count() != 1 {
        return Err(TaxonomyError::BadPlaceholder {
            family: family.to_string(),
            placeholder,
        });
    }
    Ok(())
}

/// Render a template by splicing `identity` and `anchor_text` into the
/// placeholder positions of the original template. Substituted values are
/// inserted literally; placeholder-like text inside them is never re-expanded.
pub fn render_prompt(
    template: &str,
    identity: &str,
    anchor_text: &str,
) -> Result<String, TaxonomyError> {
    if anchor_text.is_empty() {
        return Err(TaxonomyError::EmptyAnchor);
    }
    Ok(splice(
        template,
        &[(IDENTITY_PLACEHOLDER, identity), (ARTICLE_PLACEHOLDER, anchor_text)],
    ))
}

/// Render the identity-free variant: the leading sentence containing the
/// identity placeholder is dropped and the remainder rendered verbatim.
///
/// Every bundled template begins with an "I am {identity}." clause, so the
/// rule is implemented as: cut the template at the end of the first sentence
/// that contains the identity placeholder.
pub fn render_identity_free(template: &str, anchor_text: &str) -> Result<String, TaxonomyError> {
    if anchor_text.is_empty() {
        return Err(TaxonomyError::EmptyAnchor);
    }
    let idx = template
        .find(IDENTITY_PLACEHOLDER)
        .expect("validated template has identity placeholder");
    let after_identity = idx + IDENTITY_PLACEHOLDER.len();
    let rest = &template[after_identity..];
    let sentence_end = rest
        .find(['.', '?', '!'])
        .map(|p| after_identity + p + 1)
        .unwrap_or(template.len());
    let tail = template[sentence_end..].trim_start();
    Ok(splice(tail, &[(ARTICLE_PLACEHOLDER, anchor_text)]))
}

/// Single-pass splice: placeholder positions are located in the original
/// text only, so replacement values cannot trigger further expansion.
fn splice(template: &str, subs: &[(&str, &str)]) -> String {
    let mut positions: Vec<(usize, &str, &str)> = subs
        .iter()
        .filter_map(|(ph, val)| template.find(ph).map(|at| (at, *ph, *val)))
        .collect();
    positions.sort_by_key(|(at, _, _)| *at);
    let mut out = String::with_capacity(template.len());
    let mut cursor = 0;
    for (at, ph, val) in positions {
        out.push_str(&template[cursor..at]);
        out.push_str(val);
        cursor = at + ph.len();
    }
    out.push_str(&template[cursor..]);
    out
}
