//! Run configuration: news sources, taxonomy, model roster, control
//! conditions, and reproducibility knobs. Loaded from TOML; the CLI overlays
//! a few flags on top.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::Error;
use crate::gateway::{DecodingParams, ModelSpec, DEFAULT_SYSTEM_PROMPT};

fn default_true() -> bool {
    true
}

fn default_seed() -> u64 {
    42
}

fn default_parallelism() -> usize {
    4
}

fn default_coverage_threshold() -> f64 {
    0.9
}

fn default_items_per_batch() -> usize {
    3
}

fn default_identity_free_samples() -> u32 {
    2
}

fn default_output_root() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, Deserialize)]
pub struct FeedSource {
    pub url: String,
    pub source: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RepeatConfig {
    /// Generations per sampled cell, including the main one.
    pub r: u32,
    /// Fraction of main cells that receive repeats.
    pub fraction: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ControlsConfig {
    #[serde(default = "default_true")]
    pub identity_free: bool,
    #[serde(default = "default_true")]
    pub random_label: bool,
    #[serde(default = "default_true")]
    pub paraphrase: bool,
    #[serde(default)]
    pub repeats: Option<RepeatConfig>,
    /// Generations per identity-free prompt (needs >= 2 to score the
    /// identity-free bundles).
    #[serde(default = "default_identity_free_samples")]
    pub identity_free_samples: u32,
}

impl Default for ControlsConfig {
    fn default() -> Self {
        ControlsConfig {
            identity_free: true,
            random_label: true,
            paraphrase: true,
            repeats: Some(RepeatConfig {
                r: 2,
                fraction: 0.25,
            }),
            identity_free_samples: 2,
        }
    }
}

impl ControlsConfig {
    pub fn none() -> Self {
        ControlsConfig {
            identity_free: false,
            random_label: false,
            paraphrase: false,
            repeats: None,
            identity_free_samples: 2,
        }
    }

    /// Parse a CLI controls selector: `all`, `none`, or a comma list of
    /// `identity_free,random_label,paraphrase,repeats`.
    pub fn from_selector(selector: &str) -> Result<Self, Error> {
        match selector {
            "all" => Ok(ControlsConfig::default()),
            "none" => Ok(ControlsConfig::none()),
            list => {
                let mut controls = ControlsConfig::none();
                for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match item {
                        "identity_free" => controls.identity_free = true,
                        "random_label" => controls.random_label = true,
                        "paraphrase" => controls.paraphrase = true,
                        "repeats" => {
                            controls.repeats = Some(RepeatConfig {
                                r: 2,
                                fraction: 0.25,
                            })
                        }
                        other => {
                            return Err(Error::Config(format!(
                                "unknown control condition {other:?}"
                            )))
                        }
                    }
                }
                Ok(controls)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelConfig {
    pub vendor: String,
    pub model_id: String,
    /// `mock:<profile>` or an HTTP endpoint URL.
    pub endpoint: String,
    #[serde(default)]
    pub protocol: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub top_p: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub seed: Option<i64>,
    #[serde(default)]
    pub system_prompt: Option<String>,
}

impl ModelConfig {
    pub fn to_spec(&self, defaults: DecodingParams) -> ModelSpec {
        ModelSpec {
            vendor: self.vendor.clone(),
            model_id: self.model_id.clone(),
            endpoint: self.endpoint.clone(),
            access_date: chrono::Utc::now().date_naive(),
            decoding: DecodingParams {
                temperature: self.temperature.unwrap_or(defaults.temperature),
                top_p: self.top_p.unwrap_or(defaults.top_p),
                max_tokens: self.max_tokens.unwrap_or(defaults.max_tokens),
                seed: self.seed.or(defaults.seed),
            },
            system_prompt: self
                .system_prompt
                .clone()
                .unwrap_or_else(|| DEFAULT_SYSTEM_PROMPT.to_string()),
            protocol: self.protocol.clone(),
            api_key_env: self.api_key_env.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Taxonomy config path; bundled default when absent.
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    #[serde(default)]
    pub fixtures: Vec<PathBuf>,
    #[serde(default, rename = "feed")]
    pub feeds: Vec<FeedSource>,
    #[serde(default = "default_output_root")]
    pub output_root: PathBuf,
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_coverage_threshold")]
    pub coverage_threshold: f64,
    #[serde(default = "default_true")]
    pub redistribute_text: bool,
    /// Newest-first item cap per live feed poll; fixtures are taken whole.
    #[serde(default = "default_items_per_batch")]
    pub items_per_batch: usize,
    #[serde(default)]
    pub controls: ControlsConfig,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            taxonomy: None,
            fixtures: Vec::new(),
            feeds: Vec::new(),
            output_root: default_output_root(),
            run_id: None,
            seed: default_seed(),
            parallelism: default_parallelism(),
            coverage_threshold: default_coverage_threshold(),
            redistribute_text: true,
            items_per_batch: default_items_per_batch(),
            controls: ControlsConfig::default(),
            models: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let Some(repeats) = &self.controls.repeats {
            if repeats.fraction > 0.0 && repeats.r < 2 {
                return Err(Error::Config(
                    "controls.repeats.r must be >= 2 when fraction > 0".into(),
                ));
            }
            if !(0.0..=1.0).contains(&repeats.fraction) {
                return Err(Error::Config(
                    "controls.repeats.fraction must lie in [0, 1]".into(),
                ));
            }
        }
        if self.controls.identity_free && self.controls.identity_free_samples < 2 {
            return Err(Error::Config(
                "controls.identity_free_samples must be >= 2 (bundles need a pair)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return Err(Error::Config("coverage_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Replace the roster with a single mock model of the given profile.
    pub fn with_mock_roster(mut self, profile: &str) -> Result<Self, Error> {
        crate::gateway::mock::MockProfile::parse(profile)
            .ok_or_else(|| Error::Config(format!("unknown mock profile {profile:?}")))?;
        self.models = vec![ModelConfig {
            vendor: "mock".into(),
            model_id: format!("mock-{profile}"),
            endpoint: format!("mock:{profile}"),
            protocol: None,
            api_key_env: None,
            temperature: None,
            top_p: None,
            max_tokens: None,
            seed: None,
            system_prompt: None,
        }];
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: RunConfig = toml::from_str(
            r#"
            fixtures = ["fixtures/news.jsonl"]

            [[model]]
            vendor = "mock"
            model_id = "mock-echo"
            endpoint = "mock:echo_identity"
            "#,
        )
        .unwrap();
        config.validate().unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.parallelism, 4);
        assert!(config.controls.identity_free);
        assert_eq!(config.models.len(), 1);
        assert_eq!(config.items_per_batch, 3);
    }

    #[test]
    fn bad_repeat_config_rejected() {
        let config: RunConfig = toml::from_str(
            r#"
            [controls]
            repeats = { r = 1, fraction = 0.5 }
            "#,
        )
        .unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn controls_selector_parses() {
        let all = ControlsConfig::from_selector("all").unwrap();
        assert!(all.identity_free && all.random_label && all.paraphrase);
        assert!(all.repeats.is_some());
        let none = ControlsConfig::from_selector("none").unwrap();
        assert!(!none.identity_free && none.repeats.is_none());
        let some = ControlsConfig::from_selector("identity_free,repeats").unwrap();
        assert!(some.identity_free && !some.random_label);
        assert!(some.repeats.is_some());
        assert!(ControlsConfig::from_selector("bogus").is_err());
    }

    #[test]
    fn model_config_applies_decoding_defaults() {
        let model = ModelConfig {
            vendor: "openai".into(),
            model_id: "gpt-test".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            protocol: None,
            api_key_env: None,
            temperature: Some(0.7),
            top_p: None,
            max_tokens: None,
            seed: None,
            system_prompt: None,
        };
        let spec = model.to_spec(DecodingParams::default());
        assert_eq!(spec.decoding.temperature, 0.7);
        assert_eq!(spec.decoding.top_p, 1.0);
        assert_eq!(spec.decoding.max_tokens, 3000);
        assert_eq!(spec.system_prompt, DEFAULT_SYSTEM_PROMPT);
    }
}
