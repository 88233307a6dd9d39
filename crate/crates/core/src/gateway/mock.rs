//! Deterministic mock providers for offline runs and oracle tests.
//!
//! Every response is a pure function of (profile, prompt fields, seed):
//!
//! - `echo_identity`: the response embeds the identity tokens plus content
//!   words derived from the identity, so identity-conditioned bundles always
//!   disperse. Neutral "Group X" labels read as low-information audiences and
//!   get the label echoed without identity-specific content, which keeps
//!   label-only variation below real-identity variation.
//! - `identity_blind`: the response depends only on the article and family;
//!   every bundle collapses to zero dispersion and zero sentiment spread.
//! - `noisy`: identity-blind content plus seeded token jitter keyed on the
//!   prompt text and repeat index, giving a nonzero noise floor for the
//!   repeat control.

use crate::prompt::PromptInstance;
use crate::store::sha256_hex;

use super::{ModelSpec, Provider, ProviderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockProfile {
    EchoIdentity,
    IdentityBlind,
    Noisy,
}

impl MockProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            MockProfile::EchoIdentity => "echo_identity",
            MockProfile::IdentityBlind => "identity_blind",
            MockProfile::Noisy => "noisy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "echo_identity" => Some(MockProfile::EchoIdentity),
            "identity_blind" => Some(MockProfile::IdentityBlind),
            "noisy" => Some(MockProfile::Noisy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockProvider {
    profile: MockProfile,
    seed: u64,
}

const CONTENT_WORDS: &[&str] = &[
    "opportunity", "risk", "benefit", "concern", "growth", "strain", "support", "burden",
    "stability", "uncertainty", "gain", "loss", "hope", "worry", "progress", "setback",
    "relief", "pressure", "access", "barrier", "security", "disruption", "promise", "doubt",
    "improvement", "decline", "advantage", "hardship", "momentum", "friction", "confidence",
    "anxiety",
];

impl MockProvider {
    pub fn new(profile: MockProfile, seed: u64) -> Self {
        MockProvider { profile, seed }
    }

    fn words_for(key: &str, count: usize) -> Vec<&'static str> {
        let digest = sha256_hex(key.as_bytes());
        let bytes = hex::decode(&digest).expect("hex digest decodes");
        (0..count)
            .map(|i| CONTENT_WORDS[bytes[i] as usize % CONTENT_WORDS.len()])
            .collect()
    }

    fn base_text(news_id: &str, family: &str) -> String {
        let article = &news_id[..8.min(news_id.len())];
        let cue = family.to_lowercase();
        format!(
            "This article ({article}) matters in broadly similar ways for all readers. \
             Seen through {cue}, the report outlines what changed, who is involved, \
             and what is likely to follow."
        )
    }

    fn looks_like_neutral_label(identity: &str) -> bool {
        identity
            .strip_prefix("Group ")
            .map(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_uppercase()))
            .unwrap_or(false)
    }

    fn render(&self, prompt: &PromptInstance) -> String {
        let news = &prompt.news_id;
        let family = &prompt.family;
        match self.profile {
            MockProfile::IdentityBlind => Self::base_text(news, family),
            MockProfile::Noisy => {
                let jitter_key = format!(
                    "{}\x1f{}\x1f{}",
                    self.seed,
                    sha256_hex(prompt.text.as_bytes()),
                    prompt.repeat_index
                );
                let jitter = Self::words_for(&jitter_key, 2);
                format!(
                    "{} In this telling, {} and {} stand out.",
                    Self::base_text(news, family),
                    jitter[0],
                    jitter[1]
                )
            }
            MockProfile::EchoIdentity => match prompt.identity.as_deref() {
                None => Self::base_text(news, family),
                Some(identity) if Self::looks_like_neutral_label(identity) => {
                    let article = &news[..8.min(news.len())];
                    format!(
                        "As {identity}, this article ({article}) reads much as it would \
                         for anyone; {} still frames what the report means.",
                        family.to_lowercase()
                    )
                }
                Some(identity) => {
                    let article = &news[..8.min(news.len())];
                    let words = Self::words_for(&format!("identity\x1f{identity}"), 4);
                    format!(
                        "As {identity}, this article ({article}) lands differently: \
                         {} and {} shape the stakes, while {} and {} color what follows. \
                         For someone like me, {} comes first.",
                        words[0],
                        words[1],
                        words[2],
                        words[3],
                        family.to_lowercase()
                    )
                }
            },
        }
    }
}

impl Provider for MockProvider {
    fn generate(&self, _spec: &ModelSpec, prompt: &PromptInstance) -> Result<String, ProviderError> {
        Ok(self.render(prompt))
    }
}
