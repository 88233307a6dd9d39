//! HTTP chat-completion adapters.
//!
//! Three wire protocols cover the hosted-vendor roster; which one a model
//! speaks is config-mapped (explicitly via `protocol`, or inferred from the
//! vendor name). Credentials come from environment variables only.

use std::time::Duration;

use serde_json::{json, Value};

use crate::prompt::PromptInstance;

use super::{ModelSpec, Provider, ProviderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireProtocol {
    OpenAiChat,
    AnthropicMessages,
    GoogleGenerateContent,
}

impl WireProtocol {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "openai_chat" => Some(WireProtocol::OpenAiChat),
            "anthropic_messages" => Some(WireProtocol::AnthropicMessages),
            "google_generate_content" => Some(WireProtocol::GoogleGenerateContent),
            _ => None,
        }
    }

    /// Fallback mapping when the config does not name a protocol.
    pub fn for_vendor(vendor: &str) -> Option<Self> {
        match vendor.to_lowercase().as_str() {
            "openai" => Some(WireProtocol::OpenAiChat),
            "anthropic" => Some(WireProtocol::AnthropicMessages),
            "google" => Some(WireProtocol::GoogleGenerateContent),
            _ => None,
        }
    }

    pub fn default_key_env(self) -> &'static str {
        match self {
            WireProtocol::OpenAiChat => "OPENAI_API_KEY",
            WireProtocol::AnthropicMessages => "ANTHROPIC_API_KEY",
            WireProtocol::GoogleGenerateContent => "GOOGLE_API_KEY",
        }
    }
}

/// Request body for one prompt under the given protocol.
pub fn build_request(protocol: WireProtocol, spec: &ModelSpec, prompt: &PromptInstance) -> Value {
    let d = &spec.decoding;
    match protocol {
        WireProtocol::OpenAiChat => {
            let mut body = json!({
                "model": spec.model_id,
                "messages": [
                    {"role": "system", "content": spec.system_prompt},
                    {"role": "user", "content": prompt.text},
                ],
                "temperature": d.temperature,
                "top_p": d.top_p,
                "max_tokens": d.max_tokens,
            });
            if let Some(seed) = d.seed {
                body["seed"] = json!(seed);
            }
            body
        }
        WireProtocol::AnthropicMessages => json!({
            "model": spec.model_id,
            "system": spec.system_prompt,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": d.temperature,
            "top_p": d.top_p,
            "max_tokens": d.max_tokens,
        }),
        WireProtocol::GoogleGenerateContent => {
            let mut config = json!({
                "temperature": d.temperature,
                "topP": d.top_p,
                "maxOutputTokens": d.max_tokens,
            });
            if let Some(seed) = d.seed {
                config["seed"] = json!(seed);
            }
            json!({
                "systemInstruction": {"parts": [{"text": spec.system_prompt}]},
                "contents": [{"role": "user", "parts": [{"text": prompt.text}]}],
                "generationConfig": config,
            })
        }
    }
}

/// Extract the response text from a provider body.
pub fn parse_response(protocol: WireProtocol, body: &str) -> Result<String, ProviderError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| ProviderError::Protocol(format!("response is not JSON: {e}")))?;
    let text = match protocol {
        WireProtocol::OpenAiChat => value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string),
        WireProtocol::AnthropicMessages => value["content"][0]["text"].as_str().map(str::to_string),
        WireProtocol::GoogleGenerateContent => {
            value["candidates"][0]["content"]["parts"].as_array().map(|parts| {
                parts
                    .iter()
                    .filter_map(|p| p["text"].as_str())
                    .collect::<Vec<_>>()
                    .join("")
            })
        }
    };
    text.ok_or_else(|| ProviderError::Protocol("response body missing text field".to_string()))
}

#[derive(Clone)]
pub struct HttpProvider {
    client: reqwest::blocking::Client,
}

impl Default for HttpProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpProvider {
    pub fn new() -> Self {
        HttpProvider {
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("client builds with static config"),
        }
    }

    fn resolve(spec: &ModelSpec) -> Result<(WireProtocol, String), ProviderError> {
        let protocol = spec
            .protocol
            .as_deref()
            .and_then(WireProtocol::parse)
            .or_else(|| WireProtocol::for_vendor(&spec.vendor))
            .ok_or_else(|| {
                ProviderError::Protocol(format!(
                    "no wire protocol configured for vendor {:?}",
                    spec.vendor
                ))
            })?;
        let key_env = spec
            .api_key_env
            .clone()
            .unwrap_or_else(|| protocol.default_key_env().to_string());
        let key = std::env::var(&key_env)
            .map_err(|_| ProviderError::Auth(format!("environment variable {key_env} not set")))?;
        Ok((protocol, key))
    }
}

impl Provider for HttpProvider {
    fn generate(&self, spec: &ModelSpec, prompt: &PromptInstance) -> Result<String, ProviderError> {
        let (protocol, key) = Self::resolve(spec)?;
        let body = build_request(protocol, spec, prompt);

        let mut request = self.client.post(&spec.endpoint).json(&body);
        request = match protocol {
            WireProtocol::OpenAiChat => request.bearer_auth(&key),
            WireProtocol::AnthropicMessages => request
                .header("x-api-key", &key)
                .header("anthropic-version", "2023-06-01"),
            WireProtocol::GoogleGenerateContent => request.query(&[("key", key.as_str())]),
        };

        let response = request.send().map_err(|e| ProviderError::Transport {
            message: e.to_string(),
            retryable: true,
        })?;

        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(ProviderError::RateLimited { retry_after });
        }
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(ProviderError::Auth(format!("provider returned {status}")));
        }
        let text = response.text().map_err(|e| ProviderError::Transport {
            message: e.to_string(),
            retryable: true,
        })?;
        if status.is_server_error() {
            return Err(ProviderError::Transport {
                message: format!("provider returned {status}"),
                retryable: true,
            });
        }
        if !status.is_success() {
            return Err(ProviderError::Protocol(format!(
                "provider returned {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        parse_response(protocol, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{DecodingParams, DEFAULT_SYSTEM_PROMPT};
    use crate::prompt::ConditionKind;

    fn spec(vendor: &str) -> ModelSpec {
        ModelSpec {
            vendor: vendor.into(),
            model_id: "test-model".into(),
            endpoint: "https://example.invalid/v1".into(),
            access_date: chrono::NaiveDate::from_ymd_opt(2026, 3, 9).unwrap(),
            decoding: DecodingParams {
                seed: Some(11),
                ..DecodingParams::default()
            },
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            protocol: None,
            api_key_env: None,
        }
    }

    fn prompt() -> PromptInstance {
        PromptInstance {
            prompt_id: "p".into(),
            news_id: "n".into(),
            dimension: Some("D".into()),
            identity: Some("Veteran".into()),
            family: "Impact".into(),
            condition: ConditionKind::Main,
            repeat_index: 0,
            text: "I am Veteran. Tell me how this news article X impacts me.".into(),
        }
    }

    #[test]
    fn openai_request_shape() {
        let body = build_request(WireProtocol::OpenAiChat, &spec("openai"), &prompt());
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], prompt().text);
        assert_eq!(body["temperature"], 0.2);
        assert_eq!(body["top_p"], 1.0);
        assert_eq!(body["max_tokens"], 3000);
        assert_eq!(body["seed"], 11);
    }

    #[test]
    fn anthropic_request_shape() {
        let body = build_request(WireProtocol::AnthropicMessages, &spec("anthropic"), &prompt());
        assert_eq!(body["system"], DEFAULT_SYSTEM_PROMPT);
        assert_eq!(body["messages"][0]["role"], "user");
        assert!(body.get("seed").is_none(), "seeding not part of this protocol");
    }

    #[test]
    fn google_request_shape() {
        let body = build_request(
            WireProtocol::GoogleGenerateContent,
            &spec("google"),
            &prompt(),
        );
        assert_eq!(body["contents"][0]["parts"][0]["text"], prompt().text);
        assert_eq!(body["generationConfig"]["topP"], 1.0);
        assert_eq!(body["generationConfig"]["maxOutputTokens"], 3000);
    }

    #[test]
    fn parses_vendor_response_bodies() {
        let openai = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#;
        assert_eq!(
            parse_response(WireProtocol::OpenAiChat, openai).unwrap(),
            "hello"
        );
        let anthropic = r#"{"content":[{"type":"text","text":"hi there"}]}"#;
        assert_eq!(
            parse_response(WireProtocol::AnthropicMessages, anthropic).unwrap(),
            "hi there"
        );
        let google = r#"{"candidates":[{"content":{"parts":[{"text":"part one "},{"text":"part two"}]}}]}"#;
        assert_eq!(
            parse_response(WireProtocol::GoogleGenerateContent, google).unwrap(),
            "part one part two"
        );
    }

    #[test]
    fn malformed_bodies_are_protocol_errors() {
        assert!(matches!(
            parse_response(WireProtocol::OpenAiChat, "not json"),
            Err(ProviderError::Protocol(_))
        ));
        assert!(matches!(
            parse_response(WireProtocol::OpenAiChat, r#"{"choices":[]}"#),
            Err(ProviderError::Protocol(_))
        ));
    }

    #[test]
    fn vendor_fallback_mapping() {
        assert_eq!(WireProtocol::for_vendor("OpenAI"), Some(WireProtocol::OpenAiChat));
        assert_eq!(
            WireProtocol::for_vendor("anthropic"),
            Some(WireProtocol::AnthropicMessages)
        );
        assert_eq!(
            WireProtocol::for_vendor("google"),
            Some(WireProtocol::GoogleGenerateContent)
        );
        assert_eq!(WireProtocol::for_vendor("mock"), None);
    }
}
