use std::time::Duration;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{analyze_message, assemble_context, EmotionLexicon, MessagePolicy, PolicyContext};
use crate::error::PolicyError;
use crate::types::{Message, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// Full chat-completions URL.
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_retries() -> u32 {
    2
}

fn default_backoff_ms() -> u64 {
    250
}

fn default_temperature() -> f64 {
    0.7
}

/// Blocking chat-completion client.
#[derive(Debug, Clone)]
pub struct RemotePolicy {
    config: RemoteConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    vocab: Vocabulary,
    lexicon: EmotionLexicon,
}

impl RemotePolicy {
    pub fn new(config: RemoteConfig, vocab: Vocabulary, lexicon: EmotionLexicon) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms.max(1))))
            .http_status_as_error(true)
            .build()
            .into();
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        RemotePolicy {
            config,
            agent,
            api_key,
            vocab,
            lexicon,
        }
    }

    fn request_body(&self, ctx: &PolicyContext) -> Value {
        let doc = assemble_context(ctx, &self.vocab);
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": doc.system_message()},
                {"role": "user", "content": doc.user_message()},
            ],
            "temperature": self.config.temperature,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| match e {
            ureq::Error::StatusCode(code) if (400..500).contains(&code) && code != 429 => {
                Attempt::Fatal(PolicyError::Transport {
                    attempts: 1,
                    message: format!("HTTP status {code}"),
                })
            }
            other => Attempt::Retry(other.to_string()),
        })?;
        let value: Value = resp.body_mut().read_json().map_err(|e| {
            Attempt::Fatal(PolicyError::Protocol(format!("response is not JSON: {e}")))
        })?;
        extract_content(&value).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Retry(String),
    Fatal(PolicyError),
}

/// choices[0].message.content
fn extract_content(value: &Value) -> Result<String, PolicyError> {
    let choices = value
        .get("choices")
        .and_then(Value::as_array)
        .ok_or_else(|| PolicyError::Protocol("response has no choices array".into()))?;
    let first = choices
        .first()
        .ok_or_else(|| PolicyError::Protocol("response has empty choices".into()))?;
    first
        .pointer("/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| PolicyError::Protocol("choices[0].message.content missing".into()))
}

/// Send the assembled context and annotate the reply with the analyzer.
pub fn remote_generate(ctx: &PolicyContext, policy: &RemotePolicy) -> Result<Message, PolicyError> {
    let body = policy.request_body(ctx);
    let attempts = policy.config.retries + 1;
    let mut last = String::new();
    for i in 0..attempts {
        if i > 0 && policy.config.retry_backoff_ms > 0 {
            std::thread::sleep(Duration::from_millis(
                policy.config.retry_backoff_ms << (i - 1).min(6),
            ));
        }
        match policy.attempt(&body) {
            Ok(text) => {
                let (va, y) = analyze_message(&text, &policy.lexicon);
                return Ok(Message {
                    speaker_id: ctx.speaker_id.clone(),
                    text,
                    va,
                    y,
                    t: ctx.t,
                });
            }
            Err(Attempt::Fatal(PolicyError::Transport { message, .. })) => {
                return Err(PolicyError::Transport {
                    attempts: i + 1,
                    message,
                })
            }
            Err(Attempt::Fatal(e)) => return Err(e),
            Err(Attempt::Retry(msg)) => {
                log::debug!(
                    "remote attempt {} for {} failed: {msg}",
                    i + 1,
                    ctx.speaker_id
                );
                last = msg;
            }
        }
    }
    Err(PolicyError::Transport {
        attempts,
        message: last,
    })
}

impl MessagePolicy for RemotePolicy {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn generate(
        &self,
        ctx: &PolicyContext,
        _rng: &mut dyn RngCore,
    ) -> Result<Message, PolicyError> {
        remote_generate(ctx, self)
    }
}
