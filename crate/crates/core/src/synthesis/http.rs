use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::client::{RewriteClient, RewriteError, RewriteResponse};
use crate::{Error, Result};

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "NEWSPROBE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpRewriteConfig {
    /// Chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub temperature: Option<f64>,
}

fn default_timeout() -> u64 {
    120
}

/// Chat-completion style client: system message = rendered prompt, user
/// message = article body, reply = `choices[0].message.content`.
pub struct HttpRewriteClient {
    config: HttpRewriteConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpRewriteClient {
    pub fn new(config: HttpRewriteConfig, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpRewriteClient {
            config,
            api_key,
            agent,
        }
    }

    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(config: HttpRewriteConfig) -> Result<Self> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::Config(format!("{API_KEY_ENV} is not set")))?;
        Ok(Self::new(config, Some(key)))
    }

    pub fn request_body(&self, prompt: &str, article_body: &str) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt},
                {"role": "user", "content": article_body},
            ],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        body
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl RewriteClient for HttpRewriteClient {
    fn rewrite(&self, prompt: &str, article_body: &str) -> Result<RewriteResponse, RewriteError> {
        let started = Instant::now();
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(self.request_body(prompt, article_body))
            .map_err(|e| RewriteError::Transient(e.to_string()))?;

        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(RewriteError::Transient(format!("http status {status}")));
        }
        if status >= 400 {
            return Err(RewriteError::Fatal(format!("http status {status}")));
        }
        let completion: Completion = resp
            .body_mut()
            .read_json()
            .map_err(|e| RewriteError::Fatal(format!("unexpected response: {e}")))?;
        let text = completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();

        let mut metadata = BTreeMap::new();
        metadata.insert("model".into(), self.config.model.clone());
        metadata.insert("latency_ms".into(), started.elapsed().as_millis().to_string());
        Ok(RewriteResponse { text, metadata })
    }
}
