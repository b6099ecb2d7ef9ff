//! Prompt refinement against a chat-completion style HTTP endpoint.
//!
//! A short user prompt ("a red rose") is wrapped in a fixed task instruction asking for a
//! comma-separated list of object attributes with no background, sent as a single user
//! message, and the first reply is returned. Offline mode returns the prompt unchanged.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bumped whenever [`TASK_TEMPLATE`] changes.
pub const TEMPLATE_VERSION: u32 = 1;

pub const TASK_TEMPLATE: &str = "You refine prompts for text-to-3D object generation. \
Rewrite the prompt below in a comma-separated format: name the target object first, then list \
its characteristics such as shape, color, material, texture and parts. \
Omit background descriptions, scenery and environment. \
Reply with the refined prompt only.";

pub const DELIMITER: &str = "\n\nPrompt: ";

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("auth token variable {0} is not set")]
    MissingToken(String),
    #[error("request timed out")]
    Timeout,
    #[error("network failure: {0}")]
    Network(String),
    #[error("service returned status {status}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// Rendered instruction: `task + DELIMITER + context`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementInstruction {
    pub context: String,
    pub task: String,
    pub combined: String,
}

pub fn build_instruction(original: &str) -> Result<RefinementInstruction, RefineError> {
    if original.trim().is_empty() {
        return Err(RefineError::EmptyPrompt);
    }
    let combined = format!("{TASK_TEMPLATE}{DELIMITER}{original}");
    Ok(RefinementInstruction { context: original.to_string(), task: TASK_TEMPLATE.to_string(), combined })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Online,
    #[default]
    Offline,
}

/// Client settings. The token itself is never stored, only the name of the environment
/// variable holding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinerConfig {
    pub mode: Mode,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub token_env: Option<String>,
    pub timeout: Duration,
    /// Degrade to the unrefined prompt on any online failure.
    pub fallback: bool,
}

impl Default for RefinerConfig {
    fn default() -> Self {
        Self::offline()
    }
}

impl RefinerConfig {
    pub fn offline() -> Self {
        Self { mode: Mode::Offline, endpoint: None, model: None, token_env: None, timeout: Duration::from_secs(30), fallback: true }
    }

    pub fn online(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            mode: Mode::Online,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            ..Self::offline()
        }
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        if self.mode == Mode::Offline {
            return Ok(());
        }
        match &self.endpoint {
            Some(e) if e.starts_with("http://") || e.starts_with("https://") => {}
            Some(e) => return Err(RefineError::Config(format!("endpoint {e:?} is not an http(s) URL"))),
            None => return Err(RefineError::Config("online mode needs an endpoint".into())),
        }
        if self.model.as_deref().is_none_or(|m| m.trim().is_empty()) {
            return Err(RefineError::Config("online mode needs a model".into()));
        }
        if self.timeout.is_zero() {
            return Err(RefineError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Refinement {
    pub text: String,
    /// False when the prompt was passed through unchanged (offline or fallback).
    pub refined: bool,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

/// Reusable client; cheap to share between threads.
pub struct Refiner {
    config: RefinerConfig,
    token: Option<String>,
    http: Option<reqwest::blocking::Client>,
}

impl fmt::Debug for Refiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Refiner")
            .field("config", &self.config)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl Refiner {
    /// Reads the token from the environment once, at construction.
    pub fn new(config: RefinerConfig) -> Result<Self, RefineError> {
        config.validate()?;
        if config.mode == Mode::Offline {
            return Ok(Self { config, token: None, http: None });
        }
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| RefineError::MissingToken(var.clone()))?),
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| RefineError::Network(e.to_string()))?;
        Ok(Self { config, token, http: Some(http) })
    }

    pub fn config(&self) -> &RefinerConfig {
        &self.config
    }

    /// Refines `original`, honoring the fallback setting.
    pub fn refine(&self, original: &str) -> Result<Refinement, RefineError> {
        let instruction = build_instruction(original)?;
        let Some(http) = &self.http else {
            return Ok(Refinement { text: original.to_string(), refined: false });
        };
        match self.request(http, &instruction) {
            Ok(text) => Ok(Refinement { text, refined: true }),
            Err(e) if self.config.fallback => {
                log::warn!("prompt refinement failed ({e}); using the original prompt");
                Ok(Refinement { text: original.to_string(), refined: false })
            }
            Err(e) => Err(e),
        }
    }

    fn request(&self, http: &reqwest::blocking::Client, instruction: &RefinementInstruction) -> Result<String, RefineError> {
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let model = self.config.model.as_deref().unwrap_or_default();
        let body = ChatRequest { model, messages: [ChatMessage { role: "user", content: &instruction.combined }] };
        log::debug!("POST {endpoint} model={model} template=v{TEMPLATE_VERSION}");
        let mut req = http.post(endpoint).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                RefineError::Timeout
            } else {
                RefineError::Network(e.without_url().to_string())
            }
        })?;
        let status = resp.status();
        log::debug!("refinement service answered {status}");
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(RefineError::Status { status: status.as_u16(), body });
        }
        let parsed: ChatResponse = resp.json().map_err(|e| RefineError::Malformed(e.to_string()))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| RefineError::Malformed("no choices[0].message.content".into()))?;
        Ok(text.trim().to_string())
    }
}

/// One-shot convenience around [`Refiner`].
pub fn refine(original: &str, config: &RefinerConfig) -> Result<Refinement, RefineError> {
    Refiner::new(config.clone())?.refine(original)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instruction_contains_prompt_and_directives() {
        let i = build_instruction("a red rose").unwrap();
        assert!(i.combined.contains("a red rose"));
        assert!(i.combined.contains("comma-separated format"));
        assert!(i.combined.contains("Omit background"));
        assert!(i.combined.ends_with("a red rose"));
        assert_eq!(i, build_instruction("a red rose").unwrap());
    }

    #[test]
    fn whitespace_prompt_rejected() {
        assert!(matches!(build_instruction("  \t\n"), Err(RefineError::EmptyPrompt)));
        assert!(matches!(refine("", &RefinerConfig::offline()), Err(RefineError::EmptyPrompt)));
    }

    #[test]
    fn offline_is_identity() {
        let r = refine("a red rose", &RefinerConfig::offline()).unwrap();
        assert_eq!(r, Refinement { text: "a red rose".into(), refined: false });
    }

    #[test]
    fn online_config_validation() {
        assert!(RefinerConfig::online("ftp://x", "m").validate().is_err());
        assert!(RefinerConfig::online("http://x", " ").validate().is_err());
        let mut c = RefinerConfig::online("http://x", "m");
        c.endpoint = None;
        assert!(c.validate().is_err());
        assert!(RefinerConfig::online("https://x/v1/chat/completions", "m").validate().is_ok());
    }

    #[test]
    fn missing_token_variable() {
        let mut c = RefinerConfig::online("http://127.0.0.1:9", "m");
        c.token_env = Some("SPLATMPM_TEST_TOKEN_THAT_IS_NOT_SET".into());
        assert!(matches!(Refiner::new(c), Err(RefineError::MissingToken(_))));
    }
}
