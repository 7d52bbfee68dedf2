//! Clients for an OpenAI-compatible chat-completions service, a disk cache
//! for their responses and a replay-only stand-in.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use discourse_core::augment::{CacheStore, ClientError, GenerationRequest, GenerativeClient};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ServiceConfig;

/// Sends each request as a single user message to `{base_url}/chat/completions`.
pub struct HttpClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpClient {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient {
            agent,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
        }
    }

    /// The API key, if any, is read from the variable named by `api_key_env`.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ClientError> {
        let base = config
            .base_url
            .clone()
            .ok_or_else(|| ClientError::Service("no service URL: set service.base_url".into()))?;
        let key = std::env::var(&config.api_key_env).ok();
        Ok(HttpClient::new(&base, key, Duration::from_secs(config.timeout_secs)))
    }
}

/// Model name from the command line, then the configuration file.
pub fn resolve_model(config: &ServiceConfig, flag: Option<&str>) -> Option<String> {
    flag.map(str::to_string).or_else(|| config.model.clone())
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

impl GenerativeClient for HttpClient {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, ClientError> {
        let body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call.send_json(&body).map_err(|e| ClientError::Service(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(ClientError::Service(format!("HTTP {status}: {}", text.trim())));
        }
        let completion: Completion = response
            .body_mut()
            .read_json()
            .map_err(|e| ClientError::Service(format!("unreadable completion: {e}")))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ClientError::Service("completion has no content".into()))
    }
}

/// Refuses every request; pair with a cache to replay earlier runs.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReplayOnly;

impl GenerativeClient for ReplayOnly {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, ClientError> {
        Err(ClientError::NotCached(request.cache_key.clone()))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    temperature: f64,
    variations: usize,
    prompt: String,
    response: String,
}

/// One JSON file per cache key under `dir`.
#[derive(Debug, Clone)]
pub struct DiskCache {
    pub dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, ClientError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| ClientError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(DiskCache { dir })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }
}

impl CacheStore for DiskCache {
    fn get(&self, key: &str) -> Result<Option<String>, ClientError> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ClientError::Cache(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry =
            serde_json::from_str(&text).map_err(|e| ClientError::Cache(format!("{}: {e}", path.display())))?;
        Ok(Some(entry.response))
    }

    fn put(&mut self, request: &GenerationRequest, response: &str) -> Result<(), ClientError> {
        let entry = CacheEntry {
            model: request.model.clone(),
            temperature: request.temperature,
            variations: request.variations,
            prompt: request.prompt.clone(),
            response: response.to_string(),
        };
        let path = self.path(&request.cache_key);
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string_pretty(&entry).map_err(|e| ClientError::Cache(e.to_string()))?;
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| ClientError::Cache(format!("{}: {e}", path.display())))
    }
}
