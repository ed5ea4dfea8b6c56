//! Chat-completion backends, the response cache, and the request scheduler.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SYSTEM_MESSAGE: &str = "You are a recommendation assistant. Reply only with a numbered list.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Vendor-standard chat-completion HTTP endpoint.
    ChatCompletion,
    /// Offline popularity/alignment oracle.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub name: String,
    pub kind: BackendKind,
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub requests_per_minute: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            name: "oracle".into(),
            kind: BackendKind::Oracle,
            base_url: String::new(),
            model: "oracle".into(),
            api_key_env: None,
            temperature: 0.0,
            timeout_secs: 60,
            max_in_flight: 4,
            requests_per_minute: 60,
            max_retries: 4,
            backoff_base_ms: 500,
        }
    }
}

impl BackendConfig {
    pub fn oracle() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("backend name is empty".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("{}: temperature must be >= 0", self.name));
        }
        if self.max_in_flight == 0 || self.requests_per_minute == 0 {
            return Err(format!("{}: max_in_flight and requests_per_minute must be >= 1", self.name));
        }
        if self.kind == BackendKind::ChatCompletion && self.base_url.is_empty() {
            return Err(format!("{}: base_url is required", self.name));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

/// One reply, stored exactly as received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub prompt_hash: String,
    pub backend: String,
    pub model: String,
    pub text: String,
    /// Seconds since the epoch when the reply arrived.
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

/// Hex sha256 over backend, model, temperature and prompt text.
pub fn prompt_hash(backend: &str, model: &str, temperature: f64, prompt: &str) -> String {
    let mut h = Sha256::new();
    for part in [backend, model, &format!("{temperature}"), prompt] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// Append-only NDJSON response store keyed by prompt hash.
#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, RawResponse>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    /// Loads `path` if it exists. A torn final line is skipped with a warning.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        if path.exists() {
            let f = File::open(path).with_context(|| format!("opening cache {}", path.display()))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<RawResponse>(&line) {
                    Ok(r) => {
                        entries.insert(r.prompt_hash.clone(), r);
                    }
                    Err(e) => warn!("{}:{}: skipping unreadable cache line: {e}", path.display(), i + 1),
                }
            }
        }
        Ok(ResponseCache {
            path: Some(path.to_path_buf()),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, hash: &str) -> Option<RawResponse> {
        self.entries.lock().unwrap().get(hash).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `r` and appends it to the backing file. Writes are serialized.
    pub fn insert(&self, r: RawResponse) -> Result<()> {
        let mut entries = self.entries.lock().unwrap();
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("appending to cache {}", path.display()))?;
            let mut line = serde_json::to_string(&r)?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
        }
        entries.insert(r.prompt_hash.clone(), r);
        Ok(())
    }
}

/// Observable request counters.
#[derive(Debug, Default)]
pub struct Counters {
    pub network_calls: AtomicUsize,
    pub cache_hits: AtomicUsize,
    pub retries: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight_seen: AtomicUsize,
}

impl Counters {
    fn enter(&self) {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight_seen.fetch_max(now, Ordering::SeqCst);
    }

    fn leave(&self) {
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
    }

    pub fn get(c: &AtomicUsize) -> usize {
        c.load(Ordering::SeqCst)
    }
}

/// At most `budget` acquisitions in any sliding `window`.
#[derive(Debug)]
pub struct RateLimiter {
    budget: usize,
    window: Duration,
    starts: Mutex<VecDeque<Instant>>,
    wake: Condvar,
}

impl RateLimiter {
    pub fn new(budget: usize, window: Duration) -> Self {
        RateLimiter {
            budget: budget.max(1),
            window,
            starts: Mutex::new(VecDeque::new()),
            wake: Condvar::new(),
        }
    }

    /// Blocks until a slot is free, then records the acquisition.
    pub fn acquire(&self) {
        let mut starts = self.starts.lock().unwrap();
        loop {
            let now = Instant::now();
            while starts.front().is_some_and(|t| now.duration_since(*t) >= self.window) {
                starts.pop_front();
            }
            if starts.len() < self.budget {
                starts.push_back(now);
                return;
            }
            let wait = self.window - now.duration_since(*starts.front().unwrap());
            starts = self.wake.wait_timeout(starts, wait).unwrap().0;
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    /// Bad key, bad model or bad request: retrying cannot help.
    #[error("backend {backend}: permanent error (HTTP {status}): {body}")]
    Permanent { backend: String, status: u16, body: String },
    #[error("backend {backend}: gave up after {attempts} attempts: {last}")]
    Exhausted { backend: String, attempts: u32, last: String },
    #[error("backend {backend}: {reason}")]
    Setup { backend: String, reason: String },
}

impl QueryError {
    pub fn is_permanent(&self) -> bool {
        !matches!(self, QueryError::Exhausted { .. })
    }
}

enum Attempt {
    Ok(String, Option<Usage>),
    Retry(String),
    Fail(u16, String),
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    content: Option<String>,
}

/// Source of reply timestamps; replaced in tests.
pub type Clock = fn() -> u64;

pub fn system_clock() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// One live backend with its cache, caps and counters.
pub struct LiveBackend<'c> {
    pub config: BackendConfig,
    pub cache: &'c ResponseCache,
    pub counters: Counters,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    limiter: RateLimiter,
    clock: Clock,
}

impl<'c> LiveBackend<'c> {
    /// Resolves the API key from the configured environment variable.
    pub fn new(config: BackendConfig, cache: &'c ResponseCache) -> Result<Self, QueryError> {
        let setup = |reason: String| QueryError::Setup {
            backend: config.name.clone(),
            reason,
        };
        config.validate().map_err(setup)?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| setup(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| setup(e.to_string()))?;
        let limiter = RateLimiter::new(config.requests_per_minute, Duration::from_secs(60));
        Ok(LiveBackend {
            config,
            cache,
            counters: Counters::default(),
            client,
            api_key,
            limiter,
            clock: system_clock,
        })
    }

    /// Replaces the one-minute rate window.
    pub fn with_rate_window(mut self, window: Duration) -> Self {
        self.limiter = RateLimiter::new(self.config.requests_per_minute, window);
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    /// Cache key of the `repeat`-th call of `prompt` (0 for the first).
    pub fn hash(&self, prompt: &str, repeat: usize) -> String {
        let keyed;
        let text = if repeat == 0 {
            prompt
        } else {
            keyed = format!("{prompt}\0repeat {repeat}");
            &keyed
        };
        prompt_hash(&self.config.name, &self.config.model, self.config.temperature, text)
    }

    /// Cache hit, or one request with retries on 429, 5xx and transport
    /// errors. Fresh replies are stored in the cache.
    pub fn query(&self, prompt: &str, repeat: usize) -> Result<RawResponse, QueryError> {
        let hash = self.hash(prompt, repeat);
        if let Some(hit) = self.cache.get(&hash) {
            self.counters.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }
        let mut last = String::new();
        let attempts = self.config.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                self.counters.retries.fetch_add(1, Ordering::SeqCst);
                let ms = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(ms));
            }
            self.limiter.acquire();
            self.counters.enter();
            self.counters.network_calls.fetch_add(1, Ordering::SeqCst);
            let outcome = self.attempt(prompt);
            self.counters.leave();
            match outcome {
                Attempt::Ok(text, usage) => {
                    let r = RawResponse {
                        prompt_hash: hash,
                        backend: self.config.name.clone(),
                        model: self.config.model.clone(),
                        text,
                        timestamp: (self.clock)(),
                        usage,
                    };
                    if let Err(e) = self.cache.insert(r.clone()) {
                        warn!("cache write failed: {e:#}");
                    }
                    return Ok(r);
                }
                Attempt::Retry(why) => {
                    debug!("{}: attempt {} failed: {why}", self.config.name, attempt + 1);
                    last = why;
                }
                Attempt::Fail(status, body) => {
                    return Err(QueryError::Permanent {
                        backend: self.config.name.clone(),
                        status,
                        body,
                    })
                }
            }
        }
        Err(QueryError::Exhausted {
            backend: self.config.name.clone(),
            attempts,
            last,
        })
    }

    fn attempt(&self, prompt: &str) -> Attempt {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &self.config.model,
            messages: [
                ChatMessage { role: "system", content: SYSTEM_MESSAGE },
                ChatMessage { role: "user", content: prompt },
            ],
            temperature: self.config.temperature,
        };
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !status.is_success() {
            return Attempt::Fail(status.as_u16(), truncate(&text, 200));
        }
        match serde_json::from_str::<ChatResponse>(&text) {
            Ok(parsed) => {
                let content = parsed
                    .choices
                    .into_iter()
                    .next()
                    .and_then(|c| c.message.content)
                    .unwrap_or_default();
                Attempt::Ok(content, parsed.usage)
            }
            Err(e) => Attempt::Fail(status.as_u16(), format!("malformed completion body: {e}")),
        }
    }

    /// Resolves every distinct (prompt, repeat) job with at most
    /// `max_in_flight` workers. A permanent error stops all workers and is
    /// returned; exhausted retries are recorded per job.
    #[allow(clippy::type_complexity)]
    pub fn query_all<'p>(
        &self,
        jobs: &[(&'p str, usize)],
    ) -> Result<BTreeMap<(&'p str, usize), Result<RawResponse, QueryError>>, QueryError> {
        let mut distinct: Vec<(&str, usize)> = jobs.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let next = AtomicUsize::new(0);
        let abort = std::sync::atomic::AtomicBool::new(false);
        let results = Mutex::new(BTreeMap::new());
        let fatal: Mutex<Option<QueryError>> = Mutex::new(None);
        let workers = self.config.max_in_flight.min(distinct.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&(prompt, repeat)) = distinct.get(i) else { return };
                    match self.query(prompt, repeat) {
                        Err(e) if e.is_permanent() => {
                            abort.store(true, Ordering::SeqCst);
                            fatal.lock().unwrap().get_or_insert(e);
                            return;
                        }
                        r => {
                            results.lock().unwrap().insert((prompt, repeat), r);
                        }
                    }
                });
            }
        });
        if let Some(e) = fatal.into_inner().unwrap() {
            return Err(e);
        }
        Ok(results.into_inner().unwrap())
    }
}

fn truncate(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}
