//! Shared plumbing for the JSON-over-HTTP clients.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 4,
            base_delay_ms: 100,
            max_delay_ms: 5_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << attempt.min(20));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

pub enum Attempt<E> {
    Retry(E),
    Fatal(E),
}

/// Runs `op` until it succeeds, fails fatally, or runs out of retries,
/// sleeping with exponential backoff in between.
pub fn with_retry<T, E>(
    policy: &RetryPolicy,
    mut op: impl FnMut() -> Result<T, Attempt<E>>,
) -> Result<T, E> {
    let mut attempt = 0;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(Attempt::Fatal(e)) => return Err(e),
            Err(Attempt::Retry(e)) if attempt >= policy.max_retries => return Err(e),
            Err(Attempt::Retry(_)) => {
                thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
        }
    }
}

/// Caps the number of requests in flight at once.
#[derive(Debug)]
pub struct Gate {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a Gate);

impl Gate {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn enter(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

pub fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// `base` with `path` appended, avoiding a doubled slash.
pub fn join_url(base: &str, path: &str) -> String {
    format!(
        "{}/{}",
        base.trim_end_matches('/'),
        path.trim_start_matches('/')
    )
}

/// POSTs `body` as JSON and decodes a JSON reply. Transport errors and
/// non-200 statuses are retryable; an undecodable reply is not.
pub fn post_json<B: Serialize, R: for<'de> Deserialize<'de>>(
    agent: &ureq::Agent,
    url: &str,
    body: &B,
) -> Result<R, Attempt<String>> {
    let mut resp = agent
        .post(url)
        .send_json(body)
        .map_err(|e| Attempt::Retry(e.to_string()))?;
    let status = resp.status();
    if status != 200 {
        return Err(Attempt::Retry(format!(
            "{url} returned HTTP {}",
            status.as_u16()
        )));
    }
    resp.body_mut()
        .read_json::<R>()
        .map_err(|e| Attempt::Fatal(format!("{url}: undecodable reply: {e}")))
}
