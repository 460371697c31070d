//! Client-side fork-join runtime.
//!
//! A [`Dispatcher`] turns bound tasks into invoke requests, spreads them
//! round-robin over a fixed pool of keep-alive connections and writes each
//! decoded result into the [`ResultSlot`] handed over at dispatch time.
//! Completion is observed with [`Dispatcher::wait`] and
//! [`Dispatcher::wait_any`].
//!
//! All network work runs on a small runtime owned by the dispatcher, so the
//! number of threads it uses does not grow with the number of invocations in
//! flight.
//!
//! ```no_run
//! use offload_core::dispatcher::{Dispatcher, DispatcherConfig, ResultSlot};
//!
//! #[offload_core::task]
//! fn square(x: u64) -> u64 {
//!     x * x
//! }
//!
//! let d = Dispatcher::new(DispatcherConfig::new("127.0.0.1:9000")).unwrap();
//! let slots: Vec<ResultSlot<u64>> = (0..4).map(|_| ResultSlot::new()).collect();
//! for (i, slot) in slots.iter().enumerate() {
//!     d.dispatch(Square::new(i as u64), slot).unwrap();
//! }
//! let records = d.wait(4).unwrap();
//! assert!(records.iter().all(|r| r.status.is_ok()));
//! ```

mod pool;
mod record;
mod retry;

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use bytes::Bytes;
use http::{Method, StatusCode};
use thiserror::Error;

use crate::codegen::{FunctionConfig, HostStub, ResponseError, Task};
use crate::net::{request_once, Endpoint, HttpError, HttpResponse, JSON_CONTENT};
use crate::protocol;
use crate::wireformat::{unwrap_base64_json, wrap_base64_json, Envelope, DEFAULT_PAYLOAD_LIMIT};

pub use pool::select_connection;
pub use record::{InvocationRecord, InvocationStatus, LocalId, ResultSlot};
pub use retry::{backoff_delay, BACKOFF_JITTER, DEFAULT_BACKOFF_BASE};

use pool::ConnectionSlot;

/// Extra client-side time granted on top of a function's own timeout.
pub const TIMEOUT_SLACK: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConnectionStrategy {
    /// Requests share `pool_size` persistent connections.
    #[default]
    Pooled,
    /// Every attempt opens and closes its own connection.
    PerRequest,
}

#[derive(Debug, Clone)]
pub struct DispatcherConfig {
    pub backend_endpoint: String,
    pub pool_size: usize,
    pub max_retries_throttle: u32,
    pub default_function_config: FunctionConfig,
    pub strategy: ConnectionStrategy,
    pub backoff_base: Duration,
    /// Threads in the dispatcher's private runtime.
    pub worker_threads: usize,
    pub payload_limit: usize,
}

impl DispatcherConfig {
    pub fn new(backend_endpoint: impl Into<String>) -> Self {
        Self {
            backend_endpoint: backend_endpoint.into(),
            pool_size: 16,
            max_retries_throttle: 5,
            default_function_config: FunctionConfig::default(),
            strategy: ConnectionStrategy::Pooled,
            backoff_base: DEFAULT_BACKOFF_BASE,
            worker_threads: 2,
            payload_limit: DEFAULT_PAYLOAD_LIMIT,
        }
    }

    pub fn pool_size(mut self, n: usize) -> Self {
        self.pool_size = n;
        self
    }

    pub fn max_retries_throttle(mut self, n: u32) -> Self {
        self.max_retries_throttle = n;
        self
    }

    pub fn strategy(mut self, strategy: ConnectionStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn function_config(mut self, cfg: FunctionConfig) -> Self {
        self.default_function_config = cfg;
        self
    }
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("pool_size must be at least 1")]
    EmptyPool,
    #[error("worker_threads must be at least 1")]
    NoWorkerThreads,
    #[error(transparent)]
    Endpoint(#[from] HttpError),
    #[error("invalid function config: {0}")]
    Config(#[from] crate::codegen::ConfigError),
    #[error("request payload is {size} bytes, limit is {limit}")]
    PayloadTooLarge { size: usize, limit: usize },
    #[error("cannot wait for {requested} invocations, only {outstanding} outstanding")]
    NotEnoughOutstanding { requested: usize, outstanding: usize },
    #[error("failed to start dispatcher runtime: {0}")]
    Runtime(std::io::Error),
}

#[derive(Default)]
struct Completion {
    /// Dispatched and not yet claimed by a waiter.
    unclaimed: usize,
    finished: VecDeque<InvocationRecord>,
}

struct Shared {
    endpoint: Endpoint,
    pool: Vec<ConnectionSlot>,
    strategy: ConnectionStrategy,
    max_retries_throttle: u32,
    backoff_base: Duration,
    next_id: AtomicU64,
    in_flight: AtomicU64,
    completion: Mutex<Completion>,
    done: Condvar,
}

struct RuntimeGuard(Option<tokio::runtime::Runtime>);

impl Drop for RuntimeGuard {
    fn drop(&mut self) {
        if let Some(rt) = self.0.take() {
            rt.shutdown_background();
        }
    }
}

/// Shareable handle; clones dispatch into the same id sequence and pool.
#[derive(Clone)]
pub struct Dispatcher {
    shared: Arc<Shared>,
    runtime: Arc<RuntimeGuard>,
    default_config: FunctionConfig,
    payload_limit: usize,
    worker_threads: usize,
}

impl std::fmt::Debug for Dispatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dispatcher")
            .field("endpoint", &self.shared.endpoint)
            .field("pool_size", &self.shared.pool.len())
            .finish_non_exhaustive()
    }
}

impl Dispatcher {
    /// No connection is opened here; an unreachable backend shows up as
    /// transport errors on the first dispatches.
    pub fn new(config: DispatcherConfig) -> Result<Self, DispatchError> {
        if config.pool_size == 0 {
            return Err(DispatchError::EmptyPool);
        }
        if config.worker_threads == 0 {
            return Err(DispatchError::NoWorkerThreads);
        }
        config.default_function_config.validate()?;
        let endpoint = Endpoint::parse(&config.backend_endpoint)?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(config.worker_threads)
            .max_blocking_threads(1)
            .thread_name("offload-dispatch")
            .enable_all()
            .build()
            .map_err(DispatchError::Runtime)?;
        let shared = Shared {
            endpoint,
            pool: (0..config.pool_size).map(|_| ConnectionSlot::new()).collect(),
            strategy: config.strategy,
            max_retries_throttle: config.max_retries_throttle,
            backoff_base: config.backoff_base,
            next_id: AtomicU64::new(0),
            in_flight: AtomicU64::new(0),
            completion: Mutex::new(Completion::default()),
            done: Condvar::new(),
        };
        Ok(Self {
            shared: Arc::new(shared),
            runtime: Arc::new(RuntimeGuard(Some(runtime))),
            default_config: config.default_function_config,
            payload_limit: config.payload_limit,
            worker_threads: config.worker_threads,
        })
    }

    pub fn pool_size(&self) -> usize {
        self.shared.pool.len()
    }

    /// Threads owned by this dispatcher; fixed at construction.
    pub fn execution_contexts(&self) -> usize {
        self.worker_threads
    }

    /// Requests sent on each pool connection so far, retries included.
    pub fn connection_request_counts(&self) -> Vec<u64> {
        self.shared.pool.iter().map(ConnectionSlot::carried).collect()
    }

    pub fn in_flight(&self) -> u64 {
        self.shared.in_flight.load(Ordering::Acquire)
    }

    pub fn dispatched(&self) -> u64 {
        self.shared.next_id.load(Ordering::Acquire)
    }

    /// Dispatches with the dispatcher's default function config.
    pub fn dispatch<T: Task>(
        &self,
        task: T,
        slot: &ResultSlot<T::Output>,
    ) -> Result<LocalId, DispatchError> {
        let cfg = self.default_config;
        self.dispatch_with(task, &cfg, slot)
    }

    pub fn dispatch_with<T: Task>(
        &self,
        task: T,
        cfg: &FunctionConfig,
        slot: &ResultSlot<T::Output>,
    ) -> Result<LocalId, DispatchError> {
        cfg.validate()?;
        let stub = HostStub::<T>::new();
        let body = wrap_base64_json(&stub.request(&task).to_bytes());
        if body.len() > self.payload_limit {
            return Err(DispatchError::PayloadTooLarge { size: body.len(), limit: self.payload_limit });
        }

        let shared = Arc::clone(&self.shared);
        let id = {
            let mut completion = shared.completion.lock().expect("completion lock");
            completion.unclaimed += 1;
            LocalId(shared.next_id.fetch_add(1, Ordering::AcqRel))
        };
        shared.in_flight.fetch_add(1, Ordering::AcqRel);

        let connection = select_connection(id.0, shared.pool.len());
        let path = shared.endpoint.path(&protocol::invoke_path(&stub.identifier.cloud_name));
        let timeout = Duration::from_secs(u64::from(cfg.timeout)) + TIMEOUT_SLACK;
        let mut record = InvocationRecord::pending(id, stub.identifier.cloud_name.clone(), connection);
        let slot = slot.clone();
        let handle = self.runtime.0.as_ref().expect("runtime alive").handle();
        handle.spawn(async move {
            let outcome = shared.invoke(connection, &path, Bytes::from(body), timeout, &mut record).await;
            record.status = match outcome {
                Ok(response) => complete(&stub, &response, &mut record, &slot),
                Err(status) => status,
            };
            shared.finish(record);
        });
        Ok(id)
    }

    /// Blocks until `n` more invocations are terminal and returns their
    /// records in completion order. `n` is reserved immediately, so
    /// concurrent waiters never share a record.
    pub fn wait(&self, n: usize) -> Result<Vec<InvocationRecord>, DispatchError> {
        let mut completion = self.shared.completion.lock().expect("completion lock");
        if n > completion.unclaimed {
            return Err(DispatchError::NotEnoughOutstanding {
                requested: n,
                outstanding: completion.unclaimed,
            });
        }
        completion.unclaimed -= n;
        let mut completion = self
            .shared
            .done
            .wait_while(completion, |c| c.finished.len() < n)
            .expect("completion lock");
        Ok(completion.finished.drain(..n).collect())
    }

    /// Waits for the first outstanding invocation to finish.
    pub fn wait_any(&self) -> Result<InvocationRecord, DispatchError> {
        let mut records = self.wait(1)?;
        Ok(records.pop().expect("wait(1) yields one record"))
    }

    /// Waits for everything dispatched and not yet waited for.
    pub fn wait_all(&self) -> Vec<InvocationRecord> {
        let outstanding = self.shared.completion.lock().expect("completion lock").unclaimed;
        self.wait(outstanding).unwrap_or_default()
    }
}

impl Shared {
    async fn invoke(
        &self,
        connection: usize,
        path: &str,
        body: Bytes,
        timeout: Duration,
        record: &mut InvocationRecord,
    ) -> Result<HttpResponse, InvocationStatus> {
        let max_attempts = 1 + self.max_retries_throttle;
        loop {
            record.attempts += 1;
            let sent = match self.strategy {
                ConnectionStrategy::Pooled => {
                    self.pool[connection]
                        .send(&self.endpoint, path, &[JSON_CONTENT], body.clone(), timeout)
                        .await
                }
                ConnectionStrategy::PerRequest => {
                    self.pool[connection].count_request();
                    request_once(&self.endpoint, Method::POST, path, &[JSON_CONTENT], body.clone(), timeout)
                        .await
                }
            };
            let response = sent.map_err(|e| InvocationStatus::TransportError(e.to_string()))?;
            match response.status {
                StatusCode::OK => return Ok(response),
                StatusCode::TOO_MANY_REQUESTS if record.attempts < max_attempts => {
                    tokio::time::sleep(retry::jittered_backoff(record.attempts - 1, self.backoff_base))
                        .await;
                }
                StatusCode::TOO_MANY_REQUESTS => {
                    return Err(InvocationStatus::TransportError(format!(
                        "throttled on all {} attempts",
                        record.attempts
                    )));
                }
                status => {
                    return Err(InvocationStatus::RemoteError(format!(
                        "backend returned {status}: {}",
                        response.text().trim()
                    )));
                }
            }
        }
    }

    fn finish(&self, record: InvocationRecord) {
        let mut completion = self.completion.lock().expect("completion lock");
        completion.finished.push_back(record);
        self.in_flight.fetch_sub(1, Ordering::AcqRel);
        drop(completion);
        self.done.notify_all();
    }
}

fn complete<T: Task>(
    stub: &HostStub<T>,
    response: &HttpResponse,
    record: &mut InvocationRecord,
    slot: &ResultSlot<T::Output>,
) -> InvocationStatus {
    let number = |name| response.header_str(name).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
    record.request_id = response.header_str(protocol::HEADER_REQUEST_ID).unwrap_or_default().to_owned();
    record.cold = response.header_str(protocol::HEADER_COLD) == Some("1");
    record.duration_ms = number(protocol::HEADER_DURATION_MS);
    record.init_ms = number(protocol::HEADER_INIT_MS);

    let envelope = match std::str::from_utf8(&response.body)
        .map_err(|e| e.to_string())
        .and_then(|text| unwrap_base64_json(text).map_err(|e| e.to_string()))
        .and_then(|bytes| Envelope::from_bytes(&bytes).map_err(|e| e.to_string()))
    {
        Ok(envelope) => envelope,
        Err(e) => return InvocationStatus::RemoteError(format!("malformed response: {e}")),
    };
    match stub.response(&envelope) {
        Ok(value) => match slot.set(value) {
            Ok(()) => InvocationStatus::Ok,
            Err(_) => InvocationStatus::RemoteError("result slot was already filled".into()),
        },
        Err(ResponseError::Remote(message)) => InvocationStatus::RemoteError(message),
        Err(e @ ResponseError::Malformed(_)) => InvocationStatus::RemoteError(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_pool() {
        let err = Dispatcher::new(DispatcherConfig::new("127.0.0.1:1").pool_size(0)).unwrap_err();
        assert!(matches!(err, DispatchError::EmptyPool));
    }

    #[test]
    fn default_pool_has_sixteen_slots() {
        let d = Dispatcher::new(DispatcherConfig::new("127.0.0.1:1")).unwrap();
        assert_eq!(d.pool_size(), 16);
        assert_eq!(d.connection_request_counts(), vec![0; 16]);
    }

    #[test]
    fn rejects_bad_endpoint() {
        assert!(Dispatcher::new(DispatcherConfig::new("")).is_err());
    }

    #[test]
    fn wait_zero_and_wait_any_usage() {
        let d = Dispatcher::new(DispatcherConfig::new("127.0.0.1:1")).unwrap();
        assert!(d.wait(0).unwrap().is_empty());
        assert!(matches!(d.wait_any(), Err(DispatchError::NotEnoughOutstanding { .. })));
        assert!(d.wait_all().is_empty());
    }
}
