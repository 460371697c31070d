//! Worker-side invocation loop.
//!
//! A worker process serves exactly one entry, named by `CPLS_ENTRY`, and
//! pulls work from the runtime API at `CPLS_RUNTIME_API`: `GET next`,
//! run the task, `POST` the response or error, repeat.

use std::convert::Infallible;
use std::time::Duration;

use bytes::Bytes;
use http::{Method, StatusCode};
use thiserror::Error;

use crate::codegen::{EntryRegistry, EntryWrapper};
use crate::net::{Endpoint, HttpConnection, HttpError, JSON_CONTENT};
use crate::protocol;
use crate::wireformat::{unwrap_base64_json, wrap_base64_json, Envelope, EnvelopeKind};

/// Connection attempts before the loop gives up on an unreachable runtime API.
pub const CONNECT_ATTEMPTS: u32 = 5;
const CONNECT_BACKOFF: Duration = Duration::from_millis(50);

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("environment variable {0} is not set")]
    MissingEnv(&'static str),
    #[error("entry {0:?} is not registered in this binary")]
    UnknownEntry(String),
    #[error("runtime API unreachable: {0}")]
    Unreachable(#[source] HttpError),
    #[error("runtime API returned {status} for {path}")]
    Rejected { status: StatusCode, path: String },
    #[error("runtime API sent an event without a request id")]
    MissingRequestId,
    #[error(transparent)]
    Endpoint(HttpError),
}

/// Per-process bookkeeping. Only the first invocation an instance handles
/// is cold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceState {
    pub entry_name: String,
    pub handled_count: u64,
}

impl InstanceState {
    pub fn new(entry_name: impl Into<String>) -> Self {
        Self { entry_name: entry_name.into(), handled_count: 0 }
    }

    pub fn is_cold(&self) -> bool {
        self.handled_count == 0
    }
}

/// Runs one invocation payload (a Base64-JSON carrier) through `wrapper`.
/// Every failure, including a malformed payload, becomes an error envelope.
pub fn handle_invocation(wrapper: &EntryWrapper, payload: &[u8]) -> Envelope {
    let request = std::str::from_utf8(payload)
        .map_err(|e| format!("payload is not UTF-8: {e}"))
        .and_then(|text| unwrap_base64_json(text).map_err(|e| format!("bad carrier: {e}")))
        .and_then(|bytes| Envelope::from_bytes(&bytes).map_err(|e| format!("bad envelope: {e}")))
        .and_then(|env| match env.kind {
            EnvelopeKind::Request => Ok(env),
            other => Err(format!("expected a request envelope, got {other:?}")),
        });
    match request {
        Ok(envelope) => match wrapper.call(&envelope.body) {
            Ok(body) => Envelope::ok(body),
            Err(e) => Envelope::error(&e.to_string()),
        },
        Err(message) => Envelope::error(&message),
    }
}

/// Serves `entry_name` until the runtime API goes away.
pub fn run_entry_loop(
    registry: &EntryRegistry,
    runtime_endpoint: &str,
    entry_name: &str,
) -> Result<Infallible, RuntimeError> {
    let wrapper = registry
        .get(entry_name)
        .ok_or_else(|| RuntimeError::UnknownEntry(entry_name.to_owned()))?;
    let endpoint = Endpoint::parse(runtime_endpoint).map_err(RuntimeError::Endpoint)?;
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .expect("current-thread runtime");
    runtime.block_on(event_loop(wrapper, &endpoint, InstanceState::new(entry_name)))
}

async fn event_loop(
    wrapper: &EntryWrapper,
    endpoint: &Endpoint,
    mut state: InstanceState,
) -> Result<Infallible, RuntimeError> {
    let mut conn = connect(endpoint).await?;
    let next_path = endpoint.path(protocol::RUNTIME_NEXT_PATH);
    loop {
        if conn.is_closed() {
            conn = connect(endpoint).await?;
        }
        let event = match conn.send(Method::GET, &next_path, &[], Bytes::new()).await {
            Ok(event) => event,
            Err(_) => {
                conn = connect(endpoint).await?;
                continue;
            }
        };
        if event.status != StatusCode::OK {
            return Err(RuntimeError::Rejected { status: event.status, path: next_path });
        }
        let request_id = event
            .header_str(protocol::HEADER_REQUEST_ID)
            .ok_or(RuntimeError::MissingRequestId)?
            .to_owned();

        let response = handle_invocation(wrapper, &event.body);
        let path = match response.kind {
            EnvelopeKind::ResponseOk => protocol::runtime_response_path(&request_id),
            _ => protocol::runtime_error_path(&request_id),
        };
        let path = endpoint.path(&path);
        let body = Bytes::from(wrap_base64_json(&response.to_bytes()));
        let headers = [JSON_CONTENT, (protocol::HEADER_COLD, protocol::cold_header_value(state.is_cold()))];
        state.handled_count += 1;

        let posted = match conn.send(Method::POST, &path, &headers, body.clone()).await {
            Ok(r) => r,
            Err(_) => {
                conn = connect(endpoint).await?;
                conn.send(Method::POST, &path, &headers, body)
                    .await
                    .map_err(RuntimeError::Unreachable)?
            }
        };
        if !posted.status.is_success() {
            return Err(RuntimeError::Rejected { status: posted.status, path });
        }
    }
}

async fn connect(endpoint: &Endpoint) -> Result<HttpConnection, RuntimeError> {
    let mut attempt = 0;
    loop {
        match HttpConnection::connect(endpoint).await {
            Ok(conn) => return Ok(conn),
            Err(e) if attempt + 1 >= CONNECT_ATTEMPTS => return Err(RuntimeError::Unreachable(e)),
            Err(_) => {
                tokio::time::sleep(CONNECT_BACKOFF * 2u32.pow(attempt)).await;
                attempt += 1;
            }
        }
    }
}

/// Entry point for a worker binary: reads the environment, serves the entry
/// and exits the process with a diagnostic when the loop stops.
pub fn worker_main(registry: &EntryRegistry) -> ! {
    let result = (|| {
        let entry = std::env::var(protocol::ENV_ENTRY)
            .map_err(|_| RuntimeError::MissingEnv(protocol::ENV_ENTRY))?;
        let api = std::env::var(protocol::ENV_RUNTIME_API)
            .map_err(|_| RuntimeError::MissingEnv(protocol::ENV_RUNTIME_API))?;
        run_entry_loop(registry, &api, &entry)
    })();
    match result {
        Ok(never) => match never {},
        Err(e) => {
            eprintln!("worker: {e}");
            std::process::exit(1)
        }
    }
}
