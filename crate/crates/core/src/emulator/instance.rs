use std::collections::HashMap;
use std::path::Path;
use std::process::Stdio;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::process::{Child, Command};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;

use crate::protocol;

pub(crate) struct Event {
    pub request_id: String,
    pub body: Bytes,
}

#[derive(Debug)]
pub(crate) struct WorkerReply {
    pub is_error: bool,
    pub body: Bytes,
    pub cold: Option<bool>,
}

/// Runtime API state shared between one instance's server and the emulator.
struct Channel {
    events: tokio::sync::Mutex<mpsc::Receiver<Event>>,
    replies: Mutex<HashMap<String, oneshot::Sender<WorkerReply>>>,
    ready: Mutex<Option<oneshot::Sender<()>>>,
}

/// One live worker process and its dedicated runtime API listener.
pub(crate) struct Instance {
    pub generation: u64,
    pub init_ms: f64,
    child: Child,
    events: mpsc::Sender<Event>,
    channel: Arc<Channel>,
    server: JoinHandle<()>,
}

#[derive(Debug, thiserror::Error)]
pub(crate) enum InstanceError {
    #[error("cannot bind runtime API: {0}")]
    Bind(std::io::Error),
    #[error("cannot start worker {path}: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("worker exited during init ({0})")]
    InitExit(String),
    #[error("worker did not poll for work within {0:?}")]
    InitTimeout(Duration),
    #[error("worker exited during invocation ({0})")]
    Crashed(String),
    #[error("invocation exceeded {0:?}")]
    Timeout(Duration),
}

impl Instance {
    /// Sleeps `cold_init`, starts the worker and waits for its first poll.
    /// `init_ms` covers all of that.
    pub async fn spawn(
        package: &Path,
        entry: &str,
        generation: u64,
        cold_init: Duration,
        body_limit: usize,
        init_timeout: Duration,
    ) -> Result<Self, InstanceError> {
        let started = Instant::now();
        tokio::time::sleep(cold_init).await;

        let (events_tx, events_rx) = mpsc::channel(1);
        let (ready_tx, ready_rx) = oneshot::channel();
        let channel = Arc::new(Channel {
            events: tokio::sync::Mutex::new(events_rx),
            replies: Mutex::new(HashMap::new()),
            ready: Mutex::new(Some(ready_tx)),
        });
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(InstanceError::Bind)?;
        let addr = listener.local_addr().map_err(InstanceError::Bind)?;
        let app = Router::new()
            .route(protocol::RUNTIME_NEXT_PATH, get(next))
            .route("/runtime/invocation/{id}/response", post(respond))
            .route("/runtime/invocation/{id}/error", post(fail))
            .layer(DefaultBodyLimit::max(body_limit))
            .with_state(Arc::clone(&channel));
        let server = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });

        let mut child = Command::new(package)
            .env(protocol::ENV_ENTRY, entry)
            .env(protocol::ENV_RUNTIME_API, addr.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .kill_on_drop(true)
            .spawn()
            .map_err(|source| {
                server.abort();
                InstanceError::Spawn { path: package.display().to_string(), source }
            })?;

        let outcome = tokio::select! {
            ready = ready_rx => ready.map_err(|_| InstanceError::InitExit("runtime API closed".into())),
            status = child.wait() => Err(InstanceError::InitExit(exit_text(status))),
            _ = tokio::time::sleep(init_timeout) => Err(InstanceError::InitTimeout(init_timeout)),
        };
        if let Err(e) = outcome {
            server.abort();
            return Err(e);
        }
        Ok(Self {
            generation,
            init_ms: started.elapsed().as_secs_f64() * 1e3,
            child,
            events: events_tx,
            channel,
            server,
        })
    }

    /// Hands one event to the worker and waits for its reply.
    pub async fn invoke(
        &mut self,
        request_id: &str,
        body: Bytes,
        timeout: Duration,
    ) -> Result<WorkerReply, InstanceError> {
        let (tx, rx) = oneshot::channel();
        self.channel.replies.lock().expect("replies lock").insert(request_id.to_owned(), tx);
        let event = Event { request_id: request_id.to_owned(), body };
        let result = tokio::select! {
            reply = async {
                self.events.send(event).await.map_err(|_| InstanceError::Crashed("runtime API closed".into()))?;
                rx.await.map_err(|_| InstanceError::Crashed("reply dropped".into()))
            } => reply,
            status = self.child.wait() => Err(InstanceError::Crashed(exit_text(status))),
            _ = tokio::time::sleep(timeout) => Err(InstanceError::Timeout(timeout)),
        };
        self.channel.replies.lock().expect("replies lock").remove(request_id);
        result
    }
}

impl Drop for Instance {
    fn drop(&mut self) {
        self.server.abort();
        let _ = self.child.start_kill();
    }
}

fn exit_text(status: std::io::Result<std::process::ExitStatus>) -> String {
    match status {
        Ok(s) => s.to_string(),
        Err(e) => e.to_string(),
    }
}

async fn next(State(channel): State<Arc<Channel>>) -> Response {
    if let Some(ready) = channel.ready.lock().expect("ready lock").take() {
        let _ = ready.send(());
    }
    let mut events = channel.events.lock().await;
    match events.recv().await {
        Some(event) => {
            ([(protocol::HEADER_REQUEST_ID, event.request_id)], event.body).into_response()
        }
        None => StatusCode::GONE.into_response(),
    }
}

fn deliver(channel: &Channel, id: &str, headers: &HeaderMap, body: Bytes, is_error: bool) -> StatusCode {
    let cold = headers
        .get(protocol::HEADER_COLD)
        .and_then(|v| v.to_str().ok())
        .map(|v| v == "1");
    match channel.replies.lock().expect("replies lock").remove(id) {
        Some(tx) => {
            let _ = tx.send(WorkerReply { is_error, body, cold });
            StatusCode::ACCEPTED
        }
        None => StatusCode::NOT_FOUND,
    }
}

async fn respond(
    State(channel): State<Arc<Channel>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> StatusCode {
    deliver(&channel, &id, &headers, body, false)
}

async fn fail(
    State(channel): State<Arc<Channel>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> StatusCode {
    deliver(&channel, &id, &headers, body, true)
}
