#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use offload_core::wireformat::{self, unwrap_base64_json, wrap_base64_json, Envelope, Reader, Wire};

/// What the stub backend does with one invocation.
pub enum Reply {
    Status(StatusCode),
    Ok(Vec<u8>),
    Error(String),
}

pub type Behavior = dyn Fn(&str, &[u8]) -> (Reply, u64) + Send + Sync;

/// Minimal invoke endpoint driven by a closure that maps (function, capture
/// bytes) to a reply and a delay in milliseconds.
pub struct StubBackend {
    pub addr: SocketAddr,
    runtime: Option<tokio::runtime::Runtime>,
}

impl StubBackend {
    pub fn start(behavior: impl Fn(&str, &[u8]) -> (Reply, u64) + Send + Sync + 'static) -> Self {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        let behavior: Arc<Behavior> = Arc::new(behavior);
        let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let addr = listener.local_addr().unwrap();
        let app = Router::new()
            .route("/2015-03-31/functions/{name}/invocations", post(invoke))
            .with_state(behavior);
        runtime.spawn(async move { axum::serve(listener, app).await.unwrap() });
        Self { addr, runtime: Some(runtime) }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for StubBackend {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

async fn invoke(State(behavior): State<Arc<Behavior>>, Path(name): Path<String>, body: Bytes) -> Response {
    let text = std::str::from_utf8(&body).unwrap();
    let env = Envelope::from_bytes(&unwrap_base64_json(text).unwrap()).unwrap();
    let (reply, delay) = behavior(&name, &env.body);
    if delay > 0 {
        tokio::time::sleep(std::time::Duration::from_millis(delay)).await;
    }
    let headers = [("x-cpls-request-id", "stub"), ("x-cpls-cold", "0")];
    match reply {
        Reply::Status(code) => (code, "stub").into_response(),
        Reply::Ok(bytes) => (headers, wrap_base64_json(&Envelope::ok(bytes).to_bytes())).into_response(),
        Reply::Error(msg) => (headers, wrap_base64_json(&Envelope::error(&msg).to_bytes())).into_response(),
    }
}

pub fn ok<T: Wire>(value: &T) -> Reply {
    Reply::Ok(wireformat::to_bytes(value))
}

pub fn decode<T: Wire>(bytes: &[u8]) -> T {
    T::decode(&mut Reader::new(bytes)).unwrap()
}
