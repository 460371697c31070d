use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use bytes::Bytes;
use http::Method;
use tokio::sync::Mutex;

use crate::net::{Endpoint, HttpConnection, HttpError, HttpResponse};

/// Round-robin choice of connection for the `sequence_number`-th request.
pub fn select_connection(sequence_number: u64, pool_size: usize) -> usize {
    assert!(pool_size >= 1, "pool_size must be at least 1");
    (sequence_number % pool_size as u64) as usize
}

/// One lazily opened keep-alive connection. Requests routed to the same slot
/// queue behind each other.
pub(crate) struct ConnectionSlot {
    conn: Mutex<Option<HttpConnection>>,
    carried: AtomicU64,
}

impl ConnectionSlot {
    pub(crate) fn new() -> Self {
        Self { conn: Mutex::new(None), carried: AtomicU64::new(0) }
    }

    pub(crate) fn carried(&self) -> u64 {
        self.carried.load(Ordering::Relaxed)
    }

    pub(crate) fn count_request(&self) {
        self.carried.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) async fn send(
        &self,
        endpoint: &Endpoint,
        path: &str,
        headers: &[(&str, &str)],
        body: Bytes,
        timeout: Duration,
    ) -> Result<HttpResponse, HttpError> {
        let mut guard = self.conn.lock().await;
        if guard.as_ref().is_none_or(HttpConnection::is_closed) {
            *guard = Some(HttpConnection::connect(endpoint).await?);
        }
        self.count_request();
        let conn = guard.as_mut().expect("connected above");
        let result = tokio::time::timeout(timeout, conn.send(Method::POST, path, headers, body))
            .await
            .map_err(|_| HttpError::Timeout(timeout))
            .and_then(|r| r);
        if result.is_err() {
            // The connection state is unknown after a failure; reconnect next time.
            *guard = None;
        }
        result
    }
}
