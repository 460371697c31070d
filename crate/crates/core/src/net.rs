//! Minimal HTTP/1.1 client plumbing over hyper, shared by the dispatcher,
//! the worker runtime and the deployer.

use std::time::Duration;

use bytes::Bytes;
use http::header::HOST;
use http::{HeaderMap, HeaderValue, Method, Request, StatusCode, Uri};
use http_body_util::{BodyExt, Full};
use hyper::client::conn::http1::{self, SendRequest};
use hyper_util::rt::TokioIo;
use thiserror::Error;
use tokio::net::TcpStream;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("invalid endpoint {0:?}")]
    InvalidEndpoint(String),
    #[error("cannot connect to {addr}: {source}")]
    Connect {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("http protocol error: {0}")]
    Protocol(#[from] hyper::Error),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("invalid request: {0}")]
    Request(#[from] http::Error),
}

/// Where to reach a service: `host:port` plus an optional path prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    authority: String,
    base_path: String,
}

impl Endpoint {
    /// Accepts `http://host:port[/prefix]` or a bare `host:port`.
    pub fn parse(text: &str) -> Result<Self, HttpError> {
        let invalid = || HttpError::InvalidEndpoint(text.to_owned());
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(invalid());
        }
        let with_scheme = if trimmed.contains("://") { trimmed.to_owned() } else { format!("http://{trimmed}") };
        let uri: Uri = with_scheme.parse().map_err(|_| invalid())?;
        if uri.scheme_str() != Some("http") {
            return Err(invalid());
        }
        let authority = uri.authority().ok_or_else(invalid)?;
        if authority.port_u16().is_none() {
            return Err(invalid());
        }
        Ok(Self {
            authority: authority.as_str().to_owned(),
            base_path: uri.path().trim_end_matches('/').to_owned(),
        })
    }

    pub fn authority(&self) -> &str {
        &self.authority
    }

    /// Joins `path` (which starts with `/`) onto the prefix.
    pub fn path(&self, path: &str) -> String {
        format!("{}{}", self.base_path, path)
    }

    pub fn url(&self) -> String {
        format!("http://{}{}", self.authority, self.base_path)
    }
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
}

impl HttpResponse {
    pub fn header_str(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

/// One persistent keep-alive connection; requests on it are sequential.
pub struct HttpConnection {
    authority: String,
    sender: SendRequest<Full<Bytes>>,
}

impl HttpConnection {
    pub async fn connect(endpoint: &Endpoint) -> Result<Self, HttpError> {
        let addr = endpoint.authority().to_owned();
        let stream = TcpStream::connect(&addr)
            .await
            .map_err(|source| HttpError::Connect { addr: addr.clone(), source })?;
        stream.set_nodelay(true).ok();
        let (sender, connection) = http1::handshake(TokioIo::new(stream)).await?;
        tokio::spawn(async move {
            if let Err(err) = connection.await {
                tracing::debug!(%err, "connection closed with error");
            }
        });
        Ok(Self { authority: addr, sender })
    }

    pub fn is_closed(&self) -> bool {
        self.sender.is_closed()
    }

    pub async fn send(
        &mut self,
        method: Method,
        path: &str,
        headers: &[(&str, &str)],
        body: Bytes,
    ) -> Result<HttpResponse, HttpError> {
        let mut builder = Request::builder().method(method).uri(path);
        for (name, value) in headers {
            builder = builder.header(*name, *value);
        }
        let mut request = builder.body(Full::new(body))?;
        request.headers_mut().insert(
            HOST,
            HeaderValue::from_str(&self.authority).map_err(|e| HttpError::Request(e.into()))?,
        );
        self.sender.ready().await?;
        let response = self.sender.send_request(request).await?;
        let (parts, body) = response.into_parts();
        let body = body.collect().await?.to_bytes();
        Ok(HttpResponse { status: parts.status, headers: parts.headers, body })
    }
}

/// Opens a connection, sends one request and drops the connection.
pub async fn request_once(
    endpoint: &Endpoint,
    method: Method,
    path: &str,
    headers: &[(&str, &str)],
    body: Bytes,
    timeout: Duration,
) -> Result<HttpResponse, HttpError> {
    let work = async {
        let mut conn = HttpConnection::connect(endpoint).await?;
        conn.send(method, &endpoint.path(path), headers, body).await
    };
    tokio::time::timeout(timeout, work).await.map_err(|_| HttpError::Timeout(timeout))?
}

pub const JSON_CONTENT: (&str, &str) = ("content-type", "application/json");

/// Blocking convenience for one-shot CLI calls.
pub fn blocking_request(
    endpoint: &Endpoint,
    method: Method,
    path: &str,
    body: Option<String>,
    timeout: Duration,
) -> Result<HttpResponse, HttpError> {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .expect("current-thread runtime");
    let headers: &[(&str, &str)] = if body.is_some() { &[JSON_CONTENT] } else { &[] };
    let body = body.map(Bytes::from).unwrap_or_default();
    runtime.block_on(request_once(endpoint, method, path, headers, body, timeout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_parsing() {
        let e = Endpoint::parse("http://127.0.0.1:9000").unwrap();
        assert_eq!(e.authority(), "127.0.0.1:9000");
        assert_eq!(e.path("/functions"), "/functions");

        let e = Endpoint::parse("localhost:8080").unwrap();
        assert_eq!(e.url(), "http://localhost:8080");

        let e = Endpoint::parse("http://h:1/prefix/").unwrap();
        assert_eq!(e.path("/x"), "/prefix/x");

        assert!(Endpoint::parse("").is_err());
        assert!(Endpoint::parse("https://h:1").is_err());
        assert!(Endpoint::parse("http://h").is_err());
    }
}
