//! Turns a manifest and a worker binary into registered functions.
//!
//! Every failure maps onto a process exit code through
//! [`DeployError::exit_code`] and [`InvokeReport::exit_code`].

use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use http::{Method, StatusCode};
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

use crate::codegen::{read_manifest_file, Manifest, ManifestError};
use crate::emulator::{FunctionInfo, FunctionSpec, UpsertOutcome, UpsertStatus};
use crate::net::{blocking_request, Endpoint, HttpError, HttpResponse};
use crate::protocol;
use crate::wireformat::{unwrap_base64_json, Envelope, EnvelopeKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;
pub const EXIT_NOT_FOUND: i32 = 4;
pub const EXIT_THROTTLED: i32 = 5;
pub const EXIT_PLATFORM_ERROR: i32 = 6;

/// Name of the launch descriptor stored next to the binary in a package.
pub const DESCRIPTOR_NAME: &str = "bootstrap";

const CONTROL_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum DeployError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("package {0} does not exist")]
    MissingPackage(PathBuf),
    #[error("invalid payload file {path}: {message}")]
    Payload { path: PathBuf, message: String },
    #[error("backend unreachable: {0}")]
    Unreachable(#[source] HttpError),
    #[error("backend rejected {name}: {status} {message}")]
    Rejected { name: String, status: StatusCode, message: String },
    #[error("{failed} of {total} entries failed to deploy")]
    Partial { summary: DeploySummary, failed: usize, total: usize },
    #[error("unexpected backend response: {0}")]
    Protocol(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DeployError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DeployError::Manifest(_) | DeployError::MissingPackage(_) | DeployError::Payload { .. } => {
                EXIT_INVALID_INPUT
            }
            DeployError::Unreachable(_) => EXIT_UNREACHABLE,
            DeployError::Io { .. } => EXIT_INVALID_INPUT,
            DeployError::Rejected { .. } | DeployError::Partial { .. } | DeployError::Protocol(_) => {
                EXIT_PARTIAL
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeployPlan {
    pub manifest: Manifest,
    pub package: PathBuf,
    pub backend: Endpoint,
}

impl DeployPlan {
    pub fn load(manifest_path: &Path, package: &Path, backend: &str) -> Result<Self, DeployError> {
        let manifest = read_manifest_file(manifest_path)?;
        if package.as_os_str().is_empty() || !package.is_file() {
            return Err(DeployError::MissingPackage(package.to_owned()));
        }
        let backend = Endpoint::parse(backend).map_err(DeployError::Unreachable)?;
        let package = package.canonicalize().map_err(|_| DeployError::MissingPackage(package.to_owned()))?;
        Ok(Self { manifest, package, backend })
    }

    /// One function spec per entry, named by the entry's cloud name.
    pub fn specs(&self) -> Vec<FunctionSpec> {
        self.manifest
            .entry_points
            .iter()
            .map(|entry| {
                let name = entry.task_identifier().cloud_name;
                FunctionSpec { entry: name.clone(), name, config: entry.config(), package: self.package.clone() }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeploySummary {
    pub created: usize,
    pub updated: usize,
    pub unchanged: usize,
    pub entries: Vec<DeployedEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeployedEntry {
    pub name: String,
    pub original_function_name: String,
    pub result: Result<UpsertStatus, String>,
}

/// Registers every manifest entry, in order.
pub fn deploy(manifest_path: &Path, package: &Path, backend: &str) -> Result<DeploySummary, DeployError> {
    let plan = DeployPlan::load(manifest_path, package, backend)?;
    deploy_plan(&plan)
}

pub fn deploy_plan(plan: &DeployPlan) -> Result<DeploySummary, DeployError> {
    let mut summary = DeploySummary::default();
    let mut failed = 0;
    for (spec, entry) in plan.specs().into_iter().zip(&plan.manifest.entry_points) {
        let name = spec.name.clone();
        let result = register(&plan.backend, &spec);
        let result = match result {
            Ok(status) => {
                match status {
                    UpsertStatus::Created => summary.created += 1,
                    UpsertStatus::Updated => summary.updated += 1,
                    UpsertStatus::Unchanged => summary.unchanged += 1,
                }
                Ok(status)
            }
            Err(e @ DeployError::Unreachable(_)) => return Err(e),
            Err(e) => {
                failed += 1;
                Err(e.to_string())
            }
        };
        summary.entries.push(DeployedEntry {
            name,
            original_function_name: entry.original_function_name.clone(),
            result,
        });
    }
    if failed > 0 {
        let total = summary.entries.len();
        return Err(DeployError::Partial { summary, failed, total });
    }
    Ok(summary)
}

fn register(backend: &Endpoint, spec: &FunctionSpec) -> Result<UpsertStatus, DeployError> {
    let body = serde_json::to_string(spec).expect("function spec serializes");
    let response = blocking_request(backend, Method::POST, protocol::FUNCTIONS_PATH, Some(body), CONTROL_TIMEOUT)
        .map_err(DeployError::Unreachable)?;
    if response.status != StatusCode::OK {
        return Err(DeployError::Rejected {
            name: spec.name.clone(),
            status: response.status,
            message: response.text(),
        });
    }
    let outcome: UpsertOutcome =
        serde_json::from_slice(&response.body).map_err(|e| DeployError::Protocol(e.to_string()))?;
    Ok(outcome.status)
}

pub fn list_functions(backend: &str) -> Result<Vec<FunctionInfo>, DeployError> {
    let endpoint = Endpoint::parse(backend).map_err(DeployError::Unreachable)?;
    let response = blocking_request(&endpoint, Method::GET, protocol::FUNCTIONS_PATH, None, CONTROL_TIMEOUT)
        .map_err(DeployError::Unreachable)?;
    if response.status != StatusCode::OK {
        return Err(DeployError::Protocol(format!("list returned {}", response.status)));
    }
    serde_json::from_slice(&response.body).map_err(|e| DeployError::Protocol(e.to_string()))
}

/// Builds a zip holding the binary (mode 0755) and a `bootstrap` script that
/// execs it. Timestamps are fixed, so identical inputs give identical bytes.
pub fn package_bytes(binary: &Path) -> Result<Vec<u8>, DeployError> {
    let missing = || DeployError::MissingPackage(binary.to_owned());
    if binary.as_os_str().is_empty() || !binary.is_file() {
        return Err(missing());
    }
    let file_name = binary.file_name().and_then(|n| n.to_str()).ok_or_else(missing)?.to_owned();
    let contents = std::fs::read(binary).map_err(|_| missing())?;
    let descriptor = format!("#!/bin/sh\nexec ./{file_name} \"$@\"\n");

    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o755);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let zip_err = |e: zip::result::ZipError| DeployError::Io {
        path: binary.to_owned(),
        source: std::io::Error::other(e),
    };
    let io_err = |source| DeployError::Io { path: binary.to_owned(), source };
    zip.start_file(file_name.as_str(), options).map_err(zip_err)?;
    zip.write_all(&contents).map_err(io_err)?;
    zip.start_file(DESCRIPTOR_NAME, options).map_err(zip_err)?;
    zip.write_all(descriptor.as_bytes()).map_err(io_err)?;
    Ok(zip.finish().map_err(zip_err)?.into_inner())
}

pub fn package(binary: &Path, out_zip: &Path) -> Result<(), DeployError> {
    let bytes = package_bytes(binary)?;
    std::fs::write(out_zip, bytes).map_err(|source| DeployError::Io { path: out_zip.to_owned(), source })
}

/// Outcome of a single debug invocation.
#[derive(Debug, Clone)]
pub struct InvokeReport {
    pub status: StatusCode,
    /// `x-cpls-*` headers in the order received.
    pub headers: Vec<(String, String)>,
    pub envelope: Option<Envelope>,
    pub body_text: String,
}

impl InvokeReport {
    pub fn exit_code(&self) -> i32 {
        status_exit_code(self.status)
    }

    /// Human-readable rendering of the response envelope.
    pub fn describe_body(&self) -> String {
        match &self.envelope {
            Some(env) if env.kind == EnvelopeKind::ResponseErr => {
                format!("error: {}", env.error_message().unwrap_or_default())
            }
            Some(env) => format!("{:?} ({} body bytes): {}", env.kind, env.body.len(), hex(&env.body)),
            None => self.body_text.clone(),
        }
    }
}

pub fn status_exit_code(status: StatusCode) -> i32 {
    match status {
        StatusCode::OK => EXIT_OK,
        StatusCode::NOT_FOUND => EXIT_NOT_FOUND,
        StatusCode::TOO_MANY_REQUESTS => EXIT_THROTTLED,
        StatusCode::INTERNAL_SERVER_ERROR => EXIT_PLATFORM_ERROR,
        _ => EXIT_PARTIAL,
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Validates the payload file locally, then invokes `name` once.
pub fn invoke_debug(backend: &str, name: &str, payload_file: &Path) -> Result<InvokeReport, DeployError> {
    let payload_err = |message: String| DeployError::Payload { path: payload_file.to_owned(), message };
    let text = std::fs::read_to_string(payload_file).map_err(|e| payload_err(e.to_string()))?;
    let bytes = unwrap_base64_json(&text).map_err(|e| payload_err(e.to_string()))?;
    Envelope::from_bytes(&bytes).map_err(|e| payload_err(e.to_string()))?;

    let endpoint = Endpoint::parse(backend).map_err(DeployError::Unreachable)?;
    let response = blocking_request(
        &endpoint,
        Method::POST,
        &protocol::invoke_path(name),
        Some(text),
        CONTROL_TIMEOUT,
    )
    .map_err(DeployError::Unreachable)?;
    Ok(report(response))
}

fn report(response: HttpResponse) -> InvokeReport {
    let headers = response
        .headers
        .iter()
        .filter(|(k, _)| k.as_str().starts_with("x-cpls-"))
        .map(|(k, v)| (k.as_str().to_owned(), v.to_str().unwrap_or_default().to_owned()))
        .collect();
    let envelope = std::str::from_utf8(&response.body)
        .ok()
        .and_then(|t| unwrap_base64_json(t).ok())
        .and_then(|b| Envelope::from_bytes(&b).ok());
    InvokeReport { status: response.status, headers, envelope, body_text: response.text() }
}
