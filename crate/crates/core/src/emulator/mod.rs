//! Local FaaS platform.
//!
//! Functions are registered by name with a worker binary and an entry name.
//! Each invocation runs on a warm instance when one is idle, otherwise on a
//! freshly spawned worker process (a cold start). Every completed invocation
//! leaves a [`BillingSample`] priced with the GB-second model.
//!
//! [`Emulator::start`] runs the platform on a private runtime for in-process
//! use; [`serve`] runs it on the caller's runtime.

mod billing;
mod delay;
mod instance;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::codegen::FunctionConfig;
use crate::protocol;
use crate::wireformat::DEFAULT_PAYLOAD_LIMIT;

pub use billing::{
    billed_duration, compute_charge, compute_cost, BillingRates, BillingReport, BillingSample, CostTotals,
    DEFAULT_GB_SECOND_RATE, DEFAULT_REQUEST_FEE,
};
pub use delay::{parse_delay_flag, DelayParseError, DelaySchedule};

use instance::Instance;

pub const DEFAULT_MAX_CONCURRENCY: u64 = 2000;
pub const DEFAULT_COLD_INIT_MS: f64 = 11.0;

#[derive(Debug, Clone)]
pub struct PlatformConfig {
    pub max_concurrency: u64,
    pub cold_init_ms: f64,
    pub rates: BillingRates,
    /// Billed durations are rounded up to a multiple of this; 0 bills exact time.
    pub billing_granularity_ms: u64,
    pub delays: BTreeMap<String, DelaySchedule>,
    pub payload_limit: usize,
    pub init_timeout: Duration,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self {
            max_concurrency: DEFAULT_MAX_CONCURRENCY,
            cold_init_ms: DEFAULT_COLD_INIT_MS,
            rates: BillingRates::default(),
            billing_granularity_ms: 0,
            delays: BTreeMap::new(),
            payload_limit: DEFAULT_PAYLOAD_LIMIT,
            init_timeout: Duration::from_secs(30),
        }
    }
}

/// Body of `POST /functions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    pub entry: String,
    pub config: FunctionConfig,
    pub package: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpsertStatus {
    Created,
    Updated,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsertOutcome {
    pub name: String,
    pub status: UpsertStatus,
}

/// One row of `GET /functions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub name: String,
    pub entry: String,
    pub config: FunctionConfig,
    pub package: PathBuf,
    pub warm_instances: usize,
    pub instances_spawned: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmulatorStats {
    pub in_flight: u64,
    pub peak_in_flight: u64,
    pub throttled: u64,
    pub invocations: u64,
    pub instances_spawned: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum PlatformError {
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("invalid function name {0:?}")]
    InvalidName(String),
    #[error("package {0} does not exist or is not an executable file")]
    BadPackage(PathBuf),
    #[error(transparent)]
    Config(#[from] crate::codegen::ConfigError),
}

struct FunctionState {
    spec: FunctionSpec,
    generation: u64,
    warm: Vec<Instance>,
    instances_spawned: u64,
}

struct DelayState {
    schedule: DelaySchedule,
    served: u64,
}

/// Shared platform state behind both the HTTP server and [`Emulator`].
pub struct Platform {
    config: PlatformConfig,
    functions: Mutex<BTreeMap<String, FunctionState>>,
    delays: Mutex<HashMap<String, DelayState>>,
    billing: Mutex<Vec<BillingSample>>,
    next_generation: AtomicU64,
    in_flight: AtomicU64,
    peak_in_flight: AtomicU64,
    throttled: AtomicU64,
    invocations: AtomicU64,
}

/// Releases a concurrency slot when dropped.
struct Admission<'a>(&'a AtomicU64);

impl Drop for Admission<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::AcqRel);
    }
}

impl Platform {
    pub fn new(config: PlatformConfig) -> Self {
        let delays = config
            .delays
            .iter()
            .map(|(name, schedule)| (name.clone(), DelayState { schedule: schedule.clone(), served: 0 }))
            .collect();
        Self {
            config,
            functions: Mutex::new(BTreeMap::new()),
            delays: Mutex::new(delays),
            billing: Mutex::new(Vec::new()),
            next_generation: AtomicU64::new(0),
            in_flight: AtomicU64::new(0),
            peak_in_flight: AtomicU64::new(0),
            throttled: AtomicU64::new(0),
            invocations: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.config
    }

    /// Registers or updates a function. Any change drains its warm instances.
    pub fn upsert_function(&self, spec: FunctionSpec) -> Result<UpsertOutcome, PlatformError> {
        if spec.name.is_empty() || spec.name.contains('/') {
            return Err(PlatformError::InvalidName(spec.name));
        }
        spec.config.validate()?;
        if !is_executable(&spec.package) {
            return Err(PlatformError::BadPackage(spec.package));
        }
        let generation = self.next_generation.fetch_add(1, Ordering::AcqRel);
        let mut functions = self.functions.lock().expect("functions lock");
        let name = spec.name.clone();
        let status = match functions.get_mut(&name) {
            Some(existing) if existing.spec == spec => UpsertStatus::Unchanged,
            Some(existing) => {
                existing.spec = spec;
                existing.generation = generation;
                existing.warm.clear();
                UpsertStatus::Updated
            }
            None => {
                functions.insert(
                    name.clone(),
                    FunctionState { spec, generation, warm: Vec::new(), instances_spawned: 0 },
                );
                UpsertStatus::Created
            }
        };
        Ok(UpsertOutcome { name, status })
    }

    pub fn delete_function(&self, name: &str) -> Result<(), PlatformError> {
        let removed = self.functions.lock().expect("functions lock").remove(name);
        removed.map(drop).ok_or_else(|| PlatformError::UnknownFunction(name.to_owned()))
    }

    pub fn functions(&self) -> Vec<FunctionInfo> {
        let functions = self.functions.lock().expect("functions lock");
        functions
            .values()
            .map(|f| FunctionInfo {
                name: f.spec.name.clone(),
                entry: f.spec.entry.clone(),
                config: f.spec.config,
                package: f.spec.package.clone(),
                warm_instances: f.warm.len(),
                instances_spawned: f.instances_spawned,
            })
            .collect()
    }

    /// Replaces (or with `None` removes) a function's delay schedule and
    /// restarts its list position.
    pub fn set_delay(&self, name: &str, schedule: Option<DelaySchedule>) {
        let mut delays = self.delays.lock().expect("delays lock");
        match schedule {
            Some(schedule) => {
                delays.insert(name.to_owned(), DelayState { schedule, served: 0 });
            }
            None => {
                delays.remove(name);
            }
        }
    }

    pub fn billing_samples(&self) -> Vec<BillingSample> {
        self.billing.lock().expect("billing lock").clone()
    }

    pub fn billing_report(&self) -> BillingReport {
        BillingReport::from_samples(self.billing_samples())
    }

    pub fn stats(&self) -> EmulatorStats {
        let spawned = self.functions.lock().expect("functions lock").values().map(|f| f.instances_spawned).sum();
        EmulatorStats {
            in_flight: self.in_flight.load(Ordering::Acquire),
            peak_in_flight: self.peak_in_flight.load(Ordering::Acquire),
            throttled: self.throttled.load(Ordering::Acquire),
            invocations: self.invocations.load(Ordering::Acquire),
            instances_spawned: spawned,
        }
    }

    /// Zeroes the peak and throttle counters.
    pub fn reset_counters(&self) {
        self.peak_in_flight.store(self.in_flight.load(Ordering::Acquire), Ordering::Release);
        self.throttled.store(0, Ordering::Release);
    }

    fn admit(&self) -> Option<Admission<'_>> {
        let mut current = self.in_flight.load(Ordering::Acquire);
        loop {
            if current >= self.config.max_concurrency {
                self.throttled.fetch_add(1, Ordering::AcqRel);
                return None;
            }
            match self.in_flight.compare_exchange_weak(current, current + 1, Ordering::AcqRel, Ordering::Acquire) {
                Ok(_) => {
                    self.peak_in_flight.fetch_max(current + 1, Ordering::AcqRel);
                    return Some(Admission(&self.in_flight));
                }
                Err(actual) => current = actual,
            }
        }
    }

    fn next_delay(&self, name: &str) -> f64 {
        let mut delays = self.delays.lock().expect("delays lock");
        match delays.get_mut(name) {
            Some(state) => {
                let ms = state.schedule.delay_ms(state.served);
                state.served += 1;
                ms
            }
            None => 0.0,
        }
    }

    /// Runs one invocation end to end and builds the HTTP response.
    pub(crate) async fn invoke(&self, name: &str, body: Bytes) -> Response {
        let Some(admission) = self.admit() else {
            return (StatusCode::TOO_MANY_REQUESTS, "concurrency limit reached").into_response();
        };

        let reserved = {
            let mut functions = self.functions.lock().expect("functions lock");
            let Some(function) = functions.get_mut(name) else {
                return (StatusCode::NOT_FOUND, format!("unknown function {name}")).into_response();
            };
            let generation = function.generation;
            function.warm.retain(|i| i.generation == generation);
            let warm = function.warm.pop();
            if warm.is_none() {
                function.instances_spawned += 1;
            }
            (function.spec.clone(), generation, warm)
        };
        let (spec, generation, warm) = reserved;
        let spawned_here = warm.is_none();

        let mut instance = match warm {
            Some(instance) => instance,
            None => {
                let spawned = Instance::spawn(
                    &spec.package,
                    &spec.entry,
                    generation,
                    Duration::from_secs_f64(self.config.cold_init_ms / 1e3),
                    self.config.payload_limit * 2,
                    self.config.init_timeout,
                )
                .await;
                match spawned {
                    Ok(instance) => instance,
                    Err(e) => {
                        if let Some(f) = self.functions.lock().expect("functions lock").get_mut(name) {
                            f.instances_spawned = f.instances_spawned.saturating_sub(1);
                        }
                        tracing::warn!(function = name, error = %e, "instance start failed");
                        return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response();
                    }
                }
            }
        };

        let request_id = uuid::Uuid::new_v4().to_string();
        let delay_ms = self.next_delay(name);
        let timeout = Duration::from_secs(u64::from(spec.config.timeout));
        let started = Instant::now();
        if delay_ms > 0.0 {
            tokio::time::sleep(Duration::from_secs_f64(delay_ms / 1e3)).await;
        }
        let reply = instance.invoke(&request_id, body, timeout).await;
        let duration_ms = started.elapsed().as_secs_f64() * 1e3;
        let reply = match reply {
            Ok(reply) => reply,
            Err(e) => {
                tracing::warn!(function = name, error = %e, "invocation failed");
                return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response();
            }
        };

        let cold = reply.cold.unwrap_or(spawned_here);
        let init_ms = if cold { instance.init_ms } else { 0.0 };
        let billed_ms = billed_duration(duration_ms + init_ms, self.config.billing_granularity_ms);
        let memory = spec.config.memory;
        let sample = BillingSample {
            cloud_name: name.to_owned(),
            request_id: request_id.clone(),
            cold,
            duration_ms,
            init_ms,
            billed_ms,
            memory,
            cost: compute_cost(f64::from(memory), billed_ms, &self.config.rates),
            compute_cost: compute_charge(f64::from(memory), billed_ms, self.config.rates.gb_second_rate),
            request_fee: self.config.rates.request_fee,
            injected_delay_ms: delay_ms,
        };
        self.billing.lock().expect("billing lock").push(sample);
        self.invocations.fetch_add(1, Ordering::AcqRel);
        {
            let mut functions = self.functions.lock().expect("functions lock");
            if let Some(f) = functions.get_mut(name).filter(|f| f.generation == instance.generation) {
                f.warm.push(instance);
            }
        }
        drop(admission);

        let mut response = (
            [
                (protocol::HEADER_REQUEST_ID, request_id),
                (protocol::HEADER_COLD, protocol::cold_header_value(cold).to_owned()),
                (protocol::HEADER_DURATION_MS, format!("{duration_ms:.3}")),
                (protocol::HEADER_INIT_MS, format!("{init_ms:.3}")),
                ("content-type", "application/json".to_owned()),
            ],
            reply.body,
        )
            .into_response();
        if reply.is_error {
            response.headers_mut().insert(protocol::HEADER_FUNCTION_ERROR, "1".parse().expect("static header"));
        }
        response
    }

    fn drain_all(&self) {
        let mut functions = self.functions.lock().expect("functions lock");
        for f in functions.values_mut() {
            f.warm.clear();
        }
    }
}

#[cfg(unix)]
fn is_executable(path: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    std::fs::metadata(path).is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
}

#[cfg(not(unix))]
fn is_executable(path: &Path) -> bool {
    path.is_file()
}

/// The control and data plane routes.
pub fn router(platform: Arc<Platform>) -> Router {
    let limit = platform.config.payload_limit;
    Router::new()
        .route(protocol::FUNCTIONS_PATH, post(create_function).get(list_functions))
        .route("/functions/{name}", delete(delete_function))
        .route("/2015-03-31/functions/{name}/invocations", post(invoke))
        .route(protocol::BILLING_PATH, get(billing))
        .route(protocol::STATS_PATH, get(stats))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(platform)
}

/// Serves the platform on `listener` until the future is dropped.
pub async fn serve(listener: TcpListener, platform: Arc<Platform>) -> std::io::Result<()> {
    axum::serve(listener, router(platform)).await
}

async fn create_function(State(p): State<Arc<Platform>>, body: Bytes) -> Response {
    let spec: FunctionSpec = match serde_json::from_slice(&body) {
        Ok(spec) => spec,
        Err(e) => return (StatusCode::BAD_REQUEST, format!("invalid function spec: {e}")).into_response(),
    };
    match p.upsert_function(spec) {
        Ok(outcome) => Json(outcome).into_response(),
        Err(e) => (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    }
}

async fn list_functions(State(p): State<Arc<Platform>>) -> Json<Vec<FunctionInfo>> {
    Json(p.functions())
}

async fn delete_function(State(p): State<Arc<Platform>>, UrlPath(name): UrlPath<String>) -> Response {
    match p.delete_function(&name) {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => (StatusCode::NOT_FOUND, e.to_string()).into_response(),
    }
}

async fn invoke(State(p): State<Arc<Platform>>, UrlPath(name): UrlPath<String>, body: Bytes) -> Response {
    p.invoke(&name, body).await
}

async fn billing(State(p): State<Arc<Platform>>) -> Json<Vec<BillingSample>> {
    Json(p.billing_samples())
}

async fn stats(State(p): State<Arc<Platform>>) -> Json<EmulatorStats> {
    Json(p.stats())
}

/// A platform served from a private runtime. Dropping it stops the server
/// and kills every worker process.
pub struct Emulator {
    platform: Arc<Platform>,
    addr: SocketAddr,
    runtime: Option<tokio::runtime::Runtime>,
}

impl Emulator {
    /// Listens on an ephemeral loopback port.
    pub fn start(config: PlatformConfig) -> std::io::Result<Self> {
        Self::start_on(config, SocketAddr::from(([127, 0, 0, 1], 0)))
    }

    pub fn start_on(config: PlatformConfig, addr: SocketAddr) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .thread_name("offload-emulator")
            .enable_all()
            .build()?;
        let listener = runtime.block_on(TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let platform = Arc::new(Platform::new(config));
        let served = Arc::clone(&platform);
        runtime.spawn(async move {
            if let Err(e) = serve(listener, served).await {
                tracing::error!(error = %e, "emulator server stopped");
            }
        });
        Ok(Self { platform, addr, runtime: Some(runtime) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }
}

impl std::ops::Deref for Emulator {
    type Target = Platform;

    fn deref(&self) -> &Platform {
        &self.platform
    }
}

impl Drop for Emulator {
    fn drop(&mut self) {
        if let Some(runtime) = self.runtime.take() {
            let entered = runtime.enter();
            self.platform.drain_all();
            drop(entered);
            runtime.shutdown_background();
        }
    }
}
