use std::collections::HashMap;
use std::io::Write;
use std::time::{Duration, Instant};

use http::Method;
use thiserror::Error;

use super::pi::{combine_estimates, PiJob};
use super::queens::{enumerate_prefixes, Prefix};
use super::tasks::{PiSlice, QueensCount};
use crate::codegen::Task;
use crate::dispatcher::{DispatchError, Dispatcher, InvocationStatus, ResultSlot};
use crate::emulator::BillingSample;
use crate::net::{blocking_request, HttpError};
use crate::protocol;

/// Host vCPU price in dollars per hour.
pub const DEFAULT_HOST_VCPU_RATE: f64 = 0.0575;

pub const CSV_HEADER: [&str; 6] = ["task_id", "duration_ms", "cold", "init_ms", "cost_usd", "request_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueensJob {
    pub board_n: u32,
    pub prefix_len: u32,
    pub prefixes: Vec<Prefix>,
}

impl QueensJob {
    pub fn new(board_n: u32, prefix_len: u32) -> Self {
        Self { board_n, prefix_len, prefixes: enumerate_prefixes(board_n, prefix_len) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Job {
    Pi(PiJob),
    Queens(QueensJob),
}

pub enum Mode<'a> {
    /// Runs tasks in-process on `workers` threads.
    Local { workers: usize },
    /// Dispatches every task; billing is read from `backend`.
    Serverless { dispatcher: &'a Dispatcher, backend: &'a str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRow {
    pub task_id: usize,
    pub duration_ms: f64,
    pub cold: bool,
    pub init_ms: f64,
    pub cost_usd: f64,
    pub request_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JobResult {
    Pi { estimate: f64, per_task: Vec<f64> },
    Queens { total: u64, per_task: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub result: JobResult,
    pub rows: Vec<TaskRow>,
    pub wall_ms: f64,
    pub host_dispatch_ms: f64,
    pub compute_cost_usd: f64,
    pub request_fees_usd: f64,
    pub host_cost_usd: f64,
}

impl BenchReport {
    /// Function cost plus the host's share.
    pub fn total_cost_usd(&self) -> f64 {
        self.compute_cost_usd + self.request_fees_usd + self.host_cost_usd
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record([
                row.task_id.to_string(),
                format!("{:.3}", row.duration_ms),
                u8::from(row.cold).to_string(),
                format!("{:.3}", row.init_ms),
                format!("{:.12}", row.cost_usd),
                row.request_id.clone(),
            ])?;
        }
        let footer = [
            ("wall_ms", format!("{:.3}", self.wall_ms)),
            ("host_dispatch_ms", format!("{:.3}", self.host_dispatch_ms)),
            ("total_cost_usd", format!("{:.12}", self.total_cost_usd())),
            ("compute_cost_usd", format!("{:.12}", self.compute_cost_usd)),
            ("request_fees_usd", format!("{:.12}", self.request_fees_usd)),
        ];
        for (label, value) in footer {
            w.write_record([label, value.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error("task {index} failed: {message}")]
    TaskFailed { index: usize, message: String },
    #[error("cannot read billing: {0}")]
    Billing(String),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

impl From<HttpError> for BenchError {
    fn from(e: HttpError) -> Self {
        BenchError::Billing(e.to_string())
    }
}

struct Outcome<O> {
    outputs: Vec<O>,
    rows: Vec<TaskRow>,
    host_dispatch_ms: f64,
    compute_cost_usd: f64,
    request_fees_usd: f64,
}

/// Runs `job` in `mode`. Per-task results are identical across modes.
pub fn run_benchmark(job: &Job, mode: Mode<'_>, host_vcpu_rate: f64) -> Result<BenchReport, BenchError> {
    let started = Instant::now();
    let (result, outcome_meta) = match job {
        Job::Pi(pi) => {
            let tasks: Vec<PiSlice> =
                (0..pi.np).map(|i| PiSlice::new(pi.n, pi.np, pi.worker_seed(i))).collect();
            let o = run_tasks(tasks, &mode)?;
            let parts: Vec<(u64, f64)> = o.outputs.iter().map(|&e| (pi.samples_per_worker(), e)).collect();
            let estimate = combine_estimates(&parts);
            (JobResult::Pi { estimate, per_task: o.outputs.clone() }, strip(o))
        }
        Job::Queens(q) => {
            let tasks: Vec<QueensCount> =
                q.prefixes.iter().map(|p| QueensCount::new(q.board_n, p.clone())).collect();
            let o = run_tasks(tasks, &mode)?;
            let total = o.outputs.iter().sum();
            (JobResult::Queens { total, per_task: o.outputs.clone() }, strip(o))
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let (rows, host_dispatch_ms, compute_cost_usd, request_fees_usd) = outcome_meta;
    let host_ms = match mode {
        Mode::Local { .. } => wall_ms,
        Mode::Serverless { .. } => host_dispatch_ms,
    };
    Ok(BenchReport {
        result,
        rows,
        wall_ms,
        host_dispatch_ms,
        compute_cost_usd,
        request_fees_usd,
        host_cost_usd: host_ms / 3.6e6 * host_vcpu_rate,
    })
}

type Meta = (Vec<TaskRow>, f64, f64, f64);

fn strip<O>(o: Outcome<O>) -> Meta {
    (o.rows, o.host_dispatch_ms, o.compute_cost_usd, o.request_fees_usd)
}

fn run_tasks<T: Task>(tasks: Vec<T>, mode: &Mode<'_>) -> Result<Outcome<T::Output>, BenchError>
where
    T::Output: Clone,
{
    match mode {
        Mode::Local { workers } => run_local(tasks, *workers),
        Mode::Serverless { dispatcher, backend } => run_serverless(tasks, dispatcher, backend),
    }
}

fn run_local<T: Task>(tasks: Vec<T>, workers: usize) -> Result<Outcome<T::Output>, BenchError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let timed: Vec<_> = pool.install(|| {
        tasks
            .into_par_iter()
            .map(|task| {
                let t = Instant::now();
                let out = task.run();
                (out, t.elapsed())
            })
            .collect()
    });
    let mut outputs = Vec::with_capacity(timed.len());
    let mut rows = Vec::with_capacity(timed.len());
    for (index, (out, elapsed)) in timed.into_iter().enumerate() {
        let value = out.map_err(|e| BenchError::TaskFailed { index, message: e.message })?;
        outputs.push(value);
        rows.push(TaskRow {
            task_id: index,
            duration_ms: ms(elapsed),
            cold: false,
            init_ms: 0.0,
            cost_usd: 0.0,
            request_id: String::new(),
        });
    }
    Ok(Outcome { outputs, rows, host_dispatch_ms: 0.0, compute_cost_usd: 0.0, request_fees_usd: 0.0 })
}

fn run_serverless<T: Task>(
    tasks: Vec<T>,
    dispatcher: &Dispatcher,
    backend: &str,
) -> Result<Outcome<T::Output>, BenchError>
where
    T::Output: Clone,
{
    let n = tasks.len();
    let slots: Vec<ResultSlot<T::Output>> = (0..n).map(|_| ResultSlot::new()).collect();
    let dispatch_started = Instant::now();
    let mut ids = Vec::with_capacity(n);
    for (task, slot) in tasks.into_iter().zip(&slots) {
        ids.push(dispatcher.dispatch(task, slot)?);
    }
    let host_dispatch_ms = ms(dispatch_started.elapsed());
    let records = dispatcher.wait(n)?;

    let index_of: HashMap<_, _> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut by_index: Vec<Option<_>> = vec![None; n];
    for record in records {
        if let Some(&i) = index_of.get(&record.local_id) {
            by_index[i] = Some(record);
        }
    }
    let billing = fetch_billing(backend)?;
    let samples: HashMap<&str, &BillingSample> = billing.iter().map(|s| (s.request_id.as_str(), s)).collect();

    let mut outputs = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    let (mut compute, mut fees) = (0.0, 0.0);
    for (index, record) in by_index.into_iter().enumerate() {
        let record = record.ok_or_else(|| BenchError::TaskFailed { index, message: "no record".into() })?;
        match &record.status {
            InvocationStatus::Ok => {}
            InvocationStatus::RemoteError(m) | InvocationStatus::TransportError(m) => {
                return Err(BenchError::TaskFailed { index, message: m.clone() })
            }
            InvocationStatus::Pending => unreachable!("wait returns terminal records"),
        }
        let value = slots[index]
            .cloned()
            .ok_or_else(|| BenchError::TaskFailed { index, message: "result slot empty".into() })?;
        outputs.push(value);
        let sample = samples.get(record.request_id.as_str());
        let cost = sample.map_or(0.0, |s| s.cost);
        if let Some(s) = sample {
            compute += s.compute_cost;
            fees += s.request_fee;
        }
        rows.push(TaskRow {
            task_id: index,
            duration_ms: record.duration_ms,
            cold: record.cold,
            init_ms: record.init_ms,
            cost_usd: cost,
            request_id: record.request_id.clone(),
        });
    }
    Ok(Outcome { outputs, rows, host_dispatch_ms, compute_cost_usd: compute, request_fees_usd: fees })
}

/// Reads every billing sample from the backend.
pub fn fetch_billing(backend: &str) -> Result<Vec<BillingSample>, BenchError> {
    let endpoint = crate::net::Endpoint::parse(backend)?;
    let response = blocking_request(&endpoint, Method::GET, protocol::BILLING_PATH, None, Duration::from_secs(30))?;
    if !response.status.is_success() {
        return Err(BenchError::Billing(format!("backend returned {}", response.status)));
    }
    serde_json::from_slice(&response.body).map_err(|e| BenchError::Billing(e.to_string()))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
