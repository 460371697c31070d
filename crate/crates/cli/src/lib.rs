//! Shared plumbing for the `offload`, `offload-emulator` and `offload-app`
//! binaries.

use std::path::Path;
use std::process::ExitCode;

use offload_core::benchkit::{run_benchmark, BenchReport, Job, Mode, DEFAULT_HOST_VCPU_RATE};
use offload_core::dispatcher::{Dispatcher, DispatcherConfig};

pub fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("OFFLOAD_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
}

pub fn exit_code(code: i32) -> ExitCode {
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchMode {
    Local,
    Serverless,
}

/// Runs a benchmark job and writes its CSV to `csv` (or stdout).
pub fn bench(
    job: &Job,
    mode: BenchMode,
    backend: Option<&str>,
    workers: usize,
    pool_size: usize,
    csv: Option<&Path>,
) -> anyhow::Result<BenchReport> {
    let report = match mode {
        BenchMode::Local => run_benchmark(job, Mode::Local { workers }, DEFAULT_HOST_VCPU_RATE)?,
        BenchMode::Serverless => {
            let backend = backend.ok_or_else(|| anyhow::anyhow!("--backend is required in serverless mode"))?;
            let dispatcher = Dispatcher::new(DispatcherConfig::new(backend).pool_size(pool_size))?;
            run_benchmark(job, Mode::Serverless { dispatcher: &dispatcher, backend }, DEFAULT_HOST_VCPU_RATE)?
        }
    };
    match csv {
        Some(path) => report.write_csv(std::fs::File::create(path)?)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    Ok(report)
}
