//! Demo application built from one source in two modes.
//!
//! `CPLS_MODE=serverless` builds the worker: it serves whichever entry
//! `CPLS_ENTRY` names. The default host build runs the π example against a
//! deployed worker and writes the manifest the deployer consumes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use offload_core::benchkit::tasks::{self, PiSlice};
use offload_core::codegen::{write_manifest_file, TaskSet, MANIFEST_FILE_NAME};
use offload_core::dispatcher::{Dispatcher, DispatcherConfig, ResultSlot};
use offload_core::{build_mode, BuildMode, FunctionConfig};

#[derive(Parser)]
#[command(name = "offload-app", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the manifest, by default next to this executable.
    Manifest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print `human_id cloud_name` for every task.
    Ids,
    /// Estimate π with `np` offloaded workers.
    Pi {
        #[arg(long)]
        backend: String,
        #[arg(long, default_value_t = 100_000_000)]
        n: u64,
        #[arg(long, default_value_t = 128)]
        np: u64,
    },
    /// Print the build mode.
    Mode,
}

fn task_set() -> TaskSet {
    tasks::task_set(FunctionConfig::default())
}

fn main() -> ExitCode {
    let set = task_set();
    let mode = build_mode!();
    // A worker launched by the platform always has CPLS_ENTRY set.
    if mode == BuildMode::Serverless && std::env::var_os(offload_core::protocol::ENV_ENTRY).is_some() {
        let registry = set.registry().expect("task names are unique");
        offload_core::runtime::worker_main(&registry);
    }
    offload_cli::init_tracing();
    match run(Cli::parse(), &set, mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli, set: &TaskSet, mode: BuildMode) -> anyhow::Result<()> {
    let exe = std::env::current_exe()?;
    match cli.command {
        Some(Command::Manifest { out }) => {
            let filename = exe.file_name().and_then(|n| n.to_str()).unwrap_or("offload-app");
            let entries = set.manifest_entries(filename);
            let out = out.unwrap_or_else(|| exe.with_file_name(MANIFEST_FILE_NAME));
            write_manifest_file(&out, &entries)?;
            println!("{}", out.display());
        }
        Some(Command::Ids) => {
            for def in set.definitions() {
                println!("{} {}", def.identifier.human_id, def.identifier.cloud_name);
            }
        }
        Some(Command::Mode) => println!("{}", mode.as_str()),
        Some(Command::Pi { backend, n, np }) => {
            let dispatcher = Dispatcher::new(DispatcherConfig::new(backend))?;
            let slots: Vec<ResultSlot<f64>> = (0..np).map(|_| ResultSlot::new()).collect();
            for (i, slot) in slots.iter().enumerate() {
                dispatcher.dispatch(PiSlice::new(n, np, tasks::PI_SLICE_SEED + i as u64), slot)?;
            }
            let records = dispatcher.wait(np as usize)?;
            if let Some(bad) = records.iter().find(|r| !r.status.is_ok()) {
                anyhow::bail!("invocation {} failed: {:?}", bad.local_id, bad.status);
            }
            let pi: f64 = slots.iter().filter_map(ResultSlot::cloned).sum::<f64>() / np as f64;
            let cold = records.iter().filter(|r| r.cold).count();
            println!("pi = {pi}");
            println!("invocations {} cold {cold}", records.len());
        }
        None => {
            anyhow::bail!("no command given (build mode: {}); see --help", mode.as_str());
        }
    }
    Ok(())
}
