use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use offload_cli::{bench, exit_code, init_tracing, BenchMode};
use offload_core::benchkit::{Job, JobResult, PiJob, QueensJob};
use offload_core::deployer::{self, DeployError, EXIT_INVALID_INPUT, EXIT_OK};

#[derive(Parser)]
#[command(name = "offload", version, about = "Deploy, inspect and benchmark offloaded functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register every manifest entry as a function.
    Deploy {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        package: PathBuf,
        #[arg(long)]
        backend: String,
    },
    /// Print registered function names.
    List {
        #[arg(long)]
        backend: String,
    },
    /// Zip a worker binary with its launch descriptor.
    Package {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Invoke one function with a payload file and print the response.
    Invoke {
        #[arg(long)]
        backend: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        payload: PathBuf,
    },
    #[command(subcommand)]
    Bench(Bench),
}

#[derive(Subcommand)]
enum Bench {
    /// Monte-Carlo π.
    Pi {
        #[arg(long, default_value_t = 100_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 128)]
        workers: u64,
        #[command(flatten)]
        common: BenchArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// N-Queens solution count split into prefix tasks.
    Nqueens {
        #[arg(long, default_value_t = 12)]
        n: u32,
        #[arg(long, default_value_t = 2)]
        prefix: u32,
        #[command(flatten)]
        common: BenchArgs,
    },
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchMode::Local)]
    mode: BenchMode,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Local worker threads.
    #[arg(long, default_value_t = std::thread::available_parallelism().map_or(1, |n| n.get()))]
    threads: usize,
    #[arg(long, default_value_t = 16)]
    pool_size: usize,
}

fn main() -> ExitCode {
    init_tracing();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => exit_code(EXIT_OK),
        Err(code) => exit_code(code),
    }
}

fn fail(e: DeployError) -> i32 {
    if let DeployError::Partial { summary, .. } = &e {
        for entry in &summary.entries {
            if let Err(message) = &entry.result {
                eprintln!("{} ({}): {message}", entry.name, entry.original_function_name);
            }
        }
    }
    eprintln!("error: {e}");
    e.exit_code()
}

fn run(command: Command) -> Result<(), i32> {
    match command {
        Command::Deploy { manifest, package, backend } => {
            let summary = deployer::deploy(&manifest, &package, &backend).map_err(fail)?;
            for entry in &summary.entries {
                if let Ok(status) = &entry.result {
                    println!("{} {} {:?}", entry.name, entry.original_function_name, status);
                }
            }
            println!(
                "created {} updated {} unchanged {}",
                summary.created, summary.updated, summary.unchanged
            );
        }
        Command::List { backend } => {
            for f in deployer::list_functions(&backend).map_err(fail)? {
                println!("{}", f.name);
            }
        }
        Command::Package { input, out } => {
            deployer::package(&input, &out).map_err(fail)?;
            println!("{}", out.display());
        }
        Command::Invoke { backend, name, payload } => {
            let report = deployer::invoke_debug(&backend, &name, &payload).map_err(fail)?;
            println!("status {}", report.status.as_u16());
            for (k, v) in &report.headers {
                println!("{k}: {v}");
            }
            println!("{}", report.describe_body());
            let code = report.exit_code();
            if code != EXIT_OK {
                return Err(code);
            }
        }
        Command::Bench(b) => {
            let (job, common) = match b {
                Bench::Pi { samples, workers, common, seed } => {
                    let job = PiJob::new(samples, workers, seed).map_err(|e| {
                        eprintln!("error: {e}");
                        EXIT_INVALID_INPUT
                    })?;
                    (Job::Pi(job), common)
                }
                Bench::Nqueens { n, prefix, common } => {
                    if prefix > n || n > 31 {
                        eprintln!("error: need prefix <= n <= 31");
                        return Err(EXIT_INVALID_INPUT);
                    }
                    (Job::Queens(QueensJob::new(n, prefix)), common)
                }
            };
            let report = bench(
                &job,
                common.mode,
                common.backend.as_deref(),
                common.threads,
                common.pool_size,
                common.csv.as_deref(),
            )
            .map_err(|e| {
                eprintln!("error: {e:#}");
                1
            })?;
            match report.result {
                JobResult::Pi { estimate, .. } => eprintln!("pi ~ {estimate}"),
                JobResult::Queens { total, .. } => eprintln!("solutions: {total}"),
            }
        }
    }
    Ok(())
}
