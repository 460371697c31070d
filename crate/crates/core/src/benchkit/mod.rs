//! Desk-scale case studies: Monte-Carlo π and N-Queens, run either on a
//! local thread pool or through the dispatcher against a platform.

mod pi;
mod queens;
mod run;
pub mod tasks;

pub use pi::{combine_estimates, pi_estimate, PiJob, PiJobError};
pub use queens::{count_solutions_from_prefix, enumerate_prefixes, Prefix};
pub use run::{
    fetch_billing, run_benchmark, BenchError, BenchReport, Job, JobResult, Mode, QueensJob, TaskRow,
    CSV_HEADER, DEFAULT_HOST_VCPU_RATE,
};
