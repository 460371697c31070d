use std::net::SocketAddr;
use std::sync::Arc;

use clap::Parser;
use offload_core::emulator::{self, parse_delay_flag, BillingRates, DelaySchedule, Platform, PlatformConfig};

#[derive(Parser)]
#[command(name = "offload-emulator", version, about = "Local FaaS platform for offloaded functions")]
struct Args {
    #[arg(long, default_value_t = 9000)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value_t = emulator::DEFAULT_MAX_CONCURRENCY)]
    max_concurrency: u64,
    #[arg(long, default_value_t = emulator::DEFAULT_COLD_INIT_MS)]
    cold_init_ms: f64,
    #[arg(long, default_value_t = emulator::DEFAULT_GB_SECOND_RATE)]
    gb_second_rate: f64,
    #[arg(long, default_value_t = emulator::DEFAULT_REQUEST_FEE)]
    request_fee: f64,
    /// Round billed time up to this many milliseconds; 0 bills exact time.
    #[arg(long, default_value_t = 0)]
    billing_granularity_ms: u64,
    /// Per-function delay, `name=fixed:MS`, `name=uniform:LO:HI` or `name=list:A,B,..`.
    #[arg(long = "exec-delay-ms", value_parser = parse_delay)]
    exec_delay_ms: Vec<(String, DelaySchedule)>,
}

fn parse_delay(text: &str) -> Result<(String, DelaySchedule), String> {
    parse_delay_flag(text).map_err(|e| e.to_string())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    offload_cli::init_tracing();
    let args = Args::parse();
    if args.gb_second_rate < 0.0 || args.request_fee < 0.0 || args.cold_init_ms < 0.0 {
        anyhow::bail!("rates and cold init time must be non-negative");
    }
    let config = PlatformConfig {
        max_concurrency: args.max_concurrency,
        cold_init_ms: args.cold_init_ms,
        rates: BillingRates { gb_second_rate: args.gb_second_rate, request_fee: args.request_fee },
        billing_granularity_ms: args.billing_granularity_ms,
        delays: args.exec_delay_ms.into_iter().collect(),
        ..PlatformConfig::default()
    };
    let listener = tokio::net::TcpListener::bind(SocketAddr::new(args.host, args.port)).await?;
    println!("listening on http://{}", listener.local_addr()?);
    let platform = Arc::new(Platform::new(config));
    tokio::select! {
        served = emulator::serve(listener, Arc::clone(&platform)) => served?,
        _ = tokio::signal::ctrl_c() => {}
    }
    Ok(())
}
