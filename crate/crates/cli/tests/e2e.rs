mod common;

use std::process::Command;

use offload_core::benchkit::tasks::{Answer, EchoIndex, Fail};
use offload_core::benchkit::{run_benchmark, Job, Mode, QueensJob};
use offload_core::dispatcher::{Dispatcher, DispatcherConfig, InvocationStatus, ResultSlot};
use offload_core::emulator::{FunctionSpec, PlatformConfig, UpsertStatus};

fn dispatcher(url: &str, pool: usize) -> Dispatcher {
    Dispatcher::new(DispatcherConfig::new(url).pool_size(pool)).unwrap()
}

#[test]
fn task_error_surfaces_as_remote_error() {
    let (emulator, _dir) = common::deployed_emulator(PlatformConfig::default());
    let d = dispatcher(&emulator.url(), 1);
    let slot = ResultSlot::new();
    d.dispatch(Fail::new("boom".into()), &slot).unwrap();
    let record = d.wait_any().unwrap();
    match record.status {
        InvocationStatus::RemoteError(m) => assert!(m.contains("boom"), "{m}"),
        other => panic!("{other:?}"),
    }
    assert!(slot.get().is_none());
}

#[test]
fn instance_is_cold_once_then_warm() {
    let (emulator, _dir) = common::deployed_emulator(PlatformConfig::default());
    let d = dispatcher(&emulator.url(), 1);
    let mut colds = Vec::new();
    for _ in 0..3 {
        let slot = ResultSlot::new();
        d.dispatch(Answer::new(), &slot).unwrap();
        let r = d.wait_any().unwrap();
        assert!(r.status.is_ok());
        assert_eq!(slot.cloned(), Some(42));
        colds.push(r.cold);
    }
    assert_eq!(colds, [true, false, false]);
    assert_eq!(emulator.stats().instances_spawned, 1);
}

#[test]
fn config_update_drains_warm_instances() {
    let (emulator, _dir) = common::deployed_emulator(PlatformConfig::default());
    let name = common::cloud_name::<Answer>();
    let d = dispatcher(&emulator.url(), 1);
    let call = || {
        d.dispatch(Answer::new(), &ResultSlot::new()).unwrap();
        d.wait_any().unwrap().cold
    };
    assert!(call());
    assert!(!call());

    let info = emulator.functions().into_iter().find(|f| f.name == name).unwrap();
    let mut config = info.config;
    config.memory += 128;
    let spec = FunctionSpec { name: info.name, entry: info.entry, config, package: info.package };
    assert_eq!(emulator.upsert_function(spec).unwrap().status, UpsertStatus::Updated);
    assert!(call());
    assert!(!call());
}

#[test]
fn functions_sharing_a_package_run_their_own_entry() {
    let (emulator, _dir) = common::deployed_emulator(PlatformConfig::default());
    let d = dispatcher(&emulator.url(), 4);
    let answer = ResultSlot::new();
    let echo = ResultSlot::new();
    d.dispatch(Answer::new(), &answer).unwrap();
    d.dispatch(EchoIndex::new(77), &echo).unwrap();
    assert!(d.wait_all().iter().all(|r| r.status.is_ok()));
    assert_eq!(answer.cloned(), Some(42));
    assert_eq!(echo.cloned(), Some(77));
    let packages: Vec<_> = emulator.functions().into_iter().map(|f| f.package).collect();
    assert!(packages.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn local_and_serverless_benchmarks_agree() {
    let (emulator, _dir) = common::deployed_emulator(PlatformConfig::default());
    let url = emulator.url();
    let d = dispatcher(&url, 16);
    let job = Job::Queens(QueensJob::new(9, 2));
    let local = run_benchmark(&job, Mode::Local { workers: 4 }, 0.0).unwrap();
    let remote = run_benchmark(&job, Mode::Serverless { dispatcher: &d, backend: &url }, 0.0).unwrap();
    assert_eq!(local.result, remote.result);
    assert!(remote.compute_cost_usd > 0.0);
}

#[test]
fn bench_csv_cost_matches_platform_billing() {
    let (emulator, dir) = common::deployed_emulator(PlatformConfig::default());
    let csv_path = dir.path().join("bench.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_offload"))
        .args(["bench", "nqueens", "--n", "8", "--prefix", "2", "--mode", "serverless"])
        .args(["--backend", &emulator.url(), "--csv", csv_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solutions: 92"));

    let text = std::fs::read_to_string(&csv_path).unwrap();
    let footer = |label: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{label},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    let rows = text.lines().skip(1).filter(|l| l.split(',').count() == 6).count();
    let totals = emulator.billing_report().totals;
    assert_eq!(rows as u64, totals.invocations);
    let compute = footer("compute_cost_usd");
    let fees = footer("request_fees_usd");
    assert!((compute - totals.compute_cost).abs() < 1e-11, "{compute} vs {}", totals.compute_cost);
    assert!((fees - totals.request_fees).abs() < 1e-11, "{fees} vs {}", totals.request_fees);
}
