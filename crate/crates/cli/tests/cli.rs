mod common;

use std::path::Path;
use std::process::{Command, Output};

use offload_core::benchkit::tasks::Answer;
use offload_core::codegen::HostStub;
use offload_core::deployer::{
    EXIT_INVALID_INPUT, EXIT_NOT_FOUND, EXIT_OK, EXIT_UNREACHABLE,
};
use offload_core::emulator::{Emulator, PlatformConfig};
use offload_core::wireformat::wrap_base64_json;

fn offload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offload")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn answer_payload(dir: &Path) -> String {
    let path = dir.join("payload.json");
    let env = HostStub::<Answer>::new().request(&Answer::new());
    std::fs::write(&path, wrap_base64_json(&env.to_bytes())).unwrap();
    path.to_str().unwrap().to_owned()
}

fn closed_port_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

#[test]
fn invoke_unknown_function_exits_not_found() {
    let emulator = Emulator::start(PlatformConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let payload = answer_payload(dir.path());
    let out = offload(&["invoke", "--backend", &emulator.url(), "--name", "missing", "--payload", &payload]);
    assert_eq!(code(&out), EXIT_NOT_FOUND);
}

#[test]
fn invoke_rejects_malformed_payload_before_sending() {
    let dir = tempfile::tempdir().unwrap();
    let payload = dir.path().join("bad.json");
    std::fs::write(&payload, "{\"payload\": \"!!not base64\"}").unwrap();
    let out = offload(&[
        "invoke",
        "--backend",
        &closed_port_url(),
        "--name",
        "x",
        "--payload",
        payload.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), EXIT_INVALID_INPUT);
}

#[test]
fn invoke_unreachable_backend() {
    let dir = tempfile::tempdir().unwrap();
    let payload = answer_payload(dir.path());
    let out = offload(&["invoke", "--backend", &closed_port_url(), "--name", "x", "--payload", &payload]);
    assert_eq!(code(&out), EXIT_UNREACHABLE);
}

#[test]
fn list_unreachable_backend() {
    assert_eq!(code(&offload(&["list", "--backend", &closed_port_url()])), EXIT_UNREACHABLE);
}

#[test]
fn deploy_missing_package() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::write_manifest(dir.path());
    let out = offload(&[
        "deploy",
        "--manifest",
        manifest.to_str().unwrap(),
        "--package",
        dir.path().join("nope").to_str().unwrap(),
        "--backend",
        &closed_port_url(),
    ]);
    assert_eq!(code(&out), EXIT_INVALID_INPUT);
}

#[test]
fn deploy_rejects_manifest_schema_violation() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, r#"{"entry_points": [{"filename": "a.rs"}]}"#).unwrap();
    let out = offload(&[
        "deploy",
        "--manifest",
        manifest.to_str().unwrap(),
        "--package",
        common::artifacts().worker.to_str().unwrap(),
        "--backend",
        &closed_port_url(),
    ]);
    assert_eq!(code(&out), EXIT_INVALID_INPUT, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invoke_deployed_function() {
    let (emulator, dir) = common::deployed_emulator(PlatformConfig::default());
    let payload = answer_payload(dir.path());
    let name = common::cloud_name::<Answer>();
    let out = offload(&["invoke", "--backend", &emulator.url(), "--name", &name, "--payload", &payload]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("status 200"), "{stdout}");
    assert!(stdout.contains("x-cpls-cold: 1"), "{stdout}");
    // 42u32 little-endian
    assert!(stdout.contains("2a000000"), "{stdout}");
}

#[test]
fn package_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("worker");
    std::fs::write(&bin, b"#!/bin/sh\nexit 0\n").unwrap();
    let zips: Vec<Vec<u8>> = ["a.zip", "b.zip"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let res = offload(&["package", "--in", bin.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert_eq!(code(&res), EXIT_OK);
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(zips[0], zips[1]);
}
