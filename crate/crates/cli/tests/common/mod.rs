#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use offload_core::codegen::{TaskIdentifier, MANIFEST_FILE_NAME};
use offload_core::deployer;
use offload_core::emulator::{Emulator, PlatformConfig};

/// `offload-app` built in both modes into a target directory of its own.
pub struct Artifacts {
    pub dir: PathBuf,
    pub worker: PathBuf,
    pub host: PathBuf,
    /// `ids` output of: host build, host build after a clean, worker build.
    pub ids: [String; 3],
    pub build_time: Duration,
}

fn target_root() -> PathBuf {
    // <target>/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().expect("test executable path");
    exe.ancestors().nth(3).expect("target directory").to_path_buf()
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().to_path_buf()
}

fn cargo(nested: &Path, args: &[&str], mode: Option<&str>) {
    let cargo = option_env!("CARGO").unwrap_or("cargo");
    let mut cmd = Command::new(cargo);
    cmd.args(args)
        .arg("--target-dir")
        .arg(nested)
        .current_dir(workspace_root())
        .env_remove("CARGO_TARGET_DIR")
        .env_remove("CARGO_BUILD_TARGET_DIR");
    match mode {
        Some(m) => cmd.env("CPLS_MODE", m),
        None => cmd.env_remove("CPLS_MODE"),
    };
    let status = cmd.status().expect("run cargo");
    assert!(status.success(), "cargo {args:?} failed");
}

fn build_app(nested: &Path, mode: &str, dest: &Path) {
    cargo(nested, &["build", "-q", "-p", "offload-cli", "--bin", "offload-app"], Some(mode));
    let built = nested.join("debug").join(format!("offload-app{}", std::env::consts::EXE_SUFFIX));
    std::fs::copy(&built, dest).expect("copy built app");
}

fn ids_of(bin: &Path) -> String {
    let out = Command::new(bin).arg("ids").env_remove("CPLS_ENTRY").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn artifacts() -> &'static Artifacts {
    static CELL: OnceLock<Artifacts> = OnceLock::new();
    CELL.get_or_init(|| {
        let started = Instant::now();
        let nested = target_root().join("cpls-nested");
        let dir = nested.join(format!("artifacts-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let worker = dir.join("offload-worker");
        let host = dir.join("offload-app");
        let host_again = dir.join("offload-app-rebuilt");

        build_app(&nested, "serverless", &worker);
        build_app(&nested, "host", &host);
        cargo(&nested, &["clean", "-q", "-p", "offload-cli"], None);
        build_app(&nested, "host", &host_again);

        let ids = [ids_of(&host), ids_of(&host_again), ids_of(&worker)];
        Artifacts { dir, worker, host, ids, build_time: started.elapsed() }
    })
}

pub fn run_app(bin: &Path, args: &[&str]) -> Output {
    Command::new(bin).args(args).env_remove("CPLS_ENTRY").output().unwrap()
}

/// Writes the manifest with the host build and returns its path.
pub fn write_manifest(dir: &Path) -> PathBuf {
    let path = dir.join(MANIFEST_FILE_NAME);
    let out = run_app(&artifacts().host, &["manifest", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

/// Starts an emulator and deploys every task of the demo app onto it.
pub fn deployed_emulator(config: PlatformConfig) -> (Emulator, tempfile::TempDir) {
    let emulator = Emulator::start(config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    deployer::deploy(&manifest, &artifacts().worker, &emulator.url()).unwrap();
    (emulator, dir)
}

pub fn cloud_name<T: offload_core::Task>() -> String {
    let id: TaskIdentifier = T::identifier();
    id.cloud_name
}
