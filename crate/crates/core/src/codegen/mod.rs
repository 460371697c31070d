//! Single-source task expansion.
//!
//! `#[task]` turns one annotated function into both halves of an offloaded
//! call: a host stub that serializes the captures and hands them to the
//! dispatcher, and a worker entry that deserializes them, runs the body and
//! serializes the result. Each task is named by the source position of its
//! annotation, and the set of tasks in a build is described by a JSON
//! manifest that the deployer consumes.
//!
//! Which half a binary actually runs is decided at build time by
//! `CPLS_MODE` (see [`build_mode!`](crate::build_mode)); both halves are
//! always compiled so names and field orders can be checked from either side.
//!
//! ```
//! use offload_core::codegen::Task;
//!
//! #[offload_core::task(memory = 512)]
//! fn add(a: u32, b: u32) -> u64 {
//!     u64::from(a) + u64::from(b)
//! }
//!
//! assert_eq!(Add::new(2, 3).run().unwrap(), 5);
//! assert_eq!(Add::site().config.memory, Some(512));
//! assert!(Add::identifier().cloud_name.starts_with("cppless-"));
//! ```
//!
//! Captures are taken by value:
//!
//! ```compile_fail
//! #[offload_core::task]
//! fn count(xs: &[u32]) -> usize {
//!     xs.len()
//! }
//! ```
//!
//! and must have a wire encoding:
//!
//! ```compile_fail
//! struct Opaque;
//!
//! #[offload_core::task]
//! fn keep(x: Opaque) {}
//! ```

mod config;
mod ident;
mod manifest;
mod registry;
mod task;

pub use config::{ConfigError, ConfigOverrides, FunctionConfig, MIN_MEMORY_MB, MIN_TIMEOUT_S};
pub use ident::{
    derive_task_identifier, TaskIdentifier, CLOUD_NAME_PREFIX, MAX_CLOUD_NAME_LEN, STABLE_HASH_HEX_LEN,
};
pub use manifest::{
    emit_manifest, read_manifest, read_manifest_file, write_manifest_file, Manifest, ManifestEntry,
    ManifestError, UserMeta, MANIFEST_FILE_NAME,
};
pub use registry::{EntryRegistry, RegistryError, TaskSet};
pub use task::{
    expand_task, BuildMode, EntryError, EntryWrapper, Expansion, HostStub, ResponseError, Task,
    TaskDefinition, TaskFailure, TaskSite,
};

/// Environment variable selecting the build mode at compile time.
pub const BUILD_MODE_ENV: &str = "CPLS_MODE";
