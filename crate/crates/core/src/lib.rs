extern crate self as offload_core;

pub mod benchkit;
pub mod codegen;
pub mod deployer;
pub mod dispatcher;
pub mod emulator;
pub mod net;
pub mod protocol;
pub mod runtime;
pub mod wireformat;

pub use codegen::{BuildMode, FunctionConfig, Task, TaskIdentifier};
pub use offload_macros::task;
