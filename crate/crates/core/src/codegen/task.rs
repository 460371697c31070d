use std::fmt;
use std::marker::PhantomData;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use thiserror::Error;

use super::config::{ConfigOverrides, FunctionConfig};
use super::ident::{derive_task_identifier, TaskIdentifier};
use crate::wireformat::{DecodeError, Envelope, EnvelopeKind, Field, Reader, Schema, Wire};

/// Where and how a task was declared. Produced by `#[task]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSite {
    pub function: &'static str,
    pub module_path: &'static str,
    pub source_file: &'static str,
    pub line: u32,
    pub column: u32,
    pub ordinal: u32,
    pub config: ConfigOverrides,
}

impl TaskSite {
    pub fn identifier(&self) -> TaskIdentifier {
        derive_task_identifier(self.source_file, self.line, self.column, self.ordinal)
    }

    /// Fully qualified name of the annotated function.
    pub fn qualified_name(&self) -> String {
        format!("{}::{}", self.module_path, self.function)
    }
}

/// Failure raised by a task body. Travels back to the caller as the message
/// of an error envelope.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct TaskFailure {
    pub message: String,
}

impl TaskFailure {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

/// An offloadable unit of work: its captured values plus the code to run on
/// them. Implemented by `#[task]`; hand-written implementations must keep
/// `encode_captures` and `decode_captures` in the same field order.
pub trait Task: Sized + Send + 'static {
    type Output: Wire + Send + Sync + 'static;

    fn site() -> TaskSite;
    fn captured_fields() -> Vec<Field>;
    fn encode_captures(&self, out: &mut Vec<u8>);
    fn decode_captures(reader: &mut Reader<'_>) -> Result<Self, DecodeError>;
    fn run(self) -> Result<Self::Output, TaskFailure>;

    fn identifier() -> TaskIdentifier {
        Self::site().identifier()
    }
}

/// Runtime description of a task, independent of its Rust type.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDefinition {
    pub function_name: String,
    pub source_file: String,
    pub line: u32,
    pub column: u32,
    pub ordinal: u32,
    pub captured_fields: Vec<Field>,
    pub return_schema: Schema,
    pub config: FunctionConfig,
    pub identifier: TaskIdentifier,
}

impl TaskDefinition {
    pub fn of<T: Task>(defaults: &FunctionConfig) -> Self {
        let site = T::site();
        Self {
            function_name: site.qualified_name(),
            source_file: site.source_file.replace('\\', "/"),
            line: site.line,
            column: site.column,
            ordinal: site.ordinal,
            captured_fields: T::captured_fields(),
            return_schema: T::Output::schema(),
            config: site.config.resolve(defaults),
            identifier: site.identifier(),
        }
    }

    /// Schema of the request body: a record of the captures in order.
    pub fn capture_schema(&self) -> Schema {
        Schema::Record(self.captured_fields.clone())
    }

    pub fn location(&self) -> String {
        format!("{}:{}:{}", self.source_file, self.line, self.column)
    }
}

/// Which side of the split a build produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuildMode {
    /// Client program; task call sites dispatch remotely.
    Host,
    /// Worker program; task bodies are served from the entry registry.
    Serverless,
}

impl BuildMode {
    /// Interprets the build-time `CPLS_MODE` value. Unset means host.
    ///
    /// Used in const context by [`build_mode!`](crate::build_mode), where an
    /// unknown value becomes a compile error.
    pub const fn from_build_env(value: Option<&str>) -> BuildMode {
        match value {
            None => BuildMode::Host,
            Some(v) if const_str_eq(v, "host") || const_str_eq(v, "") => BuildMode::Host,
            Some(v) if const_str_eq(v, "serverless") => BuildMode::Serverless,
            Some(_) => panic!("CPLS_MODE must be \"host\" or \"serverless\""),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BuildMode::Host => "host",
            BuildMode::Serverless => "serverless",
        }
    }
}

impl fmt::Display for BuildMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const fn const_str_eq(a: &str, b: &str) -> bool {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    if a.len() != b.len() {
        return false;
    }
    let mut i = 0;
    while i < a.len() {
        if a[i] != b[i] {
            return false;
        }
        i += 1;
    }
    true
}

/// Build mode of the crate invoking the macro, read from `CPLS_MODE` when
/// that crate is compiled.
#[macro_export]
macro_rules! build_mode {
    () => {{
        const MODE: $crate::codegen::BuildMode =
            $crate::codegen::BuildMode::from_build_env(::core::option_env!("CPLS_MODE"));
        MODE
    }};
}

/// Host-side half of a task: turns a bound task into a request envelope and
/// a response envelope back into the task's return value.
pub struct HostStub<T: Task> {
    pub identifier: TaskIdentifier,
    _task: PhantomData<fn(T) -> T::Output>,
}

impl<T: Task> Clone for HostStub<T> {
    fn clone(&self) -> Self {
        Self { identifier: self.identifier.clone(), _task: PhantomData }
    }
}

impl<T: Task> fmt::Debug for HostStub<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HostStub").field("identifier", &self.identifier).finish()
    }
}

/// Why a response envelope did not yield a value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("remote task failed: {0}")]
    Remote(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl<T: Task> HostStub<T> {
    pub fn new() -> Self {
        Self { identifier: T::identifier(), _task: PhantomData }
    }

    /// Serializes the captures, in declaration order, into a request envelope.
    pub fn request(&self, task: &T) -> Envelope {
        let mut body = Vec::new();
        task.encode_captures(&mut body);
        Envelope::request(body)
    }

    pub fn response(&self, envelope: &Envelope) -> Result<T::Output, ResponseError> {
        match envelope.kind {
            EnvelopeKind::ResponseOk => crate::wireformat::from_bytes::<T::Output>(&envelope.body)
                .map_err(|e| ResponseError::Malformed(e.to_string())),
            EnvelopeKind::ResponseErr => {
                Err(ResponseError::Remote(envelope.error_message().unwrap_or_default()))
            }
            EnvelopeKind::Request => {
                Err(ResponseError::Malformed("request envelope received as response".into()))
            }
        }
    }
}

impl<T: Task> Default for HostStub<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Why a worker-side wrapper could not produce a value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntryError {
    #[error("failed to decode captures: {0}")]
    Decode(#[from] DecodeError),
    #[error("task failed: {0}")]
    Task(#[from] TaskFailure),
    #[error("task panicked: {0}")]
    Panic(String),
}

type EntryFn = dyn Fn(&[u8]) -> Result<Vec<u8>, EntryError> + Send + Sync;

/// Worker-side half of a task: decode captures, run the body, encode the
/// return value. Panics in the body are caught and reported as
/// [`EntryError::Panic`].
#[derive(Clone)]
pub struct EntryWrapper {
    pub definition: TaskDefinition,
    call: Arc<EntryFn>,
}

impl fmt::Debug for EntryWrapper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntryWrapper").field("identifier", &self.definition.identifier).finish()
    }
}

impl EntryWrapper {
    pub fn of<T: Task>(defaults: &FunctionConfig) -> Self {
        let call = |body: &[u8]| -> Result<Vec<u8>, EntryError> {
            let mut reader = Reader::new(body);
            let task = T::decode_captures(&mut reader)?;
            reader.finish()?;
            let output = catch_unwind(AssertUnwindSafe(|| task.run()))
                .map_err(|payload| EntryError::Panic(panic_message(payload.as_ref())))??;
            Ok(crate::wireformat::to_bytes(&output))
        };
        Self { definition: TaskDefinition::of::<T>(defaults), call: Arc::new(call) }
    }

    pub fn cloud_name(&self) -> &str {
        &self.definition.identifier.cloud_name
    }

    /// Runs the task on an encoded capture body, returning the encoded result.
    pub fn call(&self, body: &[u8]) -> Result<Vec<u8>, EntryError> {
        (self.call)(body)
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_owned()
    }
}

/// The code a task turns into for one build mode.
pub enum Expansion<T: Task> {
    Host(HostStub<T>),
    Serverless(EntryWrapper),
}

/// Expands a task for `mode`.
pub fn expand_task<T: Task>(mode: BuildMode, defaults: &FunctionConfig) -> Expansion<T> {
    match mode {
        BuildMode::Host => Expansion::Host(HostStub::new()),
        BuildMode::Serverless => Expansion::Serverless(EntryWrapper::of::<T>(defaults)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_env_parsing() {
        assert_eq!(BuildMode::from_build_env(None), BuildMode::Host);
        assert_eq!(BuildMode::from_build_env(Some("host")), BuildMode::Host);
        assert_eq!(BuildMode::from_build_env(Some("serverless")), BuildMode::Serverless);
    }

    #[test]
    #[should_panic(expected = "CPLS_MODE")]
    fn unknown_build_env_panics() {
        BuildMode::from_build_env(Some("cloud"));
    }

    #[test]
    fn macro_reads_this_crates_build_env() {
        let expected = BuildMode::from_build_env(option_env!("CPLS_MODE"));
        assert_eq!(crate::build_mode!(), expected);
    }
}
