use std::fmt;
use std::sync::{Arc, OnceLock};

/// Dense per-dispatcher invocation number, assigned from 0 in dispatch order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalId(pub u64);

impl fmt::Display for LocalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvocationStatus {
    Pending,
    Ok,
    /// The function ran and failed, or the platform rejected the call
    /// (unknown function, internal error).
    RemoteError(String),
    /// No usable response: connection failure, timeout, or throttling that
    /// outlasted the retry budget.
    TransportError(String),
}

impl InvocationStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, InvocationStatus::Pending)
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, InvocationStatus::Ok)
    }
}

/// Bookkeeping for one dispatched task. Only terminal records leave the
/// dispatcher; `request_id`, `cold` and the timings are whatever the backend
/// reported (empty/zero when it never answered).
#[derive(Debug, Clone, PartialEq)]
pub struct InvocationRecord {
    pub local_id: LocalId,
    pub cloud_name: String,
    pub request_id: String,
    pub cold: bool,
    pub duration_ms: f64,
    pub init_ms: f64,
    pub status: InvocationStatus,
    /// HTTP attempts made, including throttled ones.
    pub attempts: u32,
    /// Pool connection the request travelled on.
    pub connection: usize,
}

impl InvocationRecord {
    pub(crate) fn pending(local_id: LocalId, cloud_name: String, connection: usize) -> Self {
        Self {
            local_id,
            cloud_name,
            request_id: String::new(),
            cold: false,
            duration_ms: 0.0,
            init_ms: 0.0,
            status: InvocationStatus::Pending,
            attempts: 0,
            connection,
        }
    }
}

/// Destination for one task's return value. Cloning shares the slot.
///
/// The dispatcher writes the value before releasing the invocation's record
/// to a waiter, so after `wait` returns a record with status `Ok` the slot
/// is readable.
pub struct ResultSlot<T> {
    cell: Arc<OnceLock<T>>,
}

impl<T> ResultSlot<T> {
    pub fn new() -> Self {
        Self { cell: Arc::new(OnceLock::new()) }
    }

    pub fn get(&self) -> Option<&T> {
        self.cell.get()
    }

    pub fn is_filled(&self) -> bool {
        self.cell.get().is_some()
    }

    /// Fails (returning the value) if the slot was already written.
    pub(crate) fn set(&self, value: T) -> Result<(), T> {
        self.cell.set(value)
    }
}

impl<T: Clone> ResultSlot<T> {
    pub fn cloned(&self) -> Option<T> {
        self.cell.get().cloned()
    }
}

impl<T> Clone for ResultSlot<T> {
    fn clone(&self) -> Self {
        Self { cell: Arc::clone(&self.cell) }
    }
}

impl<T> Default for ResultSlot<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: fmt::Debug> fmt::Debug for ResultSlot<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ResultSlot").field(&self.cell.get()).finish()
    }
}
