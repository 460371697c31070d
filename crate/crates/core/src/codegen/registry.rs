use std::collections::BTreeMap;
use std::sync::OnceLock;

use thiserror::Error;

use super::config::FunctionConfig;
use super::manifest::{ManifestEntry, UserMeta};
use super::task::{EntryWrapper, Task, TaskDefinition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("entry {cloud_name} registered twice ({first} and {second})")]
    Duplicate { cloud_name: String, first: String, second: String },
    #[error("the process-wide entry registry is already installed")]
    AlreadyInstalled,
}

/// Worker entries keyed by cloud name. Built once, read-only afterward.
#[derive(Debug, Clone, Default)]
pub struct EntryRegistry {
    entries: BTreeMap<String, EntryWrapper>,
}

static GLOBAL_REGISTRY: OnceLock<EntryRegistry> = OnceLock::new();

impl EntryRegistry {
    pub fn new(wrappers: impl IntoIterator<Item = EntryWrapper>) -> Result<Self, RegistryError> {
        let mut entries: BTreeMap<String, EntryWrapper> = BTreeMap::new();
        for wrapper in wrappers {
            let key = wrapper.cloud_name().to_owned();
            if let Some(first) = entries.get(&key) {
                return Err(RegistryError::Duplicate {
                    cloud_name: key,
                    first: first.definition.location(),
                    second: wrapper.definition.location(),
                });
            }
            entries.insert(key, wrapper);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, cloud_name: &str) -> Option<&EntryWrapper> {
        self.entries.get(cloud_name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EntryWrapper> {
        self.entries.values()
    }

    /// Publishes this registry for the whole process. Only the first call
    /// succeeds.
    pub fn install(self) -> Result<&'static EntryRegistry, RegistryError> {
        let mut slot = Some(self);
        let installed = GLOBAL_REGISTRY.get_or_init(|| slot.take().expect("first init"));
        match slot {
            None => Ok(installed),
            Some(_) => Err(RegistryError::AlreadyInstalled),
        }
    }

    pub fn global() -> Option<&'static EntryRegistry> {
        GLOBAL_REGISTRY.get()
    }
}

/// The tasks one source tree exports. Both halves of the build derive from
/// it: the serverless registry and the manifest, so the two always name the
/// same set of entries.
#[derive(Debug, Clone)]
pub struct TaskSet {
    defaults: FunctionConfig,
    wrappers: Vec<EntryWrapper>,
}

impl TaskSet {
    /// `defaults` fill in any resource the `#[task]` attribute leaves out.
    pub fn new(defaults: FunctionConfig) -> Self {
        Self { defaults, wrappers: Vec::new() }
    }

    pub fn with<T: Task>(mut self) -> Self {
        self.wrappers.push(EntryWrapper::of::<T>(&self.defaults));
        self
    }

    pub fn defaults(&self) -> &FunctionConfig {
        &self.defaults
    }

    pub fn definitions(&self) -> impl Iterator<Item = &TaskDefinition> {
        self.wrappers.iter().map(|w| &w.definition)
    }

    pub fn len(&self) -> usize {
        self.wrappers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wrappers.is_empty()
    }

    /// Manifest rows in declaration order; every row points at `filename`,
    /// the single worker artifact.
    pub fn manifest_entries(&self, filename: &str) -> Vec<ManifestEntry> {
        self.definitions()
            .map(|def| ManifestEntry {
                original_function_name: def.function_name.clone(),
                filename: filename.to_owned(),
                user_meta: UserMeta {
                    ephemeral_storage: def.config.ephemeral_storage,
                    memory: def.config.memory,
                    timeout: def.config.timeout,
                    identifier: def.identifier.human_id.clone(),
                },
            })
            .collect()
    }

    pub fn registry(&self) -> Result<EntryRegistry, RegistryError> {
        EntryRegistry::new(self.wrappers.iter().cloned())
    }
}
