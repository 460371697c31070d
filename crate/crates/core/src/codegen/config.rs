use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_MEMORY_MB: u32 = 128;
pub const MIN_TIMEOUT_S: u32 = 1;

/// Resources requested for one deployed function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    /// MB
    pub memory: u32,
    /// seconds
    pub timeout: u32,
    /// MB
    pub ephemeral_storage: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("memory must be at least {MIN_MEMORY_MB} MB, got {0}")]
    Memory(u32),
    #[error("timeout must be at least {MIN_TIMEOUT_S} s, got {0}")]
    Timeout(u32),
}

impl FunctionConfig {
    pub fn new(memory: u32, timeout: u32, ephemeral_storage: u32) -> Result<Self, ConfigError> {
        let cfg = Self { memory, timeout, ephemeral_storage };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.memory < MIN_MEMORY_MB {
            return Err(ConfigError::Memory(self.memory));
        }
        if self.timeout < MIN_TIMEOUT_S {
            return Err(ConfigError::Timeout(self.timeout));
        }
        Ok(())
    }
}

impl Default for FunctionConfig {
    fn default() -> Self {
        Self { memory: 1024, timeout: 10, ephemeral_storage: 512 }
    }
}

/// Per-task settings written in the `#[task(...)]` attribute. Missing fields
/// fall back to the framework defaults when the task is resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfigOverrides {
    pub memory: Option<u32>,
    pub timeout: Option<u32>,
    pub ephemeral_storage: Option<u32>,
}

impl ConfigOverrides {
    pub fn resolve(&self, defaults: &FunctionConfig) -> FunctionConfig {
        FunctionConfig {
            memory: self.memory.unwrap_or(defaults.memory),
            timeout: self.timeout.unwrap_or(defaults.timeout),
            ephemeral_storage: self.ephemeral_storage.unwrap_or(defaults.ephemeral_storage),
        }
    }
}
