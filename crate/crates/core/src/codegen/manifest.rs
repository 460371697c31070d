use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::FunctionConfig;
use super::ident::TaskIdentifier;

/// File name of the manifest written next to a build artifact.
pub const MANIFEST_FILE_NAME: &str = "cppless-manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub entry_points: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub original_function_name: String,
    /// Worker artifact serving this entry.
    pub filename: String,
    pub user_meta: UserMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserMeta {
    pub ephemeral_storage: u32,
    pub memory: u32,
    pub timeout: u32,
    /// `human_id` of the task's [`TaskIdentifier`].
    pub identifier: String,
}

impl ManifestEntry {
    pub fn task_identifier(&self) -> TaskIdentifier {
        TaskIdentifier::from_human_id(self.user_meta.identifier.clone())
    }

    pub fn config(&self) -> FunctionConfig {
        FunctionConfig {
            memory: self.user_meta.memory,
            timeout: self.user_meta.timeout,
            ephemeral_storage: self.user_meta.ephemeral_storage,
        }
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest requires at least one entry point")]
    Empty,
    #[error("duplicate task identifier {identifier}: declared by {first} and {second}")]
    DuplicateIdentifier { identifier: String, first: String, second: String },
    #[error("manifest schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid config for {identifier}: {source}")]
    Config {
        identifier: String,
        #[source]
        source: super::config::ConfigError,
    },
    #[error("cannot access manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn validate(entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    if entries.is_empty() {
        return Err(ManifestError::Empty);
    }
    let mut seen: HashMap<&str, &ManifestEntry> = HashMap::new();
    for entry in entries {
        let id = entry.user_meta.identifier.as_str();
        if let Some(first) = seen.insert(id, entry) {
            return Err(ManifestError::DuplicateIdentifier {
                identifier: id.to_owned(),
                first: first.original_function_name.clone(),
                second: entry.original_function_name.clone(),
            });
        }
        entry.config().validate().map_err(|source| ManifestError::Config {
            identifier: id.to_owned(),
            source,
        })?;
    }
    Ok(())
}

/// Renders `{"entry_points": [...]}` with entries in the given order.
pub fn emit_manifest(entries: &[ManifestEntry]) -> Result<String, ManifestError> {
    validate(entries)?;
    let manifest = Manifest { entry_points: entries.to_vec() };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    Ok(text)
}

/// Parses and validates a manifest; schema errors carry the offending path.
pub fn read_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        ManifestError::Schema { path, message: err.into_inner().to_string() }
    })?;
    validate(&manifest.entry_points)?;
    Ok(manifest)
}

pub fn read_manifest_file(path: &Path) -> Result<Manifest, ManifestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    read_manifest(&text)
}

pub fn write_manifest_file(path: &Path, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    let text = emit_manifest(entries)?;
    std::fs::write(path, text)
        .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(identifier: &str, memory: u32) -> ManifestEntry {
        ManifestEntry {
            original_function_name: format!("fn_{identifier}"),
            filename: "worker".into(),
            user_meta: UserMeta {
                ephemeral_storage: 512,
                memory,
                timeout: 10,
                identifier: identifier.into(),
            },
        }
    }

    #[test]
    fn emits_figure_values() {
        let text = emit_manifest(&[entry("./examples/aws/dispatcher.cpp@1:1#0", 1024)]).unwrap();
        assert!(text.contains("\"memory\": 1024"));
        assert!(text.contains("\"timeout\": 10"));
        assert!(text.contains("\"ephemeral_storage\": 512"));
        assert!(text.starts_with("{\n  \"entry_points\": ["));
    }

    #[test]
    fn user_meta_key_order_mirrors_reference_layout() {
        let text = emit_manifest(&[entry("a@1:1#0", 1024)]).unwrap();
        let keys = ["ephemeral_storage", "memory", "timeout", "identifier"];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_is_an_error() {
        let err = emit_manifest(&[]).unwrap_err();
        assert_eq!(err.to_string(), "manifest requires at least one entry point");
    }

    #[test]
    fn duplicates_name_both_declarations() {
        let mut second = entry("x.rs@3:1#0", 512);
        second.original_function_name = "other".into();
        let err = emit_manifest(&[entry("x.rs@3:1#0", 512), second]).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ManifestError::DuplicateIdentifier { .. }));
        assert!(msg.contains("fn_x.rs@3:1#0") && msg.contains("other"), "{msg}");
    }

    #[test]
    fn round_trip_is_byte_lossless() {
        let entries = vec![entry("a.rs@1:1#0", 512), entry("a.rs@1:1#1", 2048)];
        let text = emit_manifest(&entries).unwrap();
        let parsed = read_manifest(&text).unwrap();
        assert_eq!(parsed.entry_points, entries);
        assert_eq!(emit_manifest(&parsed.entry_points).unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = r#"{"entry_points":[{"original_function_name":"f","filename":"w",
            "user_meta":{"ephemeral_storage":512,"memory":1024,"timeout":10,"identifier":"a","colour":1}}]}"#;
        match read_manifest(text).unwrap_err() {
            ManifestError::Schema { path, message } => {
                assert_eq!(path, "entry_points[0].user_meta.colour");
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_reports_field_path() {
        let text = r#"{"entry_points":[{"original_function_name":"f","filename":"w",
            "user_meta":{"ephemeral_storage":512,"memory":"lots","timeout":10,"identifier":"a"}}]}"#;
        match read_manifest(text).unwrap_err() {
            ManifestError::Schema { path, .. } => assert_eq!(path, "entry_points[0].user_meta.memory"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(matches!(emit_manifest(&[entry("a@1:1#0", 64)]), Err(ManifestError::Config { .. })));
    }
}
