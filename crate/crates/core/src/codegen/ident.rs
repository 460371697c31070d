use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

/// Prefix of every deployed function name.
pub const CLOUD_NAME_PREFIX: &str = "cppless-";
/// Hex characters of the stable hash kept in identifiers (160 bits).
pub const STABLE_HASH_HEX_LEN: usize = 40;
/// Function-name limit shared by the hosted platforms we target.
pub const MAX_CLOUD_NAME_LEN: usize = 64;

/// Stable name of one offloadable task.
///
/// `human_id` is `<source_file>@<line>:<column>#<ordinal>`; `stable_hash` is
/// the first 40 hex digits of SHA-256 over the UTF-8 `human_id`; and
/// `cloud_name` is `cppless-` followed by that hash. Nothing about the build
/// (mode, directory, profile) feeds the hash.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskIdentifier {
    pub human_id: String,
    pub stable_hash: String,
    pub cloud_name: String,
}

impl TaskIdentifier {
    /// Derives the hash and cloud name from an already formatted `human_id`.
    pub fn from_human_id(human_id: impl Into<String>) -> Self {
        let human_id = human_id.into();
        let digest = Sha256::digest(human_id.as_bytes());
        let mut stable_hash = String::with_capacity(STABLE_HASH_HEX_LEN);
        for byte in digest.iter().take(STABLE_HASH_HEX_LEN / 2) {
            write!(stable_hash, "{byte:02x}").expect("writing to a String");
        }
        let cloud_name = format!("{CLOUD_NAME_PREFIX}{stable_hash}");
        debug_assert!(cloud_name.len() <= MAX_CLOUD_NAME_LEN);
        Self { human_id, stable_hash, cloud_name }
    }
}

impl fmt::Display for TaskIdentifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.human_id, self.cloud_name)
    }
}

/// Names the task annotated at `source_file:line:column`.
///
/// `source_file` is expected repo-relative; backslashes are normalized to
/// forward slashes so Windows and Unix builds agree.
pub fn derive_task_identifier(source_file: &str, line: u32, column: u32, ordinal: u32) -> TaskIdentifier {
    debug_assert!(line >= 1 && column >= 1, "source positions are 1-based");
    let file = source_file.replace('\\', "/");
    TaskIdentifier::from_human_id(format!("{file}@{line}:{column}#{ordinal}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_id_format() {
        let id = derive_task_identifier("examples/pi.src", 12, 10, 0);
        assert_eq!(id.human_id, "examples/pi.src@12:10#0");
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            derive_task_identifier("examples/pi.src", 12, 10, 0),
            derive_task_identifier("examples/pi.src", 12, 10, 0)
        );
    }

    // Expected digests computed with Python's hashlib.sha256, truncated to 40 hex chars.
    #[test]
    fn matches_reference_sha256() {
        let a = derive_task_identifier("examples/pi.src", 12, 10, 0);
        let b = derive_task_identifier("examples/pi.src", 12, 10, 1);
        assert_eq!(a.stable_hash, "5191a61b7feb9536034f21e5c87fae16e1c52306");
        assert_eq!(b.stable_hash, "afff1c68ce88edef0bf452e4ae8e2fb753252a91");
        assert_ne!(a.stable_hash, b.stable_hash);
    }

    #[test]
    fn cloud_name_shape() {
        let id = derive_task_identifier("src/lib.rs", 1, 1, 0);
        assert_eq!(id.cloud_name.len(), 48);
        assert!(id.cloud_name.len() <= MAX_CLOUD_NAME_LEN);
        assert_eq!(id.cloud_name, format!("cppless-{}", id.stable_hash));
        assert!(id.stable_hash.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn backslashes_are_normalized() {
        assert_eq!(
            derive_task_identifier("crates\\core\\src\\lib.rs", 3, 4, 0),
            derive_task_identifier("crates/core/src/lib.rs", 3, 4, 0)
        );
    }
}
