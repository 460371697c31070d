use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::error::CarrierError;

pub const PAYLOAD_KEY: &str = "payload";

/// Wraps raw bytes as `{"payload": "<base64>"}` using the standard alphabet
/// with `=` padding.
pub fn wrap_base64_json(bytes: &[u8]) -> String {
    let encoded = STANDARD.encode(bytes);
    let mut out = String::with_capacity(encoded.len() + 16);
    out.push_str("{\"payload\": \"");
    out.push_str(&encoded);
    out.push_str("\"}");
    out
}

/// Inverse of [`wrap_base64_json`]. The carrier must be a JSON object whose
/// only key is `payload`.
pub fn unwrap_base64_json(text: &str) -> Result<Vec<u8>, CarrierError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CarrierError::Json(e.to_string()))?;
    let serde_json::Value::Object(map) = value else {
        return Err(CarrierError::NotAnObject);
    };
    if let Some(key) = map.keys().find(|k| *k != PAYLOAD_KEY) {
        if !map.contains_key(PAYLOAD_KEY) {
            return Err(CarrierError::MissingPayload);
        }
        return Err(CarrierError::UnexpectedKey(key.clone()));
    }
    let payload = map.get(PAYLOAD_KEY).ok_or(CarrierError::MissingPayload)?;
    let serde_json::Value::String(encoded) = payload else {
        return Err(CarrierError::PayloadNotString);
    };
    STANDARD.decode(encoded).map_err(|e| CarrierError::Base64(e.to_string()))
}
