//! Names shared by both ends of every HTTP exchange.

/// Env var naming the entry a worker instance serves.
pub const ENV_ENTRY: &str = "CPLS_ENTRY";
/// Env var holding the `host:port` of the instance's runtime API.
pub const ENV_RUNTIME_API: &str = "CPLS_RUNTIME_API";

pub const HEADER_REQUEST_ID: &str = "x-cpls-request-id";
pub const HEADER_COLD: &str = "x-cpls-cold";
pub const HEADER_DURATION_MS: &str = "x-cpls-duration-ms";
pub const HEADER_INIT_MS: &str = "x-cpls-init-ms";
/// Set to `1` on invoke responses whose envelope is an error.
pub const HEADER_FUNCTION_ERROR: &str = "x-cpls-function-error";

pub const INVOKE_PREFIX: &str = "/2015-03-31/functions/";
pub const RUNTIME_NEXT_PATH: &str = "/runtime/invocation/next";
pub const FUNCTIONS_PATH: &str = "/functions";
pub const BILLING_PATH: &str = "/billing";
pub const STATS_PATH: &str = "/stats";

pub fn invoke_path(cloud_name: &str) -> String {
    format!("{INVOKE_PREFIX}{cloud_name}/invocations")
}

pub fn runtime_response_path(request_id: &str) -> String {
    format!("/runtime/invocation/{request_id}/response")
}

pub fn runtime_error_path(request_id: &str) -> String {
    format!("/runtime/invocation/{request_id}/error")
}

pub fn cold_header_value(cold: bool) -> &'static str {
    if cold {
        "1"
    } else {
        "0"
    }
}
