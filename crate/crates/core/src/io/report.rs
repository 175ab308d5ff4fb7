use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Wraps a report body with its schema header.
///
/// Reports carry no timestamps, so a fixed seed and configuration reproduce
/// them byte for byte.
pub fn report(kind: &str, body: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "body": body,
    })
}
