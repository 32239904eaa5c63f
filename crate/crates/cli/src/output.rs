//! Printing conventions shared by every command.

use serde::Serialize;
use serde_json::{json, Value};

/// Version of every JSON document and record the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// A JSON document tagged with the schema version and the command name.
pub fn envelope(command: &str, body: impl Serialize) -> Value {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    let body = serde_json::to_value(body).expect("command output serializes");
    if let (Value::Object(doc), Value::Object(body)) = (&mut doc, body) {
        doc.extend(body);
    }
    doc
}

pub fn print_json(doc: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(doc).expect("JSON value serializes")
    );
}

/// Comma-separated 1-based indices, or `none`.
pub fn index_list(indices: &[usize]) -> String {
    if indices.is_empty() {
        "none".into()
    } else {
        indices
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}
