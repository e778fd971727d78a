//! Trace records and their JSON-lines encoding.

use rust_decimal::Decimal;
use serde::Serialize;
use serde_json::Value as Json;

/// Version tag shared by the trace header and the emitted schema.
pub const TRACE_SCHEMA_VERSION: &str = "m-trace/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Dispatch,
    Send,
    Cancel,
    Terminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta {
    pub var: String,
    pub old: Json,
    pub new: Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    #[serde(serialize_with = "decimal_text")]
    pub t: Decimal,
    pub actor: u32,
    pub ev: String,
    pub kind: String,
    pub action: Action,
    pub payload: Json,
    pub deltas: Vec<Delta>,
    /// Receiver of a send.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<u32>,
    /// Delivery time of a send.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_decimal_text")]
    pub at: Option<Decimal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceHeader {
    pub schema: String,
    pub model_hash: String,
    pub seed: u64,
    #[serde(serialize_with = "decimal_text")]
    pub epsilon: Decimal,
    /// Length of one simulation time unit in milliseconds.
    #[serde(serialize_with = "decimal_text")]
    pub sim_time_unit_ms: Decimal,
}

/// Canonical text of a timestamp: no trailing zeros.
pub fn time_text(d: Decimal) -> String {
    d.normalize().to_string()
}

fn decimal_text<S: serde::Serializer>(d: &Decimal, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&time_text(*d))
}

fn opt_decimal_text<S: serde::Serializer>(d: &Option<Decimal>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.serialize_str(&time_text(*d)),
        None => s.serialize_none(),
    }
}

/// Header line followed by one line per event.
pub fn to_jsonl(header: &TraceHeader, events: &[TraceEvent]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}
