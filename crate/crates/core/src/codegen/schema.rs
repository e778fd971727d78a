//! JSON Schema for the JSON-lines simulation trace.

use crate::runtime::trace::TRACE_SCHEMA_VERSION;
use serde_json::{json, Value};

const TIME: &str = r"^-?[0-9]+(\.[0-9]+)?$";

/// One schema covering both line shapes: the header (first line) and events.
pub fn emit_trace_schema() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": format!("urn:{TRACE_SCHEMA_VERSION}"),
        "title": "M simulation trace line",
        "version": TRACE_SCHEMA_VERSION,
        "oneOf": [
            { "$ref": "#/$defs/header" },
            { "$ref": "#/$defs/event" }
        ],
        "$defs": {
            "time": { "type": "string", "pattern": TIME },
            "header": {
                "type": "object",
                "required": ["schema", "model_hash", "seed", "epsilon", "sim_time_unit_ms"],
                "additionalProperties": false,
                "properties": {
                    "schema": { "const": TRACE_SCHEMA_VERSION },
                    "model_hash": { "type": "string", "pattern": "^[0-9a-f]{64}$" },
                    "seed": { "type": "integer", "minimum": 0 },
                    "epsilon": { "$ref": "#/$defs/time" },
                    "sim_time_unit_ms": { "$ref": "#/$defs/time" }
                }
            },
            "delta": {
                "type": "object",
                "required": ["var", "old", "new"],
                "additionalProperties": false,
                "properties": {
                    "var": { "type": "string" },
                    "old": {},
                    "new": {}
                }
            },
            "event": {
                "type": "object",
                "required": ["t", "actor", "ev", "kind", "action", "payload", "deltas"],
                "additionalProperties": false,
                "properties": {
                    "t": { "$ref": "#/$defs/time" },
                    "actor": { "type": "integer", "minimum": 0 },
                    "ev": { "type": "string" },
                    "kind": { "enum": ["initialize", "external", "conditional", "periodic"] },
                    "action": { "enum": ["dispatch", "send", "cancel", "terminate"] },
                    "payload": { "type": "object" },
                    "deltas": { "type": "array", "items": { "$ref": "#/$defs/delta" } },
                    "to": { "type": "integer", "minimum": 0 },
                    "at": { "$ref": "#/$defs/time" }
                }
            }
        }
    })
}
