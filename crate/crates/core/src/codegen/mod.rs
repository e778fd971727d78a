//! Generators over the decorated model.
//!
//! Each generator is a pure function of a [`Model`] and [`GenOptions`]. New
//! targets are added by extending [`GENERATORS`] and [`generate`].

pub mod rebeca;
pub mod schema;

use crate::semantics::ir::Model;
use crate::syntax::token::Span;
use serde::Serialize;
use thiserror::Error;

pub use rebeca::RebecaOutput;
pub use schema::emit_trace_schema;

/// Registered generators with a description of the fragment each accepts.
pub const GENERATORS: &[(&str, &str)] = &[
    (
        "rebeca",
        "Timed Rebeca: actor classes, scalar and discretized state, do[every], receive responses, tell with after",
    ),
    ("trace-schema", "JSON Schema of the simulation trace format; accepts any model"),
];

pub fn list_generators() -> Vec<(&'static str, &'static str)> {
    GENERATORS.to_vec()
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Multiplier used by the generated `discretize` / `undiscretize` pair.
    pub scale: i64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { scale: rebeca::DEFAULT_SCALE }
    }
}

/// A construct the target cannot express.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unsupported {
    pub construct: String,
    pub span: Span,
    pub message: String,
}

/// What a generator mapped and what it left out on purpose.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GenerationReport {
    pub generator: String,
    pub mapped: Vec<String>,
    pub skipped: Vec<String>,
}

impl GenerationReport {
    pub fn new(generator: &str) -> Self {
        GenerationReport {
            generator: generator.to_string(),
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unknown generator `{name}`; available: {}", available().join(", "))]
    UnknownGenerator { name: String },
    #[error("{} unsupported feature(s)", .0.len())]
    Unsupported(Vec<Unsupported>),
}

fn available() -> Vec<&'static str> {
    GENERATORS.iter().map(|(n, _)| *n).collect()
}

/// Generated artifact text and its report.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub text: String,
    pub report: GenerationReport,
}

/// Runs the generator called `name`.
pub fn generate(name: &str, model: &Model, opts: &GenOptions) -> Result<Artifact, GenError> {
    match name {
        "rebeca" => rebeca::generate(model, opts)
            .map(|o| Artifact { text: o.source, report: o.report })
            .map_err(GenError::Unsupported),
        "trace-schema" => {
            let mut report = GenerationReport::new("trace-schema");
            report.mapped.push("trace header and event records".into());
            let text = serde_json::to_string_pretty(&emit_trace_schema()).expect("schema serializes") + "\n";
            Ok(Artifact { text, report })
        }
        other => Err(GenError::UnknownGenerator { name: other.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_both_generators() {
        let names: Vec<_> = list_generators().into_iter().map(|(n, _)| n).collect();
        assert!(names.contains(&"rebeca"));
        assert!(names.contains(&"trace-schema"));
    }

    #[test]
    fn unknown_generator_lists_available() {
        let e = GenError::UnknownGenerator { name: "nosuch".into() };
        let msg = e.to_string();
        assert!(msg.contains("rebeca") && msg.contains("trace-schema"), "{msg}");
    }
}
