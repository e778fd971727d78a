//! Compiler and discrete-event simulator for the M modeling language.

pub mod codegen;
pub mod diag;
pub mod ops;
pub mod runtime;
pub mod semantics;
pub mod stdlib;
pub mod syntax;
pub mod types;
pub mod value;

use diag::Diagnostic;
use semantics::Model;
use std::path::Path;
use syntax::{LoadOptions, LoadedUnit};

/// Result of loading and analyzing one model.
#[derive(Debug)]
pub struct Compilation {
    pub unit: LoadedUnit,
    /// Present when there were no errors.
    pub model: Option<Model>,
    /// Load and analysis diagnostics, in that order.
    pub diagnostics: Vec<Diagnostic>,
}

impl Compilation {
    fn from_unit(unit: LoadedUnit) -> Self {
        let mut diagnostics = unit.diagnostics.clone();
        let model = if diag::has_errors(&diagnostics) {
            None
        } else {
            let (model, d) = semantics::analyze(&unit);
            diagnostics.extend(d);
            model
        };
        Compilation {
            unit,
            model,
            diagnostics,
        }
    }

    pub fn has_errors(&self) -> bool {
        diag::has_errors(&self.diagnostics)
    }

    /// Diagnostics in the `severity file:line:col RULE message` format.
    pub fn render_diagnostics(&self) -> String {
        diag::render_all(&self.diagnostics, &self.unit.sources)
    }
}

pub fn compile_file(path: &Path, opts: &LoadOptions) -> Result<Compilation, String> {
    Ok(Compilation::from_unit(syntax::load_file(path, opts)?))
}

pub fn compile_source(name: &str, text: &str, opts: &LoadOptions) -> Compilation {
    Compilation::from_unit(syntax::load_source(name, text, None, opts))
}
