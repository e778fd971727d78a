//! Diagnostics shared by every compiler phase.

use crate::syntax::token::{SourceMap, Span};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// One reported problem. `rule` names the check that fired, e.g. `binary-div`,
/// `syntax`, `lex`, `include`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub rule: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(span: Span, rule: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span,
            rule: rule.into(),
            message: message.into(),
        }
    }

    pub fn warning(span: Span, rule: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            span,
            rule: rule.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `severity file:line:col RULE message`
    pub fn render(&self, sources: &SourceMap) -> String {
        format!(
            "{} {}:{}:{} {} {}",
            self.severity,
            sources.path(self.span.file),
            self.span.line,
            self.span.column,
            self.rule,
            self.message
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

pub fn render_all(diags: &[Diagnostic], sources: &SourceMap) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.render(sources));
        out.push('\n');
    }
    out
}
