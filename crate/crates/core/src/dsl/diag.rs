use std::fmt;

/// Byte range plus 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn join(self, other: SourceSpan) -> SourceSpan {
        let (first, _) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        SourceSpan {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: first.line,
            column: first.column,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes.
///
/// | code   | meaning |
/// |--------|---------|
/// | DSL001 | syntax error (including invalid UTF-8 and non-finite literals) |
/// | DSL002 | name not in scope (unknown fluent, parameter, or latent) |
/// | DSL003 | discrete table masses negative or not summing to 1 |
/// | DSL004 | gaussian stddev not a positive constant |
/// | DSL005 | action declares both effector noise and sensing |
/// | DSL006 | duplicate declaration |
/// | DSL007 | invalid or missing initial density / density parameters |
/// | DSL008 | malformed sensing action (effects, missing likelihood or reading) |
/// | DSL009 | unsupported type (only `real` exists) |
/// | DSL101 | warning: effector latent never used by an effect |
/// | DSL102 | warning: effect assigns a fluent to itself |
pub mod codes {
    pub const SYNTAX: &str = "DSL001";
    pub const UNKNOWN_NAME: &str = "DSL002";
    pub const TABLE_NOT_NORMALIZED: &str = "DSL003";
    pub const BAD_STDDEV: &str = "DSL004";
    pub const BOTH_NOISE_KINDS: &str = "DSL005";
    pub const DUPLICATE: &str = "DSL006";
    pub const BAD_DENSITY: &str = "DSL007";
    pub const BAD_SENSING: &str = "DSL008";
    pub const BAD_TYPE: &str = "DSL009";
    pub const UNUSED_LATENT: &str = "DSL101";
    pub const SELF_ASSIGNMENT: &str = "DSL102";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn warning(code: &'static str, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Multi-line rendering with the offending source line and a caret run.
    pub fn render(&self, source: &str, path: &str) -> String {
        let mut out = format!("{self}\n  --> {path}:{}:{}\n", self.span.line, self.span.column);
        if let Some(line) = source.lines().nth(self.span.line.saturating_sub(1)) {
            let width = source[self.span.start.min(source.len())..self.span.end.min(source.len())]
                .chars()
                .take_while(|c| *c != '\n')
                .count()
                .max(1);
            out.push_str(&format!(
                "   | {line}\n   | {}{}\n",
                " ".repeat(self.span.column - 1),
                "^".repeat(width)
            ));
        }
        out
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{sev}[{}] {}:{}: {}",
            self.code, self.span.line, self.span.column, self.message
        )
    }
}
