use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lex,
    Parse,
    Check,
    Runtime,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Lex => "lex",
            Phase::Parse => "parse",
            Phase::Check => "check",
            Phase::Runtime => "runtime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    Syntax,
    UnknownApi,
    UnknownObject,
    Arity,
    Type,
    RuntimeAction,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::Syntax => "syntax",
            DiagnosticCode::UnknownApi => "unknown_api",
            DiagnosticCode::UnknownObject => "unknown_object",
            DiagnosticCode::Arity => "arity",
            DiagnosticCode::Type => "type",
            DiagnosticCode::RuntimeAction => "runtime_action",
        }
    }
}

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub const fn new(line: usize, column: usize) -> Self {
        Self { line, column }
    }
}

/// Compiler or runtime feedback. Renders as `phase:line:col:code:message`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub struct Diagnostic {
    pub phase: Phase,
    pub line: usize,
    pub column: usize,
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    pub fn new(phase: Phase, pos: Pos, code: DiagnosticCode, message: impl Into<String>) -> Self {
        let message: String = message.into();
        // keep it to one line so it can be pasted into a prompt verbatim
        let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
        Self {
            phase,
            line: pos.line,
            column: pos.column,
            code,
            message,
        }
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.phase.as_str(),
            self.line,
            self.column,
            self.code.as_str(),
            self.message
        )
    }
}

/// One diagnostic per line, ready for a retry prompt.
pub fn render_all(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_colon_separated_single_line() {
        let d = Diagnostic::new(
            Phase::Check,
            Pos::new(3, 7),
            DiagnosticCode::UnknownObject,
            "object 'lemon_block'\n does not exist",
        );
        assert_eq!(
            d.to_string(),
            "check:3:7:unknown_object:object 'lemon_block' does not exist"
        );
    }
}
