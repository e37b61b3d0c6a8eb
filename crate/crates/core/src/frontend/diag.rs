use std::fmt;

use thiserror::Error;

/// Byte range in one source file.
///
/// Spans never take part in AST equality, so two parses of equivalent text
/// compare equal regardless of layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub file: u32,
    pub start: u32,
    pub end: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl Span {
    pub fn new(file: u32, start: usize, end: usize) -> Self {
        Span { file, start: start as u32, end: end as u32 }
    }

    pub fn to(self, other: Span) -> Span {
        Span { file: self.file, start: self.start, end: other.end.max(self.start) }
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile { name: name.into(), text: text.into() }
    }

    /// 1-based line and column of a byte offset.
    pub fn line_col(&self, offset: u32) -> (usize, usize) {
        let offset = (offset as usize).min(self.text.len());
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map_or(before.chars().count(), |nl| {
            before[nl + 1..].chars().count()
        }) + 1;
        (line, col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagKind {
    Lex,
    Parse,
    Name,
    Type,
    Uniqueness,
    Init,
    MixedLogic,
    Arity,
    Domain,
    PropClash,
    Alias,
    EnvMismatch,
    Control,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagKind,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn error(kind: DiagKind, span: Option<Span>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, kind, message: message.into(), span }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, files: &[SourceFile]) -> String {
        match self.span.and_then(|s| files.get(s.file as usize).map(|f| (s, f))) {
            Some((span, file)) => {
                let (line, col) = file.line_col(span.start);
                format!("{}:{}:{}: {}: {}", file.name, line, col, self.severity, self.message)
            }
            None => format!("<input>: {}: {}", self.severity, self.message),
        }
    }
}

/// One or more diagnostics that stopped compilation.
#[derive(Debug, Clone, Error)]
#[error("{} error(s), first: {}", .diagnostics.len(), .diagnostics.first().map(|d| d.message.as_str()).unwrap_or(""))]
pub struct CompileError {
    pub diagnostics: Vec<Diagnostic>,
}

impl CompileError {
    pub fn single(d: Diagnostic) -> Self {
        CompileError { diagnostics: vec![d] }
    }

    pub fn has(&self, kind: DiagKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }

    pub fn render(&self, files: &[SourceFile]) -> String {
        self.diagnostics.iter().map(|d| d.render(files)).collect::<Vec<_>>().join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_is_one_based() {
        let f = SourceFile::new("a.sz", "ab\ncd");
        assert_eq!(f.line_col(0), (1, 1));
        assert_eq!(f.line_col(4), (2, 2));
    }

    #[test]
    fn render_uses_file_line_col() {
        let files = vec![SourceFile::new("m.sz", "x\n  y")];
        let d = Diagnostic::error(DiagKind::Name, Some(Span::new(0, 4, 5)), "unbound `y`");
        assert_eq!(d.render(&files), "m.sz:2:3: error: unbound `y`");
    }
}
