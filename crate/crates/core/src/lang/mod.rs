//! ConfScript: lexer, parser, semantic checks, pretty printer and CFG lowering.

pub mod ast;
pub mod cfg;
mod lexer;
mod parser;
pub mod printer;
mod sema;

use std::fmt;

pub use ast::*;
pub use cfg::{lower_to_cfg, lower_function, BlockId, Cfg};
pub use parser::parse_expr;
pub use printer::print_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub pos: Pos,
    pub message: String,
    /// Token descriptions that would have been accepted (syntax errors only).
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            kind: DiagKind::Syntax,
            pos,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn semantic(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            kind: DiagKind::Semantic,
            pos,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    /// `file:line:col: error: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: error: {self}", self.pos.line, self.pos.col)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {}: {}", .0.pos, .0)]
    Syntax(Diagnostic),
    #[error("{} semantic error(s), first at {}: {}", .0.len(), .0[0].pos, .0[0])]
    Semantic(Vec<Diagnostic>),
}

impl ParseError {
    pub fn diagnostics(&self) -> Vec<&Diagnostic> {
        match self {
            ParseError::Syntax(d) => vec![d],
            ParseError::Semantic(ds) => ds.iter().collect(),
        }
    }

    pub fn render(&self, file: &str) -> String {
        self.diagnostics()
            .iter()
            .map(|d| d.render(file))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Parse and check a ConfScript program.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let program = parser::parse_program(source).map_err(ParseError::Syntax)?;
    let diags = sema::check(&program);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(ParseError::Semantic(diags))
    }
}
