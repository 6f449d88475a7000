//! Error types shared across the analysis stages.

use thiserror::Error;

/// Errors raised while parsing a bundle document.
#[derive(Debug, Error)]
pub enum ParseError {
    /// Malformed JSON or a document that violates the bundle schema
    /// (including unknown keys, which are rejected in strict mode).
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// A `call` statement names a method that does not exist in its component.
    #[error("unknown callee `{callee}` in {component}.{method}")]
    UnknownCallee {
        component: String,
        method: String,
        callee: String,
    },
    /// Two components of the same app share a name.
    #[error("duplicate component name `{name}` in app `{app}`")]
    DuplicateComponent { app: String, name: String },
}

impl ParseError {
    /// Stable machine-readable code, one per error kind.
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "syntax",
            ParseError::UnknownCallee { .. } => "unknown-callee",
            ParseError::DuplicateComponent { .. } => "duplicate-component",
        }
    }
}

/// Errors raised while loading a catalog document.
#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate api name `{name}`")]
    DuplicateApi { name: String },
    #[error("unknown level label `{level}` for api `{name}`")]
    UnknownLevel { name: String, level: String },
    #[error("api `{name}` of class `{class}` is missing its `{field}` field")]
    MissingField {
        name: String,
        class: String,
        field: String,
    },
    #[error("unknown api class `{class}` for api `{name}`")]
    UnknownClass { name: String, class: String },
}

/// Errors raised while assembling or querying flow graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    /// An intra-component flow cites a point id that the scan never produced.
    #[error("flow references unknown point `{point}`")]
    DanglingFlow { point: String },
    /// A slice was requested from a point that is not an exit of the graph's
    /// component.
    #[error("unknown exit `{point}`")]
    UnknownExit { point: String },
}
