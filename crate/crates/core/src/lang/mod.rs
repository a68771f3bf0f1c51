//! The policy-code language: a small line-oriented DSL with `end`-delimited
//! blocks, a static checker that produces prompt-ready diagnostics, and an
//! interpreter over the kinematic world.

pub mod ast;
mod check;
pub mod diagnostic;
pub mod format;
mod interp;
mod lexer;
mod parser;
pub mod registry;

pub use ast::{Program, Stmt, StmtKind};
pub use check::{check_without_world, static_check};
pub use diagnostic::{render_all, Diagnostic, DiagnosticCode, Phase, Pos};
pub use format::format;
pub use interp::{interpret, ExecutionTrace, RuntimeFailure, TraceStep, Value, CALL_DEPTH_LIMIT, STEP_BUDGET};
pub use parser::parse;
pub use registry::{ApiRegistry, CoreApi, LearnedApi, RegistryFileError};
