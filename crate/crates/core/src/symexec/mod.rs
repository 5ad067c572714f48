//! Finite-domain symbolic execution of ConfScript programs.

pub mod engine;
pub mod expr;
pub mod solver;
pub mod state;

pub use engine::{concretize_all, explore, finalize_state_trace, state_trace_file, Budget, Engine, Exploration, MAX_CALL_DEPTH};
pub use expr::{atoms_of, render, ExprRef, SymExpr, SymVar, SymVarKind, VarId};
pub use solver::{SolverError, MAX_QUERY_PRODUCT};
pub use state::{ExecState, Location, PathConstraint, SymbolicValue, TaintMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymexecError {
    #[error("unknown parameter `{0}`")]
    UnknownName(String),
    #[error("configuration value {value} is outside the domain of `{name}`")]
    UnsatInitialConfig { name: String, value: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("unsatisfiable state: {0}")]
    UnsatState(String),
}
