//! Configuration performance impact model built from per-state profiles.

pub mod diff;
pub mod model;
pub mod pairs;
pub mod table;

pub use diff::{differential_critical_path, lcs_pairs, DiffCriticalPath, DiffRecord};
pub use model::{ImpactModel, ModelInput, ModelVar, PairDiff, DEFAULT_THRESHOLD, MODEL_FORMAT};
pub use pairs::{exceeds, find_suspicious_pairs, similarity, MetricRatio, SuspiciousPair};
pub use table::{
    build_cost_table, compile_atom, critical_chain, extract_input_predicate, satisfiable, smallest_model,
    CostTableRow, SplitConstraint,
};

use crate::symexec::SolverError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImpactError {
    #[error("state {state} has no call records")]
    DegenerateTrace { state: usize },
    #[error("cannot read constraint atom `{atom}`: {message}")]
    BadAtom { atom: String, message: String },
    #[error("threshold must be positive, got {0}%")]
    BadThreshold(u32),
    #[error("malformed model: {0}")]
    BadModel(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
