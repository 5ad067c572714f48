//! Static analysis: call graphs, postdominators, control dependency and
//! related-parameter discovery.

pub mod callgraph;
pub mod control_dep;
pub mod postdom;
pub mod related;

use crate::lang::StmtId;

pub use callgraph::{CallEdge, CallGraph};
pub use control_dep::FunctionFacts;
pub use postdom::{postdominates, PostDominators};
pub use related::{
    format_related_report, get_enabler_configs, get_related_configs, get_usages,
    parse_related_report, RelatedAnalysis, RelatedSet, UsagePoint,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("unknown CFG node {0}")]
    UnknownNode(usize),
    #[error("statement {0} is not part of this function")]
    UnknownStatement(StmtId),
    #[error("unknown configuration parameter `{0}`")]
    UnknownConfig(String),
    #[error("malformed related-configs line {line}: {text:?}")]
    MalformedReport { line: usize, text: String },
}
