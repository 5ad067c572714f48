//! End-to-end analysis of one program: related parameters, exploration, profiles, model.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{AnalysisError, RelatedAnalysis, RelatedSet};
use crate::impact::{ImpactError, ImpactModel, ModelInput};
use crate::lang::{Program, Value};
use crate::symexec::{explore, Budget, SymexecError};
use crate::trace::{StateTrace, TraceFile};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Symexec(#[from] SymexecError),
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error("no target parameter and no symbolic parameters given")]
    NoTarget,
}

/// Which configuration parameters to make symbolic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolicSource {
    /// The target plus its enablers and influenced parameters.
    Target(String),
    /// An explicit list; the first name is reported as the target.
    Explicit(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub software: String,
    pub source: SymbolicSource,
    /// Concrete values for configuration parameters; the rest keep their defaults.
    pub config: BTreeMap<String, Value>,
    pub budget: Budget,
    pub threshold: u32,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub related: Option<RelatedSet>,
    /// Configuration and input parameters that were made symbolic.
    pub symbolic: BTreeSet<String>,
    pub traces: Vec<StateTrace>,
    pub trace_files: Vec<TraceFile>,
    pub model: ImpactModel,
}

/// Symbolic configuration parameters for a source, inputs excluded.
pub fn symbolic_configs(p: &Program, source: &SymbolicSource) -> Result<(String, Option<RelatedSet>, BTreeSet<String>), PipelineError> {
    match source {
        SymbolicSource::Target(t) => {
            let ra = RelatedAnalysis::new(p);
            let set = ra.related_all()?.remove(t).ok_or_else(|| AnalysisError::UnknownConfig(t.clone()))?;
            let mut names = set.related();
            names.insert(t.clone());
            Ok((t.clone(), Some(set), names))
        }
        SymbolicSource::Explicit(names) => {
            let first = names.first().ok_or(PipelineError::NoTarget)?;
            for n in names {
                if p.config(n).is_none() && p.input(n).is_none() {
                    return Err(SymexecError::UnknownName(n.clone()).into());
                }
            }
            Ok((first.clone(), None, names.iter().cloned().collect()))
        }
    }
}

pub fn analyze(p: &Program, opts: &AnalyzeOptions) -> Result<Analysis, PipelineError> {
    let (target, related, mut symbolic) = symbolic_configs(p, &opts.source)?;
    let related_names: BTreeSet<String> = match &related {
        Some(r) => r.related(),
        None => symbolic.iter().filter(|n| **n != target && p.config(n).is_some()).cloned().collect(),
    };
    symbolic.extend(p.inputs.iter().map(|i| i.name.clone()));
    let ex = explore(p, &opts.config, &symbolic, opts.budget)?;
    let traces = ex.traces();
    let trace_files = ex.trace_files();
    let fixed: BTreeMap<String, Value> = p
        .configs
        .iter()
        .filter(|c| !symbolic.contains(&c.name))
        .map(|c| {
            let v = opts.config.get(&c.name).cloned().unwrap_or_else(|| c.default.clone());
            (c.name.clone(), v)
        })
        .collect();
    let model = ImpactModel::build(ModelInput {
        program: p,
        software: &opts.software,
        target: &target,
        related: &related_names,
        fixed,
        vars: &ex.vars,
        traces: &traces,
        threshold: opts.threshold,
        exhausted: ex.exhausted,
    })?;
    Ok(Analysis {
        related,
        symbolic,
        traces,
        trace_files,
        model,
    })
}
