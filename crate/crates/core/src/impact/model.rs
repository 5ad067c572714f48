//! The impact model: cost table, suspicious pairs and their differential paths.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::lang::{Program, Value};
use crate::symexec::{SymVar, SymVarKind};
use crate::trace::StateTrace;

use super::diff::{differential_critical_path, DiffCriticalPath};
use super::pairs::{find_suspicious_pairs, SuspiciousPair};
use super::table::{build_cost_table, CostTableRow};
use super::ImpactError;

pub const MODEL_FORMAT: &str = "violet-model v1";

/// Default relative-difference threshold, in percent.
pub const DEFAULT_THRESHOLD: u32 = 100;

/// A symbolic variable of the analysis, with the program's default for configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVar {
    #[serde(flatten)]
    pub var: SymVar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDiff {
    pub slow: usize,
    pub fast: usize,
    pub path: DiffCriticalPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactModel {
    pub format: String,
    pub software: String,
    pub target: String,
    pub related: Vec<String>,
    /// Concrete values of every configuration parameter that was not symbolic.
    pub fixed: BTreeMap<String, Value>,
    pub variables: Vec<ModelVar>,
    pub threshold: u32,
    /// A budget cut exploration short, so the table may be incomplete.
    pub exhausted: bool,
    pub rows: Vec<CostTableRow>,
    pub pairs: Vec<SuspiciousPair>,
    pub diffs: Vec<PairDiff>,
}

/// Everything the model is built from.
pub struct ModelInput<'a> {
    pub program: &'a Program,
    pub software: &'a str,
    pub target: &'a str,
    pub related: &'a BTreeSet<String>,
    pub fixed: BTreeMap<String, Value>,
    pub vars: &'a [SymVar],
    pub traces: &'a [StateTrace],
    pub threshold: u32,
    pub exhausted: bool,
}

impl ImpactModel {
    pub fn build(input: ModelInput<'_>) -> Result<ImpactModel, ImpactError> {
        let rows = build_cost_table(input.traces, input.vars)?;
        let mut related = input.related.clone();
        related.insert(input.target.to_string());
        let pairs = find_suspicious_pairs(&rows, input.threshold, &related, input.vars)?;
        let by_state: BTreeMap<usize, &StateTrace> = input.traces.iter().map(|t| (t.state, t)).collect();
        let mut diffs = Vec::new();
        for p in &pairs {
            let (slow, fast) = (by_state[&p.slow], by_state[&p.fast]);
            // a pair whose side never traced a call has no path to compare
            if let Ok(path) = differential_critical_path(slow, fast) {
                diffs.push(PairDiff {
                    slow: p.slow,
                    fast: p.fast,
                    path,
                });
            }
        }
        let variables = input
            .vars
            .iter()
            .map(|v| ModelVar {
                var: v.clone(),
                default: match v.kind {
                    SymVarKind::Config => input.program.config(&v.name).map(|c| c.default.clone()),
                    _ => None,
                },
            })
            .collect();
        Ok(ImpactModel {
            format: MODEL_FORMAT.to_string(),
            software: input.software.to_string(),
            target: input.target.to_string(),
            related: input.related.iter().cloned().collect(),
            fixed: input.fixed,
            variables,
            threshold: input.threshold,
            exhausted: input.exhausted,
            rows,
            pairs,
            diffs,
        })
    }

    pub fn empty(software: &str, target: &str) -> ImpactModel {
        ImpactModel {
            format: MODEL_FORMAT.to_string(),
            software: software.to_string(),
            target: target.to_string(),
            related: Vec::new(),
            fixed: BTreeMap::new(),
            variables: Vec::new(),
            threshold: DEFAULT_THRESHOLD,
            exhausted: false,
            rows: Vec::new(),
            pairs: Vec::new(),
            diffs: Vec::new(),
        }
    }

    pub fn vars(&self) -> Vec<SymVar> {
        self.variables.iter().map(|v| v.var.clone()).collect()
    }

    pub fn row(&self, state: usize) -> Option<&CostTableRow> {
        self.rows.iter().find(|r| r.state == state)
    }

    pub fn diff(&self, slow: usize, fast: usize) -> Option<&DiffCriticalPath> {
        self.diffs
            .iter()
            .find(|d| d.slow == slow && d.fast == fast)
            .map(|d| &d.path)
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the struct layout.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ImpactModel, ImpactError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ImpactError::BadModel(e.to_string()))?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(MODEL_FORMAT) => {}
            Some(other) => return Err(ImpactError::BadModel(format!("unsupported format `{other}`"))),
            None => return Err(ImpactError::BadModel("missing `format` field".into())),
        }
        let model: ImpactModel =
            serde_json::from_value(value).map_err(|e| ImpactError::BadModel(e.to_string()))?;
        let states: BTreeSet<usize> = model.rows.iter().map(|r| r.state).collect();
        for p in &model.pairs {
            if !states.contains(&p.slow) || !states.contains(&p.fast) {
                return Err(ImpactError::BadModel(format!(
                    "pair ({}, {}) references a missing row",
                    p.slow, p.fast
                )));
            }
        }
        Ok(model)
    }

    /// Three-column text table: configuration constraint, cost, workload predicate,
    /// followed by the flagged pairs.
    pub fn report(&self) -> String {
        let join = |xs: &[String]| if xs.is_empty() { "-".to_string() } else { xs.join(" && ") };
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                let mut cost = format!("latency={}", r.cost.latency);
                for m in crate::lang::Metric::ALL.into_iter().skip(1) {
                    let v = r.cost.get(m);
                    if v > 0 {
                        let _ = write!(cost, " {m}={v}");
                    }
                }
                [r.state.to_string(), join(&r.config_constraint), cost, join(&r.input_predicate)]
            })
            .collect();
        let header = ["state", "configuration constraint", "cost", "workload predicate"];
        let mut widths = header.map(str::len);
        for c in &cells {
            for (w, s) in widths.iter_mut().zip(c) {
                *w = (*w).max(s.len());
            }
        }
        let line = |c: [&str; 4]| -> String {
            let mut s = format!(
                "{:<w0$}  {:<w1$}  {:<w2$}  {}",
                c[0],
                c[1],
                c[2],
                c[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
            s.truncate(s.trim_end().len());
            s.push('\n');
            s
        };
        let mut out = format!("# {} target={} threshold={}%\n", self.software, self.target, self.threshold);
        out.push_str(&line(header));
        for c in &cells {
            out.push_str(&line([&c[0], &c[1], &c[2], &c[3]]));
        }
        if !self.pairs.is_empty() {
            out.push_str("\nsuspicious pairs (slow > fast):\n");
            for p in &self.pairs {
                let _ = write!(out, "  {} > {}  {}  similarity={}", p.slow, p.fast, p.ratio, p.similarity);
                if let Some(d) = self.diff(p.slow, p.fast) {
                    if !d.critical_chain.is_empty() {
                        let _ = write!(out, "  path={}", d.critical_chain.join("->"));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}
