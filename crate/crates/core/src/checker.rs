//! Checking concrete configurations against an impact model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::impact::{compile_atom, exceeds, satisfiable, CostTableRow, ImpactError, ImpactModel, MetricRatio};
use crate::lang::{Metric, Value};
use crate::symexec::solver::solve;
use crate::symexec::{SymExpr, SymVar, SymVarKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("value {value} is outside the domain of `{name}`")]
    InvalidValue { name: String, value: String },
    #[error("configuration is outside the explored space: {0}")]
    NoMatchingRow(String),
    #[error("input predicate has no solution: {0}")]
    UnsatPredicate(String),
    #[error(transparent)]
    Impact(#[from] ImpactError),
}

/// Configuration parameter values. Parameters left out are unconstrained.
pub type ConcreteConfig = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Specious,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "ok",
            Verdict::Specious => "specious",
        })
    }
}

/// A row as cited in a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowRef {
    /// Which model the row comes from: `model`, `old` or `new`.
    pub model: String,
    pub state: usize,
    pub config_constraint: Vec<String>,
    pub input_predicate: Vec<String>,
}

impl RowRef {
    fn new(model: &str, r: &CostTableRow) -> Self {
        RowRef {
            model: model.to_string(),
            state: r.state,
            config_constraint: r.config_constraint.clone(),
            input_predicate: r.input_predicate.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub slow: RowRef,
    pub fast: RowRef,
    pub triggered: Vec<MetricRatio>,
    pub critical_chain: Vec<String>,
    pub test_case: BTreeMap<String, Value>,
}

impl Finding {
    pub fn metric(&self) -> Metric {
        self.triggered[0].metric
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub mode: u8,
    pub verdict: Verdict,
    pub threshold: u32,
    pub findings: Vec<Finding>,
    /// Constraints of rows present only in the old or only in the new model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub only_old: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub only_new: Vec<String>,
}

impl CheckReport {
    fn new(mode: u8, threshold: u32, findings: Vec<Finding>) -> Self {
        CheckReport {
            mode,
            verdict: if findings.is_empty() { Verdict::Ok } else { Verdict::Specious },
            threshold,
            findings,
            only_old: Vec::new(),
            only_new: Vec::new(),
        }
    }

    /// Test case of the first finding.
    pub fn test_case(&self) -> Option<&BTreeMap<String, Value>> {
        self.findings.first().map(|f| &f.test_case)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self) -> String {
        let title = match self.mode {
            1 => "configuration update",
            2 => "default value",
            _ => "code or workload change",
        };
        let mut s = format!("mode {} ({title}): {}\n", self.mode, self.verdict);
        let row = |r: &RowRef| {
            let c = if r.config_constraint.is_empty() {
                "-".to_string()
            } else {
                r.config_constraint.join(" && ")
            };
            format!("{} row {} [{}]", r.model, r.state, c)
        };
        for f in &self.findings {
            let _ = writeln!(s, "  {} slower than {}", row(&f.slow), row(&f.fast));
            for m in &f.triggered {
                let _ = writeln!(s, "    {m}");
            }
            if !f.critical_chain.is_empty() {
                let _ = writeln!(s, "    critical path: {}", f.critical_chain.join("->"));
            }
            let tc: Vec<String> = f.test_case.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "    test case: {}", if tc.is_empty() { "-".into() } else { tc.join(" ") });
        }
        for c in &self.only_old {
            let _ = writeln!(s, "  only in old model: {c}");
        }
        for c in &self.only_new {
            let _ = writeln!(s, "  only in new model: {c}");
        }
        s
    }
}

/// Reject values outside their domain and names the model does not know.
pub fn validate(model: &ImpactModel, config: &ConcreteConfig) -> Result<(), CheckError> {
    for (name, value) in config {
        if let Some(v) = model.variables.iter().find(|v| v.var.name == *name) {
            if v.var.kind != SymVarKind::Config {
                return Err(CheckError::NoMatchingRow(format!("`{name}` is not a configuration parameter")));
            }
            if !v.var.domain.contains(value) {
                return Err(CheckError::InvalidValue {
                    name: name.clone(),
                    value: value.to_string(),
                });
            }
        } else if let Some(fixed) = model.fixed.get(name) {
            if fixed != value {
                return Err(CheckError::NoMatchingRow(format!(
                    "`{name}` was fixed to {fixed} during analysis, got {value}"
                )));
            }
        } else {
            return Err(CheckError::NoMatchingRow(format!("`{name}` does not appear in the model")));
        }
    }
    Ok(())
}

fn symbolic_part(model: &ImpactModel, config: &ConcreteConfig) -> BTreeMap<String, Value> {
    config
        .iter()
        .filter(|(n, _)| model.variables.iter().any(|v| v.var.name == **n))
        .map(|(n, v)| (n.clone(), v.clone()))
        .collect()
}

/// Rows whose configuration constraint the values satisfy; parameters absent from
/// the config, and inputs in mixed atoms, may take any value.
pub fn locate_rows<'m>(model: &'m ImpactModel, config: &ConcreteConfig) -> Result<Vec<&'m CostTableRow>, CheckError> {
    validate(model, config)?;
    let vars = model.vars();
    let fixed = symbolic_part(model, config);
    let mut out = Vec::new();
    for r in &model.rows {
        if satisfiable(&r.config_constraint, &vars, &fixed)? {
            out.push(r);
        }
    }
    Ok(out)
}

fn locate_nonempty<'m>(model: &'m ImpactModel, config: &ConcreteConfig) -> Result<Vec<&'m CostTableRow>, CheckError> {
    let rows = locate_rows(model, config)?;
    if rows.is_empty() {
        let shown: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        return Err(CheckError::NoMatchingRow(format!("no row admits {}", shown.join(" "))));
    }
    Ok(rows)
}

/// Smallest input assignment, in domain order, satisfying `predicate`. Every input
/// variable of `vars` gets a value; `fixed` pins configuration values that mixed
/// atoms may mention.
pub fn generate_test_case(
    predicate: &[String],
    vars: &[SymVar],
    fixed: &BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, CheckError> {
    let mut atoms = Vec::new();
    for a in predicate {
        atoms.push(compile_atom(a, vars).map_err(CheckError::Impact)?);
    }
    for (name, v) in fixed {
        if let Some(id) = vars.iter().position(|x| x.name == *name) {
            atoms.push(crate::symexec::expr::mk_bin(
                crate::lang::BinOp::Eq,
                Arc::new(SymExpr::Var(id)),
                crate::symexec::expr::mk_const(v.clone()),
            ));
        }
    }
    let inputs: Vec<usize> = (0..vars.len()).filter(|&i| vars[i].kind == SymVarKind::Input).collect();
    let model = solve(vars, &atoms, &inputs)
        .map_err(|e| CheckError::Impact(e.into()))?
        .ok_or_else(|| CheckError::UnsatPredicate(predicate.join(" && ")))?;
    Ok(inputs
        .into_iter()
        .map(|i| (vars[i].name.clone(), model[i].clone().expect("input assigned")))
        .collect())
}

fn triggered(slow: &CostTableRow, fast: &CostTableRow, threshold: u32) -> Vec<MetricRatio> {
    Metric::ALL
        .into_iter()
        .filter(|&m| exceeds(slow.cost.get(m), fast.cost.get(m), threshold))
        .map(|m| MetricRatio::new(m, slow.cost.get(m), fast.cost.get(m)))
        .collect()
}

/// Workload both rows can run under, as the union of their predicates plus the
/// mixed atoms of the slow row.
fn joint_predicate(slow: &CostTableRow, fast: &CostTableRow, extra: &[String]) -> Vec<String> {
    let mut atoms: Vec<String> = Vec::new();
    for a in slow.input_predicate.iter().chain(&slow.mixed).chain(&fast.input_predicate).chain(extra) {
        if !atoms.contains(a) {
            atoms.push(a.clone());
        }
    }
    atoms
}

struct Compare<'a> {
    vars: &'a [SymVar],
    fixed: BTreeMap<String, Value>,
    threshold: u32,
}

impl Compare<'_> {
    /// A finding when `slow` is worse than `fast` on a workload both admit.
    fn pair(
        &self,
        slow: (&str, &CostTableRow),
        fast: (&str, &CostTableRow),
        extra: &[String],
        chain: Vec<String>,
    ) -> Result<Option<Finding>, CheckError> {
        let trig = triggered(slow.1, fast.1, self.threshold);
        if trig.is_empty() {
            return Ok(None);
        }
        let pred = joint_predicate(slow.1, fast.1, extra);
        let test_case = match generate_test_case(&pred, self.vars, &self.fixed) {
            Ok(tc) => tc,
            Err(CheckError::UnsatPredicate(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some(Finding {
            slow: RowRef::new(slow.0, slow.1),
            fast: RowRef::new(fast.0, fast.1),
            triggered: trig,
            critical_chain: chain,
            test_case,
        }))
    }
}

fn chain_for(model: &ImpactModel, slow: &CostTableRow, fast: &CostTableRow) -> Vec<String> {
    model
        .diff(slow.state, fast.state)
        .filter(|d| !d.critical_chain.is_empty())
        .map(|d| d.critical_chain.clone())
        .unwrap_or_else(|| slow.critical_path.clone())
}

/// Mode 1: does moving from `old` to `new` make some workload slower?
pub fn check_update(
    model: &ImpactModel,
    old: &ConcreteConfig,
    new: &ConcreteConfig,
    threshold: u32,
) -> Result<CheckReport, CheckError> {
    let old_rows = locate_nonempty(model, old)?;
    let new_rows = locate_nonempty(model, new)?;
    let vars = model.vars();
    let cmp = Compare {
        vars: &vars,
        fixed: symbolic_part(model, new),
        threshold,
    };
    let mut findings = Vec::new();
    for n in &new_rows {
        for o in &old_rows {
            if n.state == o.state {
                continue;
            }
            if let Some(f) = cmp.pair(("new", n), ("old", o), &[], chain_for(model, n, o))? {
                findings.push(f);
            }
        }
    }
    Ok(CheckReport::new(1, threshold, findings))
}

/// Mode 2: is a row admitted by `config` much slower than a row some other value
/// leads to, under a workload both admit?
pub fn check_default(model: &ImpactModel, config: &ConcreteConfig, threshold: u32) -> Result<CheckReport, CheckError> {
    let located = locate_nonempty(model, config)?;
    let here: BTreeSet<usize> = located.iter().map(|r| r.state).collect();
    let vars = model.vars();
    let cmp = Compare {
        vars: &vars,
        fixed: symbolic_part(model, config),
        threshold,
    };
    let mut findings = Vec::new();
    for s in &located {
        for f in model.rows.iter().filter(|r| !here.contains(&r.state)) {
            if let Some(x) = cmp.pair(("model", s), ("model", f), &[], chain_for(model, s, f))? {
                findings.push(x);
            }
        }
    }
    Ok(CheckReport::new(2, threshold, findings))
}

/// Canonical text identifying a row across models.
pub fn row_key(r: &CostTableRow) -> String {
    let mut c = r.config_constraint.clone();
    c.sort();
    let mut i = r.input_predicate.clone();
    i.sort();
    format!("{} | {}", c.join(" && "), i.join(" && "))
}

/// Mode 3, code path: rows of the new model that got worse than the same row of the
/// old model. With a config, only rows it admits are compared.
pub fn check_code_upgrade(
    old: &ImpactModel,
    new: &ImpactModel,
    config: Option<&ConcreteConfig>,
    threshold: u32,
) -> Result<CheckReport, CheckError> {
    let pick = |m: &ImpactModel| -> Result<Vec<CostTableRow>, CheckError> {
        Ok(match config {
            Some(c) => locate_nonempty(m, c)?.into_iter().cloned().collect(),
            None => m.rows.clone(),
        })
    };
    let old_rows = pick(old)?;
    let new_rows = pick(new)?;
    let old_by_key: BTreeMap<String, &CostTableRow> = old_rows.iter().map(|r| (row_key(r), r)).collect();
    let new_keys: BTreeSet<String> = new_rows.iter().map(row_key).collect();
    let vars = new.vars();
    let cmp = Compare {
        vars: &vars,
        fixed: config.map(|c| symbolic_part(new, c)).unwrap_or_default(),
        threshold,
    };
    let mut findings = Vec::new();
    let mut only_new = Vec::new();
    for n in &new_rows {
        let key = row_key(n);
        match old_by_key.get(&key) {
            Some(o) => {
                if let Some(f) = cmp.pair(("new", n), ("old", o), &[], n.critical_path.clone())? {
                    findings.push(f);
                }
            }
            None => only_new.push(key),
        }
    }
    let only_old = old_by_key.keys().filter(|k| !new_keys.contains(*k)).cloned().collect();
    let mut report = CheckReport::new(3, threshold, findings);
    report.only_old = only_old;
    report.only_new = only_new;
    Ok(report)
}

/// Mode 3, workload path: under `config`, rows reachable by the new workload that are
/// worse than rows the old workload ran.
pub fn check_workload_shift(
    model: &ImpactModel,
    config: &ConcreteConfig,
    old_pred: &[String],
    new_pred: &[String],
    threshold: u32,
) -> Result<CheckReport, CheckError> {
    let located = locate_nonempty(model, config)?;
    let vars = model.vars();
    let fixed = symbolic_part(model, config);
    let admits = |r: &CostTableRow, pred: &[String]| -> Result<bool, CheckError> {
        let mut atoms = r.input_predicate.clone();
        atoms.extend(r.mixed.iter().cloned());
        atoms.extend(pred.iter().cloned());
        Ok(satisfiable(&atoms, &vars, &fixed)?)
    };
    let mut before = Vec::new();
    let mut after = Vec::new();
    for r in &located {
        if admits(r, old_pred)? {
            before.push(*r);
        }
        if admits(r, new_pred)? {
            after.push(*r);
        }
    }
    let cmp = Compare {
        vars: &vars,
        fixed,
        threshold,
    };
    let mut findings = Vec::new();
    for n in &after {
        for o in &before {
            if n.state == o.state {
                continue;
            }
            // the two rows run different workloads, so only the new one constrains the test
            let trig = triggered(n, o, threshold);
            if trig.is_empty() {
                continue;
            }
            let mut pred = n.input_predicate.clone();
            pred.extend(n.mixed.iter().cloned());
            pred.extend(new_pred.iter().cloned());
            let test_case = generate_test_case(&pred, &vars, &cmp.fixed)?;
            findings.push(Finding {
                slow: RowRef::new("model", n),
                fast: RowRef::new("model", o),
                triggered: trig,
                critical_chain: chain_for(model, n, o),
                test_case,
            });
        }
    }
    Ok(CheckReport::new(3, threshold, findings))
}

/// Mode 3: the code path over two models, then the workload path on the new model
/// when predicates are given.
pub fn check_evolution(
    old: &ImpactModel,
    new: &ImpactModel,
    config: &ConcreteConfig,
    workload: Option<(&[String], &[String])>,
    threshold: u32,
) -> Result<CheckReport, CheckError> {
    let mut report = check_code_upgrade(old, new, Some(config), threshold)?;
    if let Some((before, after)) = workload {
        let shift = check_workload_shift(new, config, before, after, threshold)?;
        report.findings.extend(shift.findings);
    }
    report.verdict = if report.findings.is_empty() { Verdict::Ok } else { Verdict::Specious };
    Ok(report)
}
