//! Related-parameter discovery: enabler and influenced parameter sets.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::{walk_stmts, FunctionDef, Program, StmtId, StmtKind, ENTRY};

use super::callgraph::CallGraph;
use super::control_dep::FunctionFacts;
use super::AnalysisError;

/// A statement that reads a configuration parameter, directly or through a tainted local.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UsagePoint {
    pub param: String,
    pub func: String,
    pub stmt: StmtId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelatedSet {
    pub target: String,
    pub enablers: BTreeSet<String>,
    pub influenced: BTreeSet<String>,
}

impl RelatedSet {
    /// Enablers and influenced parameters together.
    pub fn related(&self) -> BTreeSet<String> {
        self.enablers.union(&self.influenced).cloned().collect()
    }
}

/// Configs each local of `f` may carry: one hop from a direct assignment, a pure
/// extern applied to configs, or a call to a getter whose return expressions read configs.
fn local_taint(p: &Program, f: &FunctionDef) -> BTreeMap<String, BTreeSet<String>> {
    let mut taint: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    walk_stmts(&f.body, &mut |s| {
        let (local, configs) = match &s.kind {
            StmtKind::Assign { local, value, .. } => (local, direct_configs(p, value.names())),
            StmtKind::Call {
                dest: Some(d),
                callee,
                args,
            } => {
                let Some(target) = p.function(callee) else {
                    return;
                };
                let configs = if target.attrs.is_extern {
                    if !target.attrs.pure {
                        return;
                    }
                    direct_configs(p, args.iter().flat_map(|a| a.names()).collect())
                } else {
                    getter_configs(p, target)
                };
                (&d.local, configs)
            }
            _ => return,
        };
        if !configs.is_empty() {
            taint.entry(local.clone()).or_default().extend(configs);
        }
    });
    taint
}

fn direct_configs(p: &Program, names: Vec<&str>) -> BTreeSet<String> {
    names
        .into_iter()
        .filter(|n| p.config(n).is_some())
        .map(str::to_string)
        .collect()
}

fn getter_configs(p: &Program, f: &FunctionDef) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk_stmts(&f.body, &mut |s| {
        if let StmtKind::Return(Some(e)) = &s.kind {
            out.extend(direct_configs(p, e.names()));
        }
    });
    out
}

/// Every usage point of every config, in function then statement order.
pub fn all_usages(p: &Program) -> Vec<UsagePoint> {
    let mut out = Vec::new();
    for f in p.functions.iter().filter(|f| !f.attrs.is_extern) {
        let taint = local_taint(p, f);
        walk_stmts(&f.body, &mut |s| {
            let mut params = BTreeSet::new();
            for e in s.exprs() {
                for n in e.names() {
                    if p.config(n).is_some() {
                        params.insert(n.to_string());
                    } else if let Some(ts) = taint.get(n) {
                        params.extend(ts.iter().cloned());
                    }
                }
            }
            for param in params {
                out.push(UsagePoint {
                    param,
                    func: f.name.clone(),
                    stmt: s.id,
                });
            }
        });
    }
    out
}

pub fn get_usages(p: &Program, param: &str) -> Vec<UsagePoint> {
    all_usages(p).into_iter().filter(|u| u.param == param).collect()
}

/// Shared state for answering enabler queries on one program.
pub struct RelatedAnalysis<'p> {
    program: &'p Program,
    callgraph: CallGraph,
    facts: BTreeMap<String, FunctionFacts>,
    usages: Vec<UsagePoint>,
}

impl<'p> RelatedAnalysis<'p> {
    pub fn new(program: &'p Program) -> Self {
        let facts = program
            .functions
            .iter()
            .filter(|f| !f.attrs.is_extern)
            .map(|f| (f.name.clone(), FunctionFacts::new(f)))
            .collect();
        RelatedAnalysis {
            program,
            callgraph: CallGraph::build(program),
            facts,
            usages: all_usages(program),
        }
    }

    pub fn callgraph(&self) -> &CallGraph {
        &self.callgraph
    }

    pub fn facts(&self, func: &str) -> Option<&FunctionFacts> {
        self.facts.get(func)
    }

    fn usages_in<'a>(&'a self, func: &'a str) -> impl Iterator<Item = &'a UsagePoint> + 'a {
        self.usages.iter().filter(move |u| u.func == func)
    }

    /// Parameters that `p` is control dependent on, along any call chain into any usage of `p`.
    pub fn enablers(&self, p: &str) -> Result<BTreeSet<String>, AnalysisError> {
        if self.program.config(p).is_none() {
            return Err(AnalysisError::UnknownConfig(p.to_string()));
        }
        let mut es = BTreeSet::new();
        for p_usage in self.usages.iter().filter(|u| u.param == p) {
            // (function, site in that function leading toward the usage)
            let mut steps: Vec<(&str, StmtId)> = Vec::new();
            for chain in self.callgraph.chains(ENTRY, &p_usage.func) {
                for edge in &chain {
                    steps.push((self.intern(&edge.caller), edge.site));
                }
            }
            steps.push((&p_usage.func, p_usage.stmt));
            steps.sort();
            steps.dedup();

            for (q_func, p_site) in steps {
                let facts = &self.facts[q_func];
                for q_usage in self.usages_in(q_func) {
                    if q_usage == p_usage || q_usage.param == p {
                        continue;
                    }
                    if facts.control_dependent(p_site, q_usage.stmt)? {
                        es.insert(q_usage.param.clone());
                    }
                }
            }
        }
        Ok(es)
    }

    fn intern<'a>(&'a self, name: &str) -> &'a str {
        self.program
            .function(name)
            .map(|f| f.name.as_str())
            .expect("call graph nodes are declared functions")
    }

    /// Enabler sets of every config plus their inverse, the influenced sets.
    pub fn related_all(&self) -> Result<BTreeMap<String, RelatedSet>, AnalysisError> {
        let mut out: BTreeMap<String, RelatedSet> = self
            .program
            .configs
            .iter()
            .map(|c| {
                (
                    c.name.clone(),
                    RelatedSet {
                        target: c.name.clone(),
                        ..Default::default()
                    },
                )
            })
            .collect();
        for c in &self.program.configs {
            let es = self.enablers(&c.name)?;
            for q in &es {
                if let Some(rs) = out.get_mut(q) {
                    rs.influenced.insert(c.name.clone());
                }
            }
            out.get_mut(&c.name).expect("seeded above").enablers = es;
        }
        Ok(out)
    }
}

pub fn get_enabler_configs(p: &Program, param: &str) -> Result<BTreeSet<String>, AnalysisError> {
    RelatedAnalysis::new(p).enablers(param)
}

pub fn get_related_configs(p: &Program) -> BTreeMap<String, RelatedSet> {
    RelatedAnalysis::new(p)
        .related_all()
        .expect("every usage statement belongs to its function's CFG")
}

/// One line per parameter: `target<TAB>enabler:a,b<TAB>influenced:c`.
pub fn format_related_report(sets: &BTreeMap<String, RelatedSet>) -> String {
    let mut out = String::new();
    for rs in sets.values() {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        out.push_str(&format!(
            "{}\tenabler:{}\tinfluenced:{}\n",
            rs.target,
            join(&rs.enablers),
            join(&rs.influenced)
        ));
    }
    out
}

pub fn parse_related_report(text: &str) -> Result<BTreeMap<String, RelatedSet>, AnalysisError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || AnalysisError::MalformedReport {
            line: i + 1,
            text: line.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [target, enabler, influenced] = fields.as_slice() else {
            return Err(bad());
        };
        let list = |field: &str, prefix: &str| -> Option<BTreeSet<String>> {
            let rest = field.strip_prefix(prefix)?;
            Some(
                rest.split(',')
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        };
        let rs = RelatedSet {
            target: target.to_string(),
            enablers: list(enabler, "enabler:").ok_or_else(bad)?,
            influenced: list(influenced, "influenced:").ok_or_else(bad)?,
        };
        out.insert(rs.target.clone(), rs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn unconditional_use_has_no_enablers() {
        let p = parse("config a: bool = true; config b: bool = true; fn main() { let x = a; if b { cost latency 1; } }").unwrap();
        assert!(get_enabler_configs(&p, "b").unwrap().is_empty());
        assert!(get_enabler_configs(&p, "a").unwrap().is_empty());
    }

    #[test]
    fn unknown_config() {
        let p = parse("fn main() { }").unwrap();
        assert_eq!(
            get_enabler_configs(&p, "nope"),
            Err(AnalysisError::UnknownConfig("nope".into()))
        );
    }

    #[test]
    fn interprocedural_guard() {
        let p = parse(
            "config gate: bool = true; config inner: int in [0, 3] = 0;
             fn main() { if gate { work(); } }
             fn work() { if inner == 2 { cost latency 5; } }",
        )
        .unwrap();
        let rel = get_related_configs(&p);
        assert_eq!(rel["inner"].enablers, BTreeSet::from(["gate".to_string()]));
        assert_eq!(rel["gate"].influenced, BTreeSet::from(["inner".to_string()]));
        assert!(rel["gate"].enablers.is_empty());
    }

    #[test]
    fn report_round_trip() {
        let p = parse(
            "config gate: bool = true; config inner: int in [0, 3] = 0; config lone: bool = false;
             fn main() { if gate { if inner == 1 { cost latency 1; } } if lone { cost latency 1; } }",
        )
        .unwrap();
        let rel = get_related_configs(&p);
        let text = format_related_report(&rel);
        assert_eq!(
            text,
            "gate\tenabler:\tinfluenced:inner\ninner\tenabler:gate\tinfluenced:\nlone\tenabler:\tinfluenced:\n"
        );
        assert_eq!(parse_related_report(&text).unwrap(), rel);
        assert!(parse_related_report("x\ty").is_err());
    }
}
