//! Cost table rows: one per explored state, its constraint split by variable kind.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lang::{parse_expr, BinOp, Expr, UnOp, Value};
use crate::symexec::expr::{mk_bin, mk_const, mk_neg, mk_not};
use crate::symexec::{ExprRef, SymExpr, SymVar, SymVarKind};
use crate::trace::{CostVector, StateStatus, StateTrace};

use super::ImpactError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostTableRow {
    pub state: usize,
    pub status: StateStatus,
    /// Atoms over configuration variables, mixed atoms included.
    pub config_constraint: Vec<String>,
    /// Atoms over input variables only.
    pub input_predicate: Vec<String>,
    /// Atoms mentioning both kinds; also listed in `config_constraint`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixed: Vec<String>,
    pub cost: CostVector,
    /// Root-to-leaf function chain ending at the call with the largest self latency.
    pub critical_path: Vec<String>,
}

/// Result of splitting a constraint by variable kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitConstraint {
    pub config: Vec<String>,
    pub input: Vec<String>,
    pub mixed: Vec<String>,
}

/// Translate a rendered atom back into a symbolic expression over `vars`. Names that
/// are not variables are enum members.
pub fn compile_atom(text: &str, vars: &[SymVar]) -> Result<ExprRef, ImpactError> {
    let e = parse_expr(text).map_err(|d| ImpactError::BadAtom {
        atom: text.to_string(),
        message: d.to_string(),
    })?;
    Ok(lower(&e, vars))
}

fn lower(e: &Expr, vars: &[SymVar]) -> ExprRef {
    match e {
        Expr::Int(i) => mk_const(Value::Int(*i)),
        Expr::Bool(b) => mk_const(Value::Bool(*b)),
        Expr::Name(n, _) => match vars.iter().position(|v| v.name == *n) {
            Some(id) => Arc::new(SymExpr::Var(id)),
            None => mk_const(Value::Enum(n.clone())),
        },
        Expr::Unary(UnOp::Not, x) => mk_not(lower(x, vars)),
        Expr::Unary(UnOp::Neg, x) => mk_neg(lower(x, vars)),
        Expr::Binary(op, a, b) => mk_bin(*op, lower(a, vars), lower(b, vars)),
    }
}

/// Variable names an atom mentions.
pub fn atom_names(text: &str, vars: &[SymVar]) -> Result<Vec<String>, ImpactError> {
    let e = compile_atom(text, vars)?;
    Ok(e.vars().into_iter().map(|v| vars[v].name.clone()).collect())
}

/// Split atoms by the kind of the variables they mention. Return values of pure
/// externs count as inputs: they are not something an operator configures.
pub fn extract_input_predicate(atoms: &[String], vars: &[SymVar]) -> Result<SplitConstraint, ImpactError> {
    let mut out = SplitConstraint::default();
    for a in atoms {
        let e = compile_atom(a, vars)?;
        let kinds: Vec<SymVarKind> = e.vars().into_iter().map(|v| vars[v].kind).collect();
        let has_config = kinds.contains(&SymVarKind::Config);
        let has_input = kinds.iter().any(|k| *k != SymVarKind::Config);
        if has_config && has_input {
            out.mixed.push(a.clone());
            out.config.push(a.clone());
        } else if has_input {
            out.input.push(a.clone());
        } else {
            out.config.push(a.clone());
        }
    }
    Ok(out)
}

/// Chain to the non-root call with the largest self latency, or just the root when
/// there is no other call.
pub fn critical_chain(t: &StateTrace) -> Vec<String> {
    let mut best: Option<(u64, u64)> = None;
    for c in t.calls.iter().filter(|c| c.parent.is_some()) {
        if best.is_none_or(|(lat, _)| c.self_latency > lat) {
            best = Some((c.self_latency, c.cid));
        }
    }
    match best {
        Some((_, cid)) => t.chain_to(cid),
        None => t.root().map(|r| vec![r.func.clone()]).unwrap_or_default(),
    }
}

/// One row per trace, in trace order.
pub fn build_cost_table(traces: &[StateTrace], vars: &[SymVar]) -> Result<Vec<CostTableRow>, ImpactError> {
    traces
        .iter()
        .map(|t| {
            let split = extract_input_predicate(&t.constraint, vars)?;
            Ok(CostTableRow {
                state: t.state,
                status: t.status,
                config_constraint: split.config,
                input_predicate: split.input,
                mixed: split.mixed,
                cost: t.cost,
                critical_path: critical_chain(t),
            })
        })
        .collect()
}

/// Whether a conjunction of atoms can hold with `fixed` values for some variables
/// and any in-domain values for the rest.
pub fn satisfiable(
    atoms: &[String],
    vars: &[SymVar],
    fixed: &BTreeMap<String, Value>,
) -> Result<bool, ImpactError> {
    Ok(smallest_model(atoms, vars, fixed)?.is_some())
}

/// Smallest assignment (in domain order) of the variables the atoms mention that
/// satisfies them, honoring `fixed`. Fixed variables are not part of the result.
pub fn smallest_model(
    atoms: &[String],
    vars: &[SymVar],
    fixed: &BTreeMap<String, Value>,
) -> Result<Option<BTreeMap<String, Value>>, ImpactError> {
    let mut compiled = Vec::with_capacity(atoms.len());
    for a in atoms {
        compiled.push(compile_atom(a, vars)?);
    }
    for (name, v) in fixed {
        if let Some(id) = vars.iter().position(|x| x.name == *name) {
            compiled.push(mk_bin(BinOp::Eq, Arc::new(SymExpr::Var(id)), mk_const(v.clone())));
        }
    }
    let model = crate::symexec::solver::solve(vars, &compiled, &[])?;
    Ok(model.map(|asg| {
        asg.into_iter()
            .enumerate()
            .filter_map(|(i, v)| Some((vars[i].name.clone(), v?)))
            .filter(|(n, _)| !fixed.contains_key(n))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Domain;

    fn vars() -> Vec<SymVar> {
        let v = |name: &str, kind, domain| SymVar {
            name: name.into(),
            kind,
            domain,
        };
        vec![
            v("autocommit", SymVarKind::Config, Domain::Bool),
            v("flush", SymVarKind::Config, Domain::Int { lo: 0, hi: 2 }),
            v(
                "sql_command",
                SymVarKind::Input,
                Domain::Enum(vec!["INSERT".into(), "SELECT".into()]),
            ),
            v("n", SymVarKind::Input, Domain::Int { lo: 0, hi: 10 }),
        ]
    }

    fn strs(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn split_by_kind() {
        let vs = vars();
        let s = extract_input_predicate(&strs(&["autocommit!=false", "sql_command==INSERT"]), &vs).unwrap();
        assert_eq!(s.config, strs(&["autocommit!=false"]));
        assert_eq!(s.input, strs(&["sql_command==INSERT"]));
        assert!(s.mixed.is_empty());

        let s = extract_input_predicate(&[], &vs).unwrap();
        assert_eq!(s, SplitConstraint::default());

        let s = extract_input_predicate(&strs(&["flush<n"]), &vs).unwrap();
        assert_eq!(s.config, strs(&["flush<n"]));
        assert_eq!(s.mixed, strs(&["flush<n"]));
        assert!(s.input.is_empty());
    }

    #[test]
    fn models() {
        let vs = vars();
        let m = smallest_model(&strs(&["n>3", "n<6"]), &vs, &BTreeMap::new()).unwrap().unwrap();
        assert_eq!(m["n"], Value::Int(4));
        let fixed = BTreeMap::from([("flush".to_string(), Value::Int(2))]);
        assert!(!satisfiable(&strs(&["flush==1"]), &vs, &fixed).unwrap());
        assert!(satisfiable(&strs(&["flush!=1"]), &vs, &fixed).unwrap());
        assert!(compile_atom("flush ==", &vs).is_err());
    }
}
