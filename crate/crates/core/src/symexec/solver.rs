//! Satisfiability over finite domains by backtracking enumeration.
//!
//! Variables are assigned in a fixed order (hinted variables first, then by id) and
//! values are tried in domain order, so the first model found is the
//! lexicographically smallest one. An atom is checked as soon as its last variable
//! is assigned, which prunes whole subtrees.

use std::collections::BTreeSet;

use crate::lang::Value;

use super::expr::{ExprRef, SymVar, VarId};

/// Largest domain product a single query may range over.
pub const MAX_QUERY_PRODUCT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("query ranges over {product} assignments, above the limit of {limit}")]
    TooLarge { product: u128, limit: u128 },
}

/// Variables connected to `seed` through shared atoms, and the atoms of that component.
pub fn component(atoms: &[ExprRef], seed: &[VarId]) -> (BTreeSet<VarId>, Vec<ExprRef>) {
    let mut vars: BTreeSet<VarId> = seed.iter().copied().collect();
    let atom_vars: Vec<Vec<VarId>> = atoms.iter().map(|a| a.vars()).collect();
    let mut taken = vec![false; atoms.len()];
    loop {
        let mut grew = false;
        for (i, vs) in atom_vars.iter().enumerate() {
            if !taken[i] && vs.iter().any(|v| vars.contains(v)) {
                taken[i] = true;
                vars.extend(vs.iter().copied());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let picked = atoms
        .iter()
        .zip(&taken)
        .filter(|(_, t)| **t)
        .map(|(a, _)| a.clone())
        .collect();
    (vars, picked)
}

/// Smallest model of `atoms` over `scope` (plus every variable the atoms mention).
/// Returned as a full-width assignment where only the searched variables are set.
pub fn solve(
    vars: &[SymVar],
    atoms: &[ExprRef],
    scope: &[VarId],
) -> Result<Option<Vec<Option<Value>>>, SolverError> {
    let mut order: Vec<VarId> = Vec::new();
    for &v in scope {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    let mut rest: BTreeSet<VarId> = BTreeSet::new();
    for a in atoms {
        rest.extend(a.vars());
    }
    for v in rest {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    let product = order
        .iter()
        .fold(1u128, |acc, &v| acc.saturating_mul(vars[v].domain.size() as u128));
    if product > MAX_QUERY_PRODUCT {
        return Err(SolverError::TooLarge {
            product,
            limit: MAX_QUERY_PRODUCT,
        });
    }

    // atoms indexed by the depth at which their last variable gets assigned
    let mut at_depth: Vec<Vec<&ExprRef>> = vec![Vec::new(); order.len() + 1];
    for a in atoms {
        let depth = a
            .vars()
            .iter()
            .map(|v| order.iter().position(|o| o == v).expect("collected above") + 1)
            .max()
            .unwrap_or(0);
        at_depth[depth].push(a);
    }
    let mut asg: Vec<Option<Value>> = vec![None; vars.len()];
    if !holds(&at_depth[0], &asg) {
        return Ok(None);
    }
    let domains: Vec<Vec<Value>> = order.iter().map(|&v| vars[v].domain.values()).collect();
    if search(&order, &domains, &at_depth, 0, &mut asg) {
        Ok(Some(asg))
    } else {
        Ok(None)
    }
}

fn holds(atoms: &[&ExprRef], asg: &[Option<Value>]) -> bool {
    atoms.iter().all(|a| a.eval(asg) == Some(Value::Bool(true)))
}

fn search(
    order: &[VarId],
    domains: &[Vec<Value>],
    at_depth: &[Vec<&ExprRef>],
    depth: usize,
    asg: &mut Vec<Option<Value>>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for value in &domains[depth] {
        asg[v] = Some(value.clone());
        if holds(&at_depth[depth + 1], asg) && search(order, domains, at_depth, depth + 1, asg) {
            return true;
        }
    }
    asg[v] = None;
    false
}

pub fn satisfiable(vars: &[SymVar], atoms: &[ExprRef]) -> Result<bool, SolverError> {
    Ok(solve(vars, atoms, &[])?.is_some())
}

/// Every model of `atoms` over `scope`, in lexicographic order. Test and checker helper;
/// callers keep scopes small.
pub fn all_models(
    vars: &[SymVar],
    atoms: &[ExprRef],
    scope: &[VarId],
) -> Result<Vec<Vec<Value>>, SolverError> {
    let product = scope
        .iter()
        .fold(1u128, |acc, &v| acc.saturating_mul(vars[v].domain.size() as u128));
    if product > MAX_QUERY_PRODUCT {
        return Err(SolverError::TooLarge {
            product,
            limit: MAX_QUERY_PRODUCT,
        });
    }
    let mut out = Vec::new();
    let mut asg = vec![None; vars.len()];
    enumerate(vars, atoms, scope, 0, &mut asg, &mut out);
    Ok(out)
}

fn enumerate(
    vars: &[SymVar],
    atoms: &[ExprRef],
    scope: &[VarId],
    depth: usize,
    asg: &mut Vec<Option<Value>>,
    out: &mut Vec<Vec<Value>>,
) {
    if depth == scope.len() {
        if atoms.iter().all(|a| a.eval(asg) == Some(Value::Bool(true))) {
            out.push(scope.iter().map(|&v| asg[v].clone().expect("assigned")).collect());
        }
        return;
    }
    for value in vars[scope[depth]].domain.values() {
        asg[scope[depth]] = Some(value);
        enumerate(vars, atoms, scope, depth + 1, asg, out);
    }
    asg[scope[depth]] = None;
}
