//! Brute-force reference for symbolic exploration: run the concrete interpreter on
//! every in-domain assignment and group assignments by the path they execute.

use std::collections::{BTreeMap, BTreeSet};

use violet_core::interp::run_concrete;
use violet_core::lang::{Domain, Program, StmtId, Value};
use violet_core::symexec::{explore, Budget, Exploration};
use violet_core::trace::{CostVector, StateStatus};

pub const MAX_ORACLE_VARS: usize = 4;
pub const MAX_ORACLE_PRODUCT: u64 = 10_000;

/// Every config and input, configs first, in declaration order.
pub fn all_params(p: &Program) -> Vec<(String, Domain)> {
    p.configs
        .iter()
        .map(|c| (c.name.clone(), c.domain.clone()))
        .chain(p.inputs.iter().map(|i| (i.name.clone(), i.domain.clone())))
        .collect()
}

/// Programs whose externs take no arguments never lose paths to concretization.
pub fn oracle_eligible(p: &Program) -> bool {
    let params = all_params(p);
    let product: u64 = params.iter().map(|(_, d)| d.size()).product();
    params.len() <= MAX_ORACLE_VARS
        && product <= MAX_ORACLE_PRODUCT
        && p.functions
            .iter()
            .filter(|f| f.attrs.is_extern)
            .all(|f| f.params.is_empty())
}

pub fn assignments(params: &[(String, Domain)]) -> Vec<BTreeMap<String, Value>> {
    let mut out = vec![BTreeMap::new()];
    for (name, d) in params {
        let mut next = Vec::new();
        for partial in &out {
            for v in d.values() {
                let mut a = partial.clone();
                a.insert(name.clone(), v);
                next.push(a);
            }
        }
        out = next;
    }
    out
}

pub type Class = (Vec<BTreeMap<String, Value>>, CostVector, StateStatus);

/// Concrete classes: assignments grouped by executed branch sequence.
pub fn concrete_classes(p: &Program) -> BTreeSet<Class> {
    let params = all_params(p);
    let mut groups: BTreeMap<Vec<(StmtId, bool)>, Class> = BTreeMap::new();
    for a in assignments(&params) {
        let run = run_concrete(p, &a, Budget::default());
        let entry = groups
            .entry(run.path.clone())
            .or_insert_with(|| (Vec::new(), run.cost, run.status));
        assert_eq!(entry.1, run.cost, "one path, one cost");
        entry.0.push(a);
    }
    groups.into_values().collect()
}

pub fn explore_all(p: &Program) -> Exploration<'_> {
    let names: BTreeSet<String> = all_params(p).into_iter().map(|(n, _)| n).collect();
    explore(p, &BTreeMap::new(), &names, Budget::default()).expect("exploration")
}

/// Symbolic classes: for every terminal state, the assignments its constraint admits.
/// Also checks that every assignment lands in exactly one state.
pub fn symbolic_classes(p: &Program, ex: &Exploration<'_>) -> Result<BTreeSet<Class>, String> {
    let params = all_params(p);
    let mut classes: Vec<Class> = ex
        .states
        .iter()
        .map(|s| (Vec::new(), *s.tracer.cost(), s.status))
        .collect();
    for a in assignments(&params) {
        let asg: Vec<Option<Value>> = ex.vars.iter().map(|v| a.get(&v.name).cloned()).collect();
        let hits: Vec<usize> = ex
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.constraint.holds(&asg, &ex.vars))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => classes[*i].0.push(a),
            [] => return Err(format!("assignment {a:?} is covered by no state")),
            many => return Err(format!("assignment {a:?} is covered by states {many:?}")),
        }
    }
    if let Some(empty) = classes.iter().position(|c| c.0.is_empty()) {
        return Err(format!("state {} admits no assignment", ex.states[empty].id));
    }
    Ok(classes.into_iter().collect())
}

/// Compare exploration with brute force. `Ok` carries the number of classes.
pub fn oracle_check(p: &Program) -> Result<usize, String> {
    let ex = explore_all(p);
    let sym = symbolic_classes(p, &ex)?;
    let conc = concrete_classes(p);
    if sym != conc {
        return Err(format!(
            "{} symbolic classes vs {} concrete classes\nsymbolic: {sym:?}\nconcrete: {conc:?}",
            sym.len(),
            conc.len()
        ));
    }
    Ok(sym.len())
}

/// Reconstructed parents against the engine's live stack, over every call record.
/// Returns (agreeing, total).
pub fn parent_agreement(ex: &Exploration<'_>) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    for (s, t) in ex.states.iter().zip(ex.traces()) {
        let truth = s.tracer.true_parents();
        for c in &t.calls {
            total += 1;
            if truth.get(&c.cid) == Some(&c.parent) {
                agree += 1;
            }
        }
    }
    (agree, total)
}
