use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::lang::{BinOp, FunctionDef, Stmt, StmtId, Value};
use crate::trace::{FrameMark, StateStatus, Tracer};

use super::expr::{render, ExprRef, SymExpr, SymVar, VarId};

/// A runtime value: concrete, or an expression over symbolic variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolicValue {
    Concrete(Value),
    Expr(ExprRef),
}

impl From<&ExprRef> for SymbolicValue {
    fn from(e: &ExprRef) -> Self {
        match &**e {
            SymExpr::Const(v) => SymbolicValue::Concrete(v.clone()),
            _ => SymbolicValue::Expr(e.clone()),
        }
    }
}

/// Conjunction of the domain restrictions of the symbolic variables and the
/// branch atoms taken along the path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathConstraint {
    /// Variables whose domain restriction is part of the constraint, in seeding order.
    pub domain_vars: Vec<VarId>,
    pub atoms: Vec<ExprRef>,
}

impl PathConstraint {
    /// Conjoin `atoms`. An equality pinning a variable to a constant subsumes every
    /// other atom over that variable alone, so those are dropped (or never added).
    pub fn add(&mut self, atoms: Vec<ExprRef>) {
        for a in atoms {
            let vs = a.vars();
            if let [v] = vs.as_slice() {
                if self.atoms.iter().any(|b| pins(b) == Some(*v)) {
                    continue;
                }
                if pins(&a) == Some(*v) {
                    self.atoms.retain(|b| b.vars() != vs);
                }
            }
            self.atoms.push(a);
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out: BTreeSet<VarId> = self.domain_vars.iter().copied().collect();
        for a in &self.atoms {
            out.extend(a.vars());
        }
        out
    }

    /// Branch atoms as canonical text.
    pub fn atom_texts(&self, vars: &[SymVar]) -> Vec<String> {
        self.atoms.iter().map(|a| render(a, vars)).collect()
    }

    /// Domain restrictions as text, e.g. `flush in [0, 2]` or `autocommit in {false, true}`.
    pub fn domain_texts(&self, vars: &[SymVar]) -> Vec<String> {
        self.domain_vars
            .iter()
            .map(|&v| {
                let var = &vars[v];
                match &var.domain {
                    crate::lang::Domain::Int { lo, hi } => format!("{} in [{lo}, {hi}]", var.name),
                    d => {
                        let vals: Vec<String> = d.values().iter().map(|x| x.to_string()).collect();
                        format!("{} in {{{}}}", var.name, vals.join(", "))
                    }
                }
            })
            .collect()
    }

    /// Whether a full assignment (indexed by variable id) satisfies every atom.
    pub fn holds(&self, asg: &[Option<Value>], vars: &[SymVar]) -> bool {
        self.domain_vars
            .iter()
            .all(|&v| asg[v].as_ref().is_some_and(|x| vars[v].domain.contains(x)))
            && self
                .atoms
                .iter()
                .all(|a| a.eval(asg) == Some(Value::Bool(true)))
    }
}

/// The variable an atom of the form `v == constant` pins.
fn pins(a: &SymExpr) -> Option<VarId> {
    match a {
        SymExpr::Bin(BinOp::Eq, l, r) => match (&**l, &**r) {
            (SymExpr::Var(v), SymExpr::Const(_)) => Some(*v),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Global(String),
    Local { depth: usize, name: String },
}

/// Which locations currently hold which symbolic expression, so that binding one
/// copy to a concrete witness can bind every copy.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaintMap {
    holders: HashMap<ExprRef, BTreeSet<Location>>,
    held: BTreeMap<Location, ExprRef>,
}

impl TaintMap {
    /// Note that `loc` now holds `value`. Concrete values are not tracked.
    pub fn bind(&mut self, loc: Location, value: &ExprRef) {
        self.forget(&loc);
        if value.as_const().is_none() {
            self.holders.entry(value.clone()).or_default().insert(loc.clone());
            self.held.insert(loc, value.clone());
        }
    }

    pub fn forget(&mut self, loc: &Location) {
        if let Some(old) = self.held.remove(loc) {
            if let Some(set) = self.holders.get_mut(&old) {
                set.remove(loc);
                if set.is_empty() {
                    self.holders.remove(&old);
                }
            }
        }
    }

    /// Drop every local of the frame at `depth`.
    pub fn drop_frame(&mut self, depth: usize) {
        let dead: Vec<Location> = self
            .held
            .keys()
            .filter(|l| matches!(l, Location::Local { depth: d, .. } if *d == depth))
            .cloned()
            .collect();
        for l in dead {
            self.forget(&l);
        }
    }

    pub fn holders_of(&self, e: &ExprRef) -> Vec<Location> {
        self.holders
            .get(e)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn held(&self) -> impl Iterator<Item = (&Location, &ExprRef)> {
        self.held.iter()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Cont<'p> {
    Block { stmts: &'p [Stmt], idx: usize },
    Loop { stmt: &'p Stmt, iter: u32 },
}

#[derive(Debug, Clone)]
pub struct Frame<'p> {
    pub func: &'p FunctionDef,
    pub locals: BTreeMap<String, ExprRef>,
    pub(crate) conts: Vec<Cont<'p>>,
    /// Caller local receiving the return value.
    pub(crate) dest: Option<String>,
    pub mark: FrameMark,
}

impl<'p> Frame<'p> {
    pub(crate) fn new(func: &'p FunctionDef, dest: Option<String>, mark: FrameMark) -> Self {
        Frame {
            func,
            locals: BTreeMap::new(),
            conts: vec![Cont::Block {
                stmts: &func.body,
                idx: 0,
            }],
            dest,
            mark,
        }
    }
}

/// One execution path.
#[derive(Debug, Clone)]
pub struct ExecState<'p> {
    pub id: usize,
    /// State this one was forked from.
    pub forked_from: Option<usize>,
    pub globals: BTreeMap<String, ExprRef>,
    pub frames: Vec<Frame<'p>>,
    pub constraint: PathConstraint,
    pub taint: TaintMap,
    pub tracer: Tracer,
    pub status: StateStatus,
    pub steps: u64,
}

impl<'p> ExecState<'p> {
    /// Current function and the next statement to run in it, if any.
    pub fn pc(&self) -> Option<(&str, Option<StmtId>)> {
        let f = self.frames.last()?;
        let next = f.conts.iter().rev().find_map(|c| match c {
            Cont::Block { stmts, idx } => stmts.get(*idx).map(|s| s.id),
            Cont::Loop { stmt, .. } => Some(stmt.id),
        });
        Some((&f.func.name, next))
    }

    /// Value of a name as seen from the innermost frame.
    pub fn value_of(&self, name: &str) -> Option<SymbolicValue> {
        self.frames
            .last()
            .and_then(|f| f.locals.get(name))
            .or_else(|| self.globals.get(name))
            .map(SymbolicValue::from)
    }

    pub fn location(&self, loc: &Location) -> Option<&ExprRef> {
        match loc {
            Location::Global(n) => self.globals.get(n),
            Location::Local { depth, name } => self.frames.get(*depth)?.locals.get(name),
        }
    }

    pub(crate) fn set_location(&mut self, loc: Location, value: ExprRef) {
        match &loc {
            Location::Global(n) => {
                self.globals.insert(n.clone(), value.clone());
            }
            Location::Local { depth, name } => {
                self.frames[*depth].locals.insert(name.clone(), value.clone());
            }
        }
        self.taint.bind(loc, &value);
    }

    /// Every tainted location holds exactly its keyed expression.
    pub fn taint_consistent(&self) -> bool {
        self.taint
            .held()
            .all(|(loc, e)| self.location(loc) == Some(e))
    }
}
