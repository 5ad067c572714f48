//! Depth-first symbolic exploration.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::lang::{
    BinOp, Domain, Expr, FunctionDef, Metric, Program, Stmt, StmtId, StmtKind, UnOp, Value,
    BUILTIN_TRACE_OFF, BUILTIN_TRACE_ON, ENTRY,
};
use crate::trace::{finalize_trace, AddressMap, FrameMark, StateStatus, StateTrace, TraceFile, Tracer};

use super::expr::{atoms_of, mk_bin, mk_const, mk_neg, mk_not, ExprRef, SymExpr, SymVar, SymVarKind, VarId};
use super::solver::{component, solve, SolverError};
use super::state::{Cont, ExecState, Frame, Location, PathConstraint};
use super::SymexecError;

/// Deepest call stack a state may build before it is cut off.
pub const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Total states ever created, the initial one included.
    pub max_states: usize,
    /// Virtual clock limit per state.
    pub max_latency: u64,
    /// Statements executed across all states.
    pub max_steps: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_states: 4096,
            max_latency: 1_000_000,
            max_steps: 10_000_000,
        }
    }
}

/// Result of one exploration.
#[derive(Debug, Clone)]
pub struct Exploration<'p> {
    /// Terminal states in the order they finished.
    pub states: Vec<ExecState<'p>>,
    pub vars: Vec<SymVar>,
    pub addresses: AddressMap,
    /// A budget cut exploration short; some paths may be missing or truncated.
    pub exhausted: bool,
    pub steps: u64,
}

impl Exploration<'_> {
    pub fn traces(&self) -> Vec<StateTrace> {
        self.states
            .iter()
            .map(|s| finalize_state_trace(s, &self.vars, &self.addresses))
            .collect()
    }

    /// Raw trace files, one per terminal state.
    pub fn trace_files(&self) -> Vec<TraceFile> {
        self.states
            .iter()
            .map(|s| state_trace_file(s, &self.vars, &self.addresses))
            .collect()
    }
}

/// Raw records of a finished state with the headers needed to read them back.
pub fn state_trace_file(state: &ExecState<'_>, vars: &[SymVar], addresses: &AddressMap) -> TraceFile {
    TraceFile {
        state: state.id,
        status: Some(state.status),
        end: state.tracer.clock(),
        constraint: state.constraint.atom_texts(vars),
        functions: addresses
            .functions
            .iter()
            .map(|r| (r.start, r.name.clone()))
            .collect(),
        events: state.tracer.events().to_vec(),
    }
}

/// Build the profile of a finished state.
pub fn finalize_state_trace(state: &ExecState<'_>, vars: &[SymVar], addresses: &AddressMap) -> StateTrace {
    let names = crate::trace::state::names_from(addresses);
    finalize_trace(
        state.id,
        state.status,
        state.constraint.atom_texts(vars),
        state.tracer.events(),
        state.tracer.clock(),
        &names,
    )
}

pub struct Engine<'p> {
    program: &'p Program,
    addresses: AddressMap,
    vars: Vec<SymVar>,
    budget: Budget,
    next_id: usize,
    steps: u64,
    exhausted: bool,
}

struct Decision<'p> {
    taken: bool,
    fork: Option<ExecState<'p>>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, budget: Budget) -> Self {
        Engine {
            program,
            addresses: AddressMap::new(program),
            vars: Vec::new(),
            budget,
            next_id: 0,
            steps: 0,
            exhausted: false,
        }
    }

    pub fn vars(&self) -> &[SymVar] {
        &self.vars
    }

    /// Entry state with every config bound from `config` (defaults for missing ones)
    /// and every input bound from `config` or to the smallest value of its domain.
    pub fn initial_state(&mut self, config: &BTreeMap<String, Value>) -> Result<ExecState<'p>, SymexecError> {
        let p = self.program;
        for name in config.keys() {
            if p.global(name).is_none() {
                return Err(SymexecError::UnknownName(name.clone()));
            }
        }
        let mut globals = BTreeMap::new();
        for c in &p.configs {
            let v = config.get(&c.name).cloned().unwrap_or_else(|| c.default.clone());
            if !c.domain.contains(&v) {
                return Err(SymexecError::UnsatInitialConfig {
                    name: c.name.clone(),
                    value: v.to_string(),
                });
            }
            globals.insert(c.name.clone(), mk_const(v));
        }
        for i in &p.inputs {
            let v = config.get(&i.name).cloned().unwrap_or_else(|| i.domain.smallest());
            if !i.domain.contains(&v) {
                return Err(SymexecError::UnsatInitialConfig {
                    name: i.name.clone(),
                    value: v.to_string(),
                });
            }
            globals.insert(i.name.clone(), mk_const(v));
        }
        let main = p.function(ENTRY).ok_or_else(|| SymexecError::UnknownName(ENTRY.into()))?;
        let mark = FrameMark {
            eip: self.addresses.entry(ENTRY).expect("entry is laid out"),
            return_address: 0,
            cid: None,
        };
        let id = self.next_id;
        self.next_id += 1;
        Ok(ExecState {
            id,
            forked_from: None,
            globals,
            frames: vec![Frame::new(main, None, mark)],
            constraint: PathConstraint::default(),
            taint: Default::default(),
            tracer: Tracer::new(),
            status: StateStatus::Running,
            steps: 0,
        })
    }

    /// Replace the targeted globals with fresh symbolic variables restricted to their domains.
    /// Targets are made symbolic in declaration order, configs before inputs.
    pub fn make_symbolic(&mut self, state: &mut ExecState<'p>, targets: &BTreeSet<String>) -> Result<(), SymexecError> {
        for t in targets {
            if self.program.global(t).is_none() {
                return Err(SymexecError::UnknownName(t.clone()));
            }
        }
        let p = self.program;
        let ordered = p
            .configs
            .iter()
            .map(|c| (&c.name, &c.domain, SymVarKind::Config))
            .chain(p.inputs.iter().map(|i| (&i.name, &i.domain, SymVarKind::Input)));
        for (name, domain, kind) in ordered {
            if !targets.contains(name) {
                continue;
            }
            let id = self.new_var(name.clone(), kind, domain.clone());
            state.constraint.domain_vars.push(id);
            state.set_location(Location::Global(name.clone()), Arc::new(SymExpr::Var(id)));
        }
        Ok(())
    }

    fn new_var(&mut self, name: String, kind: SymVarKind, domain: Domain) -> VarId {
        self.vars.push(SymVar { name, kind, domain });
        self.vars.len() - 1
    }

    /// Run every state to completion, depth first.
    pub fn run(mut self, initial: ExecState<'p>) -> Result<Exploration<'p>, SymexecError> {
        let mut work = vec![initial];
        let mut done = Vec::new();
        while let Some(mut st) = work.pop() {
            while st.status == StateStatus::Running {
                if self.steps >= self.budget.max_steps {
                    self.exhausted = true;
                    st.status = StateStatus::BudgetExceeded;
                    break;
                }
                if let Some(fork) = self.step(&mut st)? {
                    work.push(fork);
                }
            }
            done.push(st);
        }
        Ok(Exploration {
            states: done,
            vars: self.vars,
            addresses: self.addresses,
            exhausted: self.exhausted,
            steps: self.steps,
        })
    }

    fn step(&mut self, st: &mut ExecState<'p>) -> Result<Option<ExecState<'p>>, SymexecError> {
        let frame = st.frames.last_mut().expect("running state has a frame");
        match frame.conts.last_mut() {
            None => {
                self.do_return(st, None);
                Ok(None)
            }
            Some(Cont::Block { stmts, idx }) => {
                let Some(s) = stmts.get(*idx) else {
                    frame.conts.pop();
                    return Ok(None);
                };
                *idx += 1;
                self.count_step(st);
                self.exec(st, s)
            }
            Some(Cont::Loop { stmt, iter }) => {
                let StmtKind::While { cond, bound, .. } = &stmt.kind else {
                    unreachable!("loop continuation holds a while statement")
                };
                if *iter >= *bound {
                    frame.conts.pop();
                    return Ok(None);
                }
                self.count_step(st);
                st.tracer.charge(Metric::Instructions, 1);
                let c = self.eval(st, cond);
                let d = self.decide(st, c)?;
                apply_loop(st, d.taken);
                Ok(d.fork.map(|mut f| {
                    apply_loop(&mut f, false);
                    f
                }))
            }
        }
    }

    fn count_step(&mut self, st: &mut ExecState<'p>) {
        self.steps += 1;
        st.steps += 1;
    }

    fn exec(&mut self, st: &mut ExecState<'p>, s: &'p Stmt) -> Result<Option<ExecState<'p>>, SymexecError> {
        match &s.kind {
            StmtKind::Call { callee, .. } if callee == BUILTIN_TRACE_ON => {
                let mut marks: Vec<FrameMark> = st.frames.iter().map(|f| f.mark).collect();
                st.tracer.start(&mut marks);
                for (f, m) in st.frames.iter_mut().zip(marks) {
                    f.mark = m;
                }
                st.tracer.charge(Metric::Instructions, 1);
                return Ok(None);
            }
            StmtKind::Call { callee, .. } if callee == BUILTIN_TRACE_OFF => {
                st.tracer.charge(Metric::Instructions, 1);
                st.tracer.stop();
                return Ok(None);
            }
            _ => st.tracer.charge(Metric::Instructions, 1),
        }
        match &s.kind {
            StmtKind::Assign { local, value, .. } => {
                let v = self.eval(st, value);
                let depth = st.frames.len() - 1;
                st.set_location(
                    Location::Local {
                        depth,
                        name: local.clone(),
                    },
                    v,
                );
                Ok(None)
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let c = self.eval(st, cond);
                let d = self.decide(st, c)?;
                apply_if(st, d.taken, then_block, else_block);
                Ok(d.fork.map(|mut f| {
                    apply_if(&mut f, false, then_block, else_block);
                    f
                }))
            }
            StmtKind::While { .. } => {
                let frame = st.frames.last_mut().expect("frame");
                frame.conts.push(Cont::Loop { stmt: s, iter: 0 });
                Ok(None)
            }
            StmtKind::Call { dest, callee, args } => {
                let f = self.program.function(callee).expect("sema checked callee");
                let vals: Vec<ExprRef> = args.iter().map(|a| self.eval(st, a)).collect();
                let dest = dest.as_ref().map(|d| d.local.clone());
                if f.attrs.is_extern {
                    let ret = self.call_extern(st, f, &vals)?;
                    if let (Some(d), Some(v)) = (dest, ret) {
                        let depth = st.frames.len() - 1;
                        st.set_location(Location::Local { depth, name: d }, v);
                    }
                } else {
                    self.call_user(st, f, s.id, vals, dest);
                }
                Ok(None)
            }
            StmtKind::Cost { metric, amount } => {
                st.tracer.charge(*metric, *amount);
                if st.tracer.clock() > self.budget.max_latency {
                    st.status = StateStatus::BudgetExceeded;
                }
                Ok(None)
            }
            StmtKind::Return(value) => {
                let v = value.as_ref().map(|e| self.eval(st, e));
                self.do_return(st, v);
                Ok(None)
            }
        }
    }

    fn call_user(
        &mut self,
        st: &mut ExecState<'p>,
        f: &'p FunctionDef,
        site: StmtId,
        args: Vec<ExprRef>,
        dest: Option<String>,
    ) {
        if st.frames.len() >= MAX_CALL_DEPTH {
            st.status = StateStatus::BudgetExceeded;
            return;
        }
        let caller_cid = st.frames.iter().rev().find_map(|fr| fr.mark.cid);
        let mut mark = FrameMark {
            eip: self.addresses.entry(&f.name).expect("laid out"),
            return_address: self.addresses.return_address(site).expect("laid out"),
            cid: None,
        };
        st.tracer.call(&mut mark, caller_cid);
        st.frames.push(Frame::new(f, dest, mark));
        let depth = st.frames.len() - 1;
        for (p, v) in f.params.iter().zip(args) {
            st.set_location(
                Location::Local {
                    depth,
                    name: p.name.clone(),
                },
                v,
            );
        }
    }

    fn do_return(&mut self, st: &mut ExecState<'p>, value: Option<ExprRef>) {
        let frame = st.frames.pop().expect("frame to return from");
        let depth = st.frames.len();
        st.tracer.ret(&frame.mark);
        st.taint.drop_frame(depth);
        if st.frames.is_empty() {
            st.status = StateStatus::Terminated;
            return;
        }
        let value = value.or_else(|| frame.func.ret.as_ref().map(|d| mk_const(d.smallest())));
        if let (Some(d), Some(v)) = (frame.dest, value) {
            st.set_location(
                Location::Local {
                    depth: depth - 1,
                    name: d,
                },
                v,
            );
        }
    }

    fn call_extern(
        &mut self,
        st: &mut ExecState<'p>,
        f: &'p FunctionDef,
        args: &[ExprRef],
    ) -> Result<Option<ExprRef>, SymexecError> {
        let smallest = f.ret.as_ref().map(|d| mk_const(d.smallest()));
        if args.iter().all(|a| a.as_const().is_some()) {
            return Ok(smallest);
        }
        self.concretize_at_extern(st, f, args)
    }

    /// Bind each symbolic argument of an extern call to its smallest feasible value.
    /// The binding atoms stay for plain externs and are dropped for pure and benign
    /// ones; a pure extern returns a fresh symbolic value.
    pub fn concretize_at_extern(
        &mut self,
        st: &mut ExecState<'p>,
        f: &FunctionDef,
        args: &[ExprRef],
    ) -> Result<Option<ExprRef>, SymexecError> {
        let before = st.constraint.atoms.len();
        let mut bound = Vec::new();
        for (p, a) in f.params.iter().zip(args) {
            if a.as_const().is_some() {
                continue;
            }
            let w = self.witness(&st.constraint, a, &p.domain)?;
            let atom = mk_bin(BinOp::Eq, a.clone(), mk_const(w.clone()));
            st.constraint.atoms.extend(atoms_of(&atom, true, &self.vars));
            bound.push((a.clone(), w));
        }
        if f.attrs.pure || f.attrs.benign {
            st.constraint.atoms.truncate(before);
        } else {
            for (a, w) in bound {
                concretize_all(st, &a, &w);
            }
        }
        Ok(match &f.ret {
            None => None,
            Some(d) if f.attrs.pure => {
                let name = self.fresh_name(&f.name);
                let id = self.new_var(name, SymVarKind::Fresh, d.clone());
                st.constraint.domain_vars.push(id);
                Some(Arc::new(SymExpr::Var(id)))
            }
            Some(d) => Some(mk_const(d.smallest())),
        })
    }

    fn fresh_name(&self, func: &str) -> String {
        let mut n = self.vars.iter().filter(|v| v.kind == SymVarKind::Fresh).count();
        loop {
            let name = format!("{func}_ret{n}");
            let taken = self.program.global(&name).is_some()
                || self.program.is_enum_member(&name)
                || self.vars.iter().any(|v| v.name == name);
            if !taken {
                return name;
            }
            n += 1;
        }
    }

    /// Smallest value of `e`, in `domain` order, that the constraint allows.
    fn witness(&self, pc: &PathConstraint, e: &ExprRef, domain: &Domain) -> Result<Value, SymexecError> {
        let seed = e.vars();
        let (scope, atoms) = component(&pc.atoms, &seed);
        let scope: Vec<VarId> = scope.into_iter().collect();
        for v in domain.values() {
            let mut q = atoms.clone();
            q.push(mk_bin(BinOp::Eq, e.clone(), mk_const(v.clone())));
            if solve(&self.vars, &q, &scope)?.is_some() {
                return Ok(v);
            }
        }
        // the argument can leave the parameter's domain; take the value under the smallest model
        let model = solve(&self.vars, &atoms, &scope)?
            .ok_or_else(|| SymexecError::UnsatState("no witness for extern argument".into()))?;
        e.eval(&model)
            .ok_or_else(|| SymexecError::UnsatState("witness does not evaluate".into()))
    }

    fn feasible(&self, pc: &PathConstraint, extra: &[ExprRef]) -> Result<bool, SolverError> {
        let mut seed = Vec::new();
        for a in extra {
            seed.extend(a.vars());
        }
        let mut all = pc.atoms.clone();
        all.extend(extra.iter().cloned());
        let (scope, atoms) = component(&all, &seed);
        let scope: Vec<VarId> = scope.into_iter().collect();
        Ok(solve(&self.vars, &atoms, &scope)?.is_some())
    }

    fn decide(&mut self, st: &mut ExecState<'p>, c: ExprRef) -> Result<Decision<'p>, SymexecError> {
        if let SymExpr::Const(v) = &*c {
            return Ok(Decision {
                taken: *v == Value::Bool(true),
                fork: None,
            });
        }
        let t_atoms = atoms_of(&c, true, &self.vars);
        let f_atoms = atoms_of(&c, false, &self.vars);
        let t_ok = self.feasible(&st.constraint, &t_atoms)?;
        let f_ok = self.feasible(&st.constraint, &f_atoms)?;
        match (t_ok, f_ok) {
            (true, false) => Ok(Decision { taken: true, fork: None }),
            (false, true) => Ok(Decision { taken: false, fork: None }),
            (false, false) => Err(SymexecError::UnsatState(format!(
                "neither arm feasible in state {}",
                st.id
            ))),
            (true, true) => {
                if self.next_id >= self.budget.max_states {
                    self.exhausted = true;
                    st.constraint.add(t_atoms);
                    return Ok(Decision { taken: true, fork: None });
                }
                let mut fork = st.clone();
                fork.id = self.next_id;
                fork.forked_from = Some(st.id);
                self.next_id += 1;
                fork.constraint.add(f_atoms);
                st.constraint.add(t_atoms);
                Ok(Decision {
                    taken: true,
                    fork: Some(fork),
                })
            }
        }
    }

    fn eval(&self, st: &ExecState<'p>, e: &Expr) -> ExprRef {
        match e {
            Expr::Int(i) => mk_const(Value::Int(*i)),
            Expr::Bool(b) => mk_const(Value::Bool(*b)),
            Expr::Name(n, _) => {
                let frame = st.frames.last().expect("frame");
                if let Some(v) = frame.locals.get(n) {
                    return v.clone();
                }
                if let Some(v) = st.globals.get(n) {
                    return v.clone();
                }
                mk_const(Value::Enum(n.clone()))
            }
            Expr::Unary(UnOp::Not, inner) => mk_not(self.eval(st, inner)),
            Expr::Unary(UnOp::Neg, inner) => mk_neg(self.eval(st, inner)),
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.eval(st, a), self.eval(st, b));
                logical(*op, a, b)
            }
        }
    }
}

/// `op(a, b)` with `&&`/`||` simplified against constant operands.
fn logical(op: BinOp, a: ExprRef, b: ExprRef) -> ExprRef {
    let absorbing = match op {
        BinOp::And => Value::Bool(false),
        BinOp::Or => Value::Bool(true),
        _ => return mk_bin(op, a, b),
    };
    for (x, y) in [(&a, &b), (&b, &a)] {
        match x.as_const() {
            Some(v) if *v == absorbing => return x.clone(),
            Some(_) => return y.clone(),
            None => {}
        }
    }
    mk_bin(op, a, b)
}

fn apply_if<'p>(st: &mut ExecState<'p>, taken: bool, then_block: &'p [Stmt], else_block: &'p [Stmt]) {
    let arm = if taken { then_block } else { else_block };
    if !arm.is_empty() {
        let frame = st.frames.last_mut().expect("frame");
        frame.conts.push(Cont::Block { stmts: arm, idx: 0 });
    }
}

fn apply_loop(st: &mut ExecState<'_>, taken: bool) {
    let frame = st.frames.last_mut().expect("frame");
    if !taken {
        frame.conts.pop();
        return;
    }
    let Some(Cont::Loop { stmt, iter }) = frame.conts.last_mut() else {
        unreachable!("loop continuation on top")
    };
    *iter += 1;
    let StmtKind::While { body, .. } = &stmt.kind else {
        unreachable!()
    };
    let body: &[Stmt] = body;
    if !body.is_empty() {
        frame.conts.push(Cont::Block { stmts: body, idx: 0 });
    }
}

/// Bind every location holding `e` to the concrete witness `w`.
pub fn concretize_all(st: &mut ExecState<'_>, e: &ExprRef, w: &Value) {
    for loc in st.taint.holders_of(e) {
        st.set_location(loc, mk_const(w.clone()));
    }
}

/// Explore `program` from `main` with `symbolic` names made symbolic and every other
/// parameter bound from `config`.
pub fn explore<'p>(
    program: &'p Program,
    config: &BTreeMap<String, Value>,
    symbolic: &BTreeSet<String>,
    budget: Budget,
) -> Result<Exploration<'p>, SymexecError> {
    let mut engine = Engine::new(program, budget);
    let mut st = engine.initial_state(config)?;
    engine.make_symbolic(&mut st, symbolic)?;
    engine.run(st)
}
