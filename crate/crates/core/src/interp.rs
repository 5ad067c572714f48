//! Plain concrete interpreter over the AST.
//!
//! Shares no code with the symbolic engine beyond the AST, so it can serve as an
//! independent reference: for a fixed assignment of every parameter it yields the
//! branch decisions taken, the cost vector and the dynamic call tree.

use std::collections::BTreeMap;

use crate::lang::{
    BinOp, Expr, FunctionDef, Metric, Program, Stmt, StmtId, StmtKind, UnOp, Value,
    BUILTIN_TRACE_OFF, BUILTIN_TRACE_ON, ENTRY,
};
use crate::symexec::{Budget, MAX_CALL_DEPTH};
use crate::trace::{CostVector, StateStatus};

/// Evaluate an expression. `lookup` resolves variables; any other name is taken to be
/// an enum member. Returns `None` on a type error.
pub fn eval_expr(e: &Expr, lookup: &dyn Fn(&str) -> Option<Value>) -> Option<Value> {
    Some(match e {
        Expr::Int(i) => Value::Int(*i),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Name(n, _) => lookup(n).unwrap_or_else(|| Value::Enum(n.clone())),
        Expr::Unary(UnOp::Not, x) => match eval_expr(x, lookup)? {
            Value::Bool(b) => Value::Bool(!b),
            _ => return None,
        },
        Expr::Unary(UnOp::Neg, x) => match eval_expr(x, lookup)? {
            Value::Int(i) => Value::Int(i.wrapping_neg()),
            _ => return None,
        },
        Expr::Binary(op, a, b) => {
            let a = eval_expr(a, lookup)?;
            let b = eval_expr(b, lookup)?;
            match (op, &a, &b) {
                (BinOp::Add, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_add(*y)),
                (BinOp::Sub, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_sub(*y)),
                (BinOp::Mul, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_mul(*y)),
                (BinOp::Lt, Value::Int(x), Value::Int(y)) => Value::Bool(x < y),
                (BinOp::Le, Value::Int(x), Value::Int(y)) => Value::Bool(x <= y),
                (BinOp::Gt, Value::Int(x), Value::Int(y)) => Value::Bool(x > y),
                (BinOp::Ge, Value::Int(x), Value::Int(y)) => Value::Bool(x >= y),
                (BinOp::Eq, _, _) => Value::Bool(a == b),
                (BinOp::Ne, _, _) => Value::Bool(a != b),
                (BinOp::And, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x && *y),
                (BinOp::Or, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x || *y),
                _ => return None,
            }
        }
    })
}

/// One traced call of a concrete run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteCall {
    pub func: String,
    /// Index of the calling traced call in [`ConcreteRun::calls`].
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteRun {
    /// Every branch and loop-condition decision, in execution order.
    pub path: Vec<(StmtId, bool)>,
    pub cost: CostVector,
    pub status: StateStatus,
    pub calls: Vec<ConcreteCall>,
}

enum Flow {
    Next,
    Return(Option<Value>),
    Halt,
}

struct Frame {
    locals: BTreeMap<String, Value>,
    /// Traced call index of this activation, once tracing has seen it.
    call: Option<usize>,
    func: String,
}

struct Interp<'a> {
    p: &'a Program,
    globals: &'a BTreeMap<String, Value>,
    budget: Budget,
    tracing: bool,
    run: ConcreteRun,
    stack: Vec<Frame>,
}

/// Run `main` with every config and input taken from `env`; missing configs take their
/// defaults and missing inputs the smallest value of their domain.
pub fn run_concrete(p: &Program, env: &BTreeMap<String, Value>, budget: Budget) -> ConcreteRun {
    let mut globals = env.clone();
    for c in &p.configs {
        globals.entry(c.name.clone()).or_insert_with(|| c.default.clone());
    }
    for i in &p.inputs {
        globals.entry(i.name.clone()).or_insert_with(|| i.domain.smallest());
    }
    let mut it = Interp {
        p,
        globals: &globals,
        budget,
        tracing: false,
        run: ConcreteRun {
            path: Vec::new(),
            cost: CostVector::default(),
            status: StateStatus::Terminated,
            calls: Vec::new(),
        },
        stack: Vec::new(),
    };
    let main = p.function(ENTRY).expect("program has an entry");
    if it.invoke(main, Vec::new()).is_none() {
        it.run.status = StateStatus::BudgetExceeded;
    }
    it.run
}

impl Interp<'_> {
    fn charge(&mut self, m: Metric, n: u64) -> bool {
        if self.tracing {
            self.run.cost.add_metric(m, n);
        }
        self.run.cost.latency <= self.budget.max_latency
    }

    fn lookup(&self, n: &str) -> Option<Value> {
        let frame = self.stack.last()?;
        frame.locals.get(n).or_else(|| self.globals.get(n)).cloned()
    }

    fn eval(&self, e: &Expr) -> Value {
        eval_expr(e, &|n| self.lookup(n)).expect("well-typed program")
    }

    /// Run a user function. `None` means the run was cut off by a budget.
    fn invoke(&mut self, f: &FunctionDef, args: Vec<Value>) -> Option<Option<Value>> {
        if self.stack.len() >= MAX_CALL_DEPTH {
            return None;
        }
        let parent = self.stack.iter().rev().find_map(|fr| fr.call);
        let call = self.tracing.then(|| self.push_call(&f.name, parent));
        let locals = f.params.iter().map(|p| p.name.clone()).zip(args).collect();
        self.stack.push(Frame {
            locals,
            call,
            func: f.name.clone(),
        });
        let flow = self.block(&f.body);
        self.stack.pop();
        match flow {
            Flow::Halt => None,
            Flow::Return(v) => Some(v),
            Flow::Next => Some(f.ret.as_ref().map(|d| d.smallest())),
        }
    }

    fn push_call(&mut self, func: &str, parent: Option<usize>) -> usize {
        self.run.calls.push(ConcreteCall {
            func: func.to_string(),
            parent,
        });
        self.run.calls.len() - 1
    }

    fn block(&mut self, stmts: &[Stmt]) -> Flow {
        for s in stmts {
            match self.stmt(s) {
                Flow::Next => {}
                other => return other,
            }
        }
        Flow::Next
    }

    fn set_local(&mut self, name: &str, v: Value) {
        let frame = self.stack.last_mut().expect("frame");
        frame.locals.insert(name.to_string(), v);
    }

    fn stmt(&mut self, s: &Stmt) -> Flow {
        if let StmtKind::Call { callee, .. } = &s.kind {
            if callee == BUILTIN_TRACE_ON {
                if !self.tracing {
                    self.tracing = true;
                    // activations already running get their records now, outermost first
                    let mut parent = None;
                    for i in 0..self.stack.len() {
                        if self.stack[i].call.is_none() {
                            let name = self.stack[i].func.clone();
                            self.stack[i].call = Some(self.push_call(&name, parent));
                        }
                        parent = self.stack[i].call;
                    }
                }
                self.charge(Metric::Instructions, 1);
                return Flow::Next;
            }
            if callee == BUILTIN_TRACE_OFF {
                self.charge(Metric::Instructions, 1);
                self.tracing = false;
                return Flow::Next;
            }
        }
        self.charge(Metric::Instructions, 1);
        match &s.kind {
            StmtKind::Assign { local, value, .. } => {
                let v = self.eval(value);
                self.set_local(local, v);
                Flow::Next
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let c = self.eval(cond) == Value::Bool(true);
                self.run.path.push((s.id, c));
                self.block(if c { then_block } else { else_block })
            }
            StmtKind::While { cond, bound, body } => {
                // the statement itself, then one charge per condition evaluation
                for _ in 0..*bound {
                    self.charge(Metric::Instructions, 1);
                    let c = self.eval(cond) == Value::Bool(true);
                    self.run.path.push((s.id, c));
                    if !c {
                        return Flow::Next;
                    }
                    match self.block(body) {
                        Flow::Next => {}
                        other => return other,
                    }
                }
                Flow::Next
            }
            StmtKind::Call { dest, callee, args } => {
                let f = self.p.function(callee).expect("declared callee");
                let vals: Vec<Value> = args.iter().map(|a| self.eval(a)).collect();
                let ret = if f.attrs.is_extern {
                    f.ret.as_ref().map(|d| d.smallest())
                } else {
                    match self.invoke(f, vals) {
                        Some(v) => v,
                        None => return Flow::Halt,
                    }
                };
                if let (Some(d), Some(v)) = (dest, ret) {
                    self.set_local(&d.local, v);
                }
                Flow::Next
            }
            StmtKind::Cost { metric, amount } => {
                if self.charge(*metric, *amount) {
                    Flow::Next
                } else {
                    Flow::Halt
                }
            }
            StmtKind::Return(e) => Flow::Return(e.as_ref().map(|e| self.eval(e))),
        }
    }
}
