//! Symbolic expressions over finite-domain variables and their canonical atoms.

use std::fmt::Write;
use std::sync::Arc;

use crate::lang::{BinOp, Domain, Value};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymVarKind {
    Config,
    Input,
    /// Return value of a pure extern call with symbolic arguments.
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SymVar {
    pub name: String,
    pub kind: SymVarKind,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymExpr {
    Const(Value),
    Var(VarId),
    Not(Arc<SymExpr>),
    Neg(Arc<SymExpr>),
    Bin(BinOp, Arc<SymExpr>, Arc<SymExpr>),
}

pub type ExprRef = Arc<SymExpr>;

impl SymExpr {
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            SymExpr::Const(_) => {}
            SymExpr::Var(v) => out.push(*v),
            SymExpr::Not(e) | SymExpr::Neg(e) => e.collect_vars(out),
            SymExpr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self {
            SymExpr::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Evaluate under a (possibly partial) assignment indexed by variable id.
    /// Returns `None` when an unassigned variable is reached.
    pub fn eval(&self, asg: &[Option<Value>]) -> Option<Value> {
        Some(match self {
            SymExpr::Const(v) => v.clone(),
            SymExpr::Var(v) => asg.get(*v)?.clone()?,
            SymExpr::Not(e) => match e.eval(asg)? {
                Value::Bool(b) => Value::Bool(!b),
                _ => return None,
            },
            SymExpr::Neg(e) => match e.eval(asg)? {
                Value::Int(i) => Value::Int(i.wrapping_neg()),
                _ => return None,
            },
            SymExpr::Bin(op, a, b) => {
                // short-circuit so partial assignments can still decide
                if matches!(op, BinOp::And | BinOp::Or) {
                    let short = *op == BinOp::Or;
                    let av = a.eval(asg);
                    if av == Some(Value::Bool(short)) {
                        return Some(Value::Bool(short));
                    }
                    let bv = b.eval(asg);
                    if bv == Some(Value::Bool(short)) {
                        return Some(Value::Bool(short));
                    }
                    return match (av?, bv?) {
                        (Value::Bool(_), Value::Bool(_)) => Some(Value::Bool(!short)),
                        _ => None,
                    };
                }
                apply_binop(*op, &a.eval(asg)?, &b.eval(asg)?)?
            }
        })
    }
}

pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Option<Value> {
    use Value::*;
    Some(match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.wrapping_add(*y)),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.wrapping_sub(*y)),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.wrapping_mul(*y)),
        (BinOp::Lt, Int(x), Int(y)) => Bool(x < y),
        (BinOp::Le, Int(x), Int(y)) => Bool(x <= y),
        (BinOp::Gt, Int(x), Int(y)) => Bool(x > y),
        (BinOp::Ge, Int(x), Int(y)) => Bool(x >= y),
        (BinOp::Eq, x, y) => Bool(x == y),
        (BinOp::Ne, x, y) => Bool(x != y),
        (BinOp::And, Bool(x), Bool(y)) => Bool(*x && *y),
        (BinOp::Or, Bool(x), Bool(y)) => Bool(*x || *y),
        _ => return None,
    })
}

/// Build `op(a, b)`, folding when both sides are constant.
pub fn mk_bin(op: BinOp, a: ExprRef, b: ExprRef) -> ExprRef {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(v) = apply_binop(op, x, y) {
            return Arc::new(SymExpr::Const(v));
        }
    }
    Arc::new(SymExpr::Bin(op, a, b))
}

pub fn mk_not(e: ExprRef) -> ExprRef {
    match &*e {
        SymExpr::Const(Value::Bool(b)) => Arc::new(SymExpr::Const(Value::Bool(!b))),
        SymExpr::Not(inner) => inner.clone(),
        _ => Arc::new(SymExpr::Not(e)),
    }
}

pub fn mk_neg(e: ExprRef) -> ExprRef {
    match &*e {
        SymExpr::Const(Value::Int(i)) => Arc::new(SymExpr::Const(Value::Int(i.wrapping_neg()))),
        _ => Arc::new(SymExpr::Neg(e)),
    }
}

pub fn mk_const(v: Value) -> ExprRef {
    Arc::new(SymExpr::Const(v))
}

fn is_bool_var(e: &SymExpr, vars: &[SymVar]) -> bool {
    matches!(e, SymExpr::Var(v) if vars[*v].domain == Domain::Bool)
}

/// Split a branch condition into canonical conjunct atoms.
///
/// Conjunctions are split, negations are pushed through `&&`/`||` and comparisons,
/// constants move to the right of comparisons, and a bare boolean variable `v`
/// becomes `v == true`.
pub fn atoms_of(cond: &ExprRef, positive: bool, vars: &[SymVar]) -> Vec<ExprRef> {
    let mut out = Vec::new();
    split(cond, positive, vars, &mut out);
    out
}

fn split(e: &ExprRef, positive: bool, vars: &[SymVar], out: &mut Vec<ExprRef>) {
    match &**e {
        SymExpr::Not(inner) => split(inner, !positive, vars, out),
        SymExpr::Bin(BinOp::And, a, b) if positive => {
            split(a, true, vars, out);
            split(b, true, vars, out);
        }
        SymExpr::Bin(BinOp::Or, a, b) if !positive => {
            split(a, false, vars, out);
            split(b, false, vars, out);
        }
        _ => out.push(canonical(e, positive, vars)),
    }
}

fn canonical(e: &ExprRef, positive: bool, vars: &[SymVar]) -> ExprRef {
    match &**e {
        SymExpr::Bin(op, a, b) if op.is_comparison() => {
            let op = if positive { *op } else { op.negated().expect("comparison") };
            orient(op, a, b, vars)
        }
        _ if is_bool_var(e, vars) => Arc::new(SymExpr::Bin(
            BinOp::Eq,
            e.clone(),
            mk_const(Value::Bool(positive)),
        )),
        _ if positive => normalize(e, vars),
        _ => mk_not(normalize(e, vars)),
    }
}

/// Comparison with the constant on the right; two variables are ordered by name.
fn orient(op: BinOp, a: &ExprRef, b: &ExprRef, vars: &[SymVar]) -> ExprRef {
    let swap = match (&**a, &**b) {
        (SymExpr::Const(_), r) => r.as_const().is_none(),
        (SymExpr::Var(x), SymExpr::Var(y)) => vars[*x].name > vars[*y].name,
        _ => false,
    };
    if swap {
        Arc::new(SymExpr::Bin(op.flipped(), b.clone(), a.clone()))
    } else {
        Arc::new(SymExpr::Bin(op, a.clone(), b.clone()))
    }
}

/// Canonical form of a residual boolean expression that is kept whole.
fn normalize(e: &ExprRef, vars: &[SymVar]) -> ExprRef {
    match &**e {
        SymExpr::Bin(op @ (BinOp::And | BinOp::Or), a, b) => {
            Arc::new(SymExpr::Bin(*op, normalize(a, vars), normalize(b, vars)))
        }
        SymExpr::Bin(op, a, b) if op.is_comparison() => orient(*op, a, b, vars),
        SymExpr::Not(inner) => canonical(inner, false, vars),
        _ if is_bool_var(e, vars) => canonical(e, true, vars),
        _ => e.clone(),
    }
}

/// Render an expression with variable names, compactly around comparisons
/// (`flush_at_trx_commit==1`), spaced elsewhere.
pub fn render(e: &SymExpr, vars: &[SymVar]) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, vars, 0);
    s
}

fn write_expr(out: &mut String, e: &SymExpr, vars: &[SymVar], parent_prec: u8) {
    match e {
        SymExpr::Const(v) => {
            let _ = write!(out, "{v}");
        }
        SymExpr::Var(v) => out.push_str(&vars[*v].name),
        SymExpr::Not(inner) | SymExpr::Neg(inner) => {
            out.push(if matches!(e, SymExpr::Not(_)) { '!' } else { '-' });
            let wrap = matches!(**inner, SymExpr::Bin(..));
            if wrap {
                out.push('(');
            }
            write_expr(out, inner, vars, 0);
            if wrap {
                out.push(')');
            }
        }
        SymExpr::Bin(op, a, b) => {
            let prec = op.precedence();
            let wrap = prec <= parent_prec;
            if wrap {
                out.push('(');
            }
            write_expr(out, a, vars, prec - 1 + u8::from(op.is_comparison()));
            if op.is_comparison() {
                out.push_str(op.symbol());
            } else {
                let _ = write!(out, " {} ", op.symbol());
            }
            write_expr(out, b, vars, prec);
            if wrap {
                out.push(')');
            }
        }
    }
}
