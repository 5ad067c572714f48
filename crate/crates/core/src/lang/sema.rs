use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Bool,
    Int,
    Enum(Vec<String>),
    /// A bare enum member whose enclosing domain is decided by context.
    Member(String),
}

impl Ty {
    fn of(d: &Domain) -> Ty {
        match d {
            Domain::Bool => Ty::Bool,
            Domain::Int { .. } => Ty::Int,
            Domain::Enum(ms) => Ty::Enum(ms.clone()),
        }
    }

    fn compatible(&self, other: &Ty) -> bool {
        match (self, other) {
            (Ty::Bool, Ty::Bool) | (Ty::Int, Ty::Int) | (Ty::Member(_), Ty::Member(_)) => true,
            (Ty::Enum(a), Ty::Enum(b)) => a == b,
            (Ty::Enum(ms), Ty::Member(m)) | (Ty::Member(m), Ty::Enum(ms)) => ms.contains(m),
            _ => false,
        }
    }

    fn describe(&self) -> String {
        match self {
            Ty::Bool => "bool".into(),
            Ty::Int => "int".into(),
            Ty::Enum(ms) => format!("enum {{ {} }}", ms.join(", ")),
            Ty::Member(m) => format!("enum member `{m}`"),
        }
    }
}

pub(super) fn check(prog: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut globals: HashSet<&str> = HashSet::new();

    for c in &prog.configs {
        check_domain(&c.domain, c.pos, &mut diags);
        if !globals.insert(&c.name) {
            diags.push(Diagnostic::semantic(c.pos, format!("duplicate declaration of `{}`", c.name)));
        }
        if domain_ok(&c.domain) && !c.domain.contains(&c.default) {
            diags.push(Diagnostic::semantic(
                c.pos,
                format!("default `{}` of `{}` lies outside its domain {}", c.default, c.name, c.domain),
            ));
        }
    }
    for i in &prog.inputs {
        check_domain(&i.domain, i.pos, &mut diags);
        if !globals.insert(&i.name) {
            diags.push(Diagnostic::semantic(i.pos, format!("duplicate declaration of `{}`", i.name)));
        }
    }
    let global_names = prog.configs.iter().map(|c| &c.name).chain(prog.inputs.iter().map(|i| &i.name));
    for g in global_names {
        if prog.is_enum_member(g) {
            diags.push(Diagnostic::semantic(
                Pos::default(),
                format!("`{g}` is both a variable and an enum member"),
            ));
        }
    }

    let mut fn_names: HashSet<&str> = HashSet::new();
    for f in &prog.functions {
        if !fn_names.insert(&f.name) {
            diags.push(Diagnostic::semantic(f.pos, format!("duplicate function `{}`", f.name)));
        }
        if is_builtin(&f.name) {
            diags.push(Diagnostic::semantic(f.pos, format!("`{}` is a builtin", f.name)));
        }
        for p in &f.params {
            check_domain(&p.domain, f.pos, &mut diags);
        }
        if let Some(r) = &f.ret {
            check_domain(r, f.pos, &mut diags);
        }
        if f.attrs.is_extern && !f.body.is_empty() {
            diags.push(Diagnostic::semantic(f.pos, format!("extern function `{}` must not have a body", f.name)));
        }
        if (f.attrs.pure || f.attrs.benign) && !f.attrs.is_extern {
            diags.push(Diagnostic::semantic(
                f.pos,
                format!("`pure`/`benign` are only valid on extern functions (`{}`)", f.name),
            ));
        }
        if f.attrs.pure && f.attrs.benign {
            diags.push(Diagnostic::semantic(f.pos, format!("`{}` cannot be both pure and benign", f.name)));
        }
    }
    match prog.function(ENTRY) {
        None => diags.push(Diagnostic::semantic(Pos::new(1, 1), "missing entry function `main`")),
        Some(m) if m.attrs.is_extern || !m.params.is_empty() => diags.push(Diagnostic::semantic(
            m.pos,
            "entry function `main` must be a non-extern function without parameters",
        )),
        _ => {}
    }

    if !diags.is_empty() {
        return diags;
    }

    for f in prog.functions.iter().filter(|f| !f.attrs.is_extern) {
        let mut cx = FnCx {
            prog,
            func: f,
            locals: HashMap::new(),
            diags: &mut diags,
        };
        for p in &f.params {
            if prog.global(&p.name).is_some() {
                cx.diags.push(Diagnostic::semantic(
                    f.pos,
                    format!("parameter `{}` shadows a global declaration", p.name),
                ));
            }
            if cx.locals.insert(p.name.clone(), Ty::of(&p.domain)).is_some() {
                cx.diags.push(Diagnostic::semantic(f.pos, format!("duplicate parameter `{}`", p.name)));
            }
        }
        for s in &f.body {
            cx.stmt(s);
        }
    }
    diags
}

fn domain_ok(d: &Domain) -> bool {
    match d {
        Domain::Bool => true,
        Domain::Int { .. } => d.size() >= 1 && d.size() <= MAX_INT_DOMAIN,
        Domain::Enum(ms) => !ms.is_empty(),
    }
}

fn check_domain(d: &Domain, pos: Pos, diags: &mut Vec<Diagnostic>) {
    match d {
        Domain::Bool => {}
        Domain::Int { lo, hi } => {
            if lo > hi {
                diags.push(Diagnostic::semantic(pos, format!("empty domain: [{lo}, {hi}] has lo > hi")));
            } else if d.size() > MAX_INT_DOMAIN {
                diags.push(Diagnostic::semantic(
                    pos,
                    format!("integer domain [{lo}, {hi}] exceeds {MAX_INT_DOMAIN} values"),
                ));
            }
        }
        Domain::Enum(ms) => {
            if ms.is_empty() {
                diags.push(Diagnostic::semantic(pos, "enum domain needs at least one member"));
            }
            let mut seen = HashSet::new();
            for m in ms {
                if !seen.insert(m) {
                    diags.push(Diagnostic::semantic(pos, format!("duplicate enum member `{m}`")));
                }
            }
        }
    }
}

struct FnCx<'a> {
    prog: &'a Program,
    func: &'a FunctionDef,
    locals: HashMap<String, Ty>,
    diags: &'a mut Vec<Diagnostic>,
}

impl FnCx<'_> {
    fn err(&mut self, pos: Pos, msg: String) {
        self.diags.push(Diagnostic::semantic(pos, msg));
    }

    /// Locals declared inside a block go out of scope at its end.
    fn block(&mut self, stmts: &[Stmt]) {
        let saved = self.locals.clone();
        for s in stmts {
            self.stmt(s);
        }
        self.locals = saved;
    }

    fn bind(&mut self, pos: Pos, local: &str, declare: bool, ty: Ty) {
        if declare {
            if self.prog.global(local).is_some() || self.prog.is_enum_member(local) {
                self.err(pos, format!("local `{local}` shadows a global name"));
            } else if self.locals.contains_key(local) {
                self.err(pos, format!("duplicate declaration of local `{local}`"));
            } else {
                self.locals.insert(local.to_string(), ty);
            }
        } else if self.prog.global(local).is_some() {
            self.err(pos, format!("cannot assign to global parameter `{local}`"));
        } else {
            match self.locals.get(local) {
                None => self.err(pos, format!("assignment to undeclared local `{local}`")),
                Some(t) if !t.compatible(&ty) => {
                    let msg = format!(
                        "type mismatch assigning {} to `{local}` of type {}",
                        ty.describe(),
                        t.describe()
                    );
                    self.err(pos, msg)
                }
                Some(_) => {}
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Assign {
                local,
                declare,
                value,
            } => {
                if let Some(ty) = self.expr(value, s.pos) {
                    self.bind(s.pos, local, *declare, ty);
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expect_bool(cond, s.pos);
                self.block(then_block);
                self.block(else_block);
            }
            StmtKind::While { cond, body, .. } => {
                self.expect_bool(cond, s.pos);
                self.block(body);
            }
            StmtKind::Call { dest, callee, args } => self.call(s.pos, dest.as_ref(), callee, args),
            StmtKind::Cost { .. } => {}
            StmtKind::Return(value) => match (value, &self.func.ret) {
                (None, None) => {}
                (Some(_), None) => {
                    let msg = format!("function `{}` does not declare a return domain", self.func.name);
                    self.err(s.pos, msg)
                }
                (None, Some(_)) => {
                    let msg = format!("function `{}` must return a value", self.func.name);
                    self.err(s.pos, msg)
                }
                (Some(e), Some(d)) => {
                    let want = Ty::of(d);
                    if let Some(t) = self.expr(e, s.pos) {
                        if !want.compatible(&t) {
                            self.err(s.pos, format!("returned {} but expected {}", t.describe(), want.describe()));
                        }
                    }
                }
            },
        }
    }

    fn call(&mut self, pos: Pos, dest: Option<&CallDest>, callee: &str, args: &[Expr]) {
        let arg_tys: Vec<Option<Ty>> = args.iter().map(|a| self.expr(a, pos)).collect();
        if is_builtin(callee) {
            if !args.is_empty() || dest.is_some() {
                self.err(pos, format!("builtin `{callee}` takes no arguments and returns nothing"));
            }
            return;
        }
        let Some(f) = self.prog.function(callee) else {
            self.err(pos, format!("call to undeclared function `{callee}`"));
            return;
        };
        if f.params.len() != args.len() {
            self.err(
                pos,
                format!("`{callee}` expects {} argument(s), got {}", f.params.len(), args.len()),
            );
        } else {
            for (p, t) in f.params.iter().zip(arg_tys) {
                let want = Ty::of(&p.domain);
                if let Some(t) = t {
                    if !want.compatible(&t) {
                        self.err(
                            pos,
                            format!("argument `{}` of `{callee}` expects {}, got {}", p.name, want.describe(), t.describe()),
                        );
                    }
                }
            }
        }
        if let Some(d) = dest {
            match &f.ret {
                None => self.err(pos, format!("`{callee}` returns no value")),
                Some(r) => self.bind(pos, &d.local, d.declare, Ty::of(r)),
            }
        }
    }

    fn expect_bool(&mut self, e: &Expr, pos: Pos) {
        if let Some(t) = self.expr(e, pos) {
            if t != Ty::Bool {
                self.err(pos, format!("condition must be bool, found {}", t.describe()));
            }
        }
    }

    fn expr(&mut self, e: &Expr, pos: Pos) -> Option<Ty> {
        match e {
            Expr::Int(_) => Some(Ty::Int),
            Expr::Bool(_) => Some(Ty::Bool),
            Expr::Name(n, npos) => {
                if let Some(t) = self.locals.get(n) {
                    return Some(t.clone());
                }
                if let Some((_, d)) = self.prog.global(n) {
                    return Some(Ty::of(d));
                }
                if self.prog.is_enum_member(n) {
                    return Some(Ty::Member(n.clone()));
                }
                self.err(*npos, format!("undeclared name `{n}`"));
                None
            }
            Expr::Unary(op, inner) => {
                let t = self.expr(inner, pos)?;
                let want = match op {
                    UnOp::Not => Ty::Bool,
                    UnOp::Neg => Ty::Int,
                };
                if t != want {
                    self.err(pos, format!("operand of unary operator must be {}", want.describe()));
                    return None;
                }
                Some(want)
            }
            Expr::Binary(op, a, b) => {
                let ta = self.expr(a, pos);
                let tb = self.expr(b, pos);
                let (ta, tb) = (ta?, tb?);
                let ok = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        ta == Ty::Int && tb == Ty::Int
                    }
                    BinOp::And | BinOp::Or => ta == Ty::Bool && tb == Ty::Bool,
                    BinOp::Eq | BinOp::Ne => ta.compatible(&tb),
                };
                if !ok {
                    self.err(
                        pos,
                        format!("operator `{}` cannot combine {} and {}", op.symbol(), ta.describe(), tb.describe()),
                    );
                    return None;
                }
                Some(match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => Ty::Int,
                    _ => Ty::Bool,
                })
            }
        }
    }
}
