//! Canonical ConfScript pretty printer. `parse(print(p)) == p` for every checked program.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for c in &p.configs {
        let _ = writeln!(out, "config {}: {} = {};", c.name, c.domain, c.default);
    }
    for i in &p.inputs {
        let _ = writeln!(out, "input {}: {};", i.name, i.domain);
    }
    for f in &p.functions {
        out.push('\n');
        print_function(&mut out, f);
    }
    out
}

fn print_function(out: &mut String, f: &FunctionDef) {
    if f.attrs.is_extern {
        out.push_str("extern ");
    }
    if f.attrs.pure {
        out.push_str("pure ");
    }
    if f.attrs.benign {
        out.push_str("benign ");
    }
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.domain))
        .collect();
    let _ = write!(out, "fn {}({})", f.name, params.join(", "));
    if let Some(r) = &f.ret {
        let _ = write!(out, " -> {r}");
    }
    if f.attrs.is_extern {
        out.push_str(";\n");
    } else {
        out.push(' ');
        print_block(out, &f.body, 0);
        out.push('\n');
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, block: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in block {
        indent(out, depth + 1);
        print_stmt(out, s, depth + 1);
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn print_call(out: &mut String, callee: &str, args: &[Expr]) {
    let args: Vec<String> = args.iter().map(print_expr).collect();
    let _ = write!(out, "{callee}({})", args.join(", "));
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Assign {
            local,
            declare,
            value,
        } => {
            let kw = if *declare { "let " } else { "" };
            let _ = write!(out, "{kw}{local} = {};", print_expr(value));
        }
        StmtKind::Call { dest, callee, args } => {
            if let Some(d) = dest {
                let kw = if d.declare { "let " } else { "" };
                let _ = write!(out, "{kw}{} = ", d.local);
            }
            print_call(out, callee, args);
            out.push(';');
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = write!(out, "if {} ", print_expr(cond));
            print_block(out, then_block, depth);
            match else_block.as_slice() {
                [] => {}
                [single @ Stmt {
                    kind: StmtKind::If { .. },
                    ..
                }] => {
                    out.push_str(" else ");
                    print_stmt(out, single, depth);
                }
                _ => {
                    out.push_str(" else ");
                    print_block(out, else_block, depth);
                }
            }
        }
        StmtKind::While { cond, bound, body } => {
            let _ = write!(out, "while {} bound {bound} ", print_expr(cond));
            print_block(out, body, depth);
        }
        StmtKind::Cost { metric, amount } => {
            let _ = write!(out, "cost {metric} {amount};");
        }
        StmtKind::Return(None) => out.push_str("return;"),
        StmtKind::Return(Some(e)) => {
            let _ = write!(out, "return {};", print_expr(e));
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Name(n, _) => out.push_str(n),
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Not => '!',
                UnOp::Neg => '-',
            });
            let wrap = matches!(**inner, Expr::Binary(..) | Expr::Int(_));
            write_wrapped(out, inner, wrap);
        }
        Expr::Binary(op, a, b) => {
            let prec = op.precedence();
            let wrap_left = match &**a {
                Expr::Binary(l, ..) => l.precedence() < prec || (op.is_comparison() && l.is_comparison()),
                _ => false,
            };
            let wrap_right = match &**b {
                Expr::Binary(r, ..) => r.precedence() <= prec,
                _ => false,
            };
            write_wrapped(out, a, wrap_left);
            let _ = write!(out, " {} ", op.symbol());
            write_wrapped(out, b, wrap_right);
        }
    }
}

fn write_wrapped(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}
