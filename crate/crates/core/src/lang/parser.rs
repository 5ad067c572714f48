use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::Diagnostic;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    next_stmt: u32,
}

type PResult<T> = Result<T, Diagnostic>;

pub(super) fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
        next_stmt: 0,
    };
    p.program()
}

/// Parse a standalone expression, e.g. a workload predicate given on the command line.
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
        next_stmt: 0,
    };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let mut d = Diagnostic::syntax(
            self.pos(),
            format!("unexpected {}", self.peek().describe()),
        );
        d.expected = expected.iter().map(|s| s.to_string()).collect();
        d
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&[&t.describe()]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program {
            configs: Vec::new(),
            inputs: Vec::new(),
            functions: Vec::new(),
        };
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Eof => break,
                Tok::Config => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let domain = self.domain()?;
                    self.expect(Tok::Assign)?;
                    let default = self.literal()?;
                    self.expect(Tok::Semi)?;
                    prog.configs.push(ConfigParam {
                        name,
                        domain,
                        default,
                        pos,
                    });
                }
                Tok::Input => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let domain = self.domain()?;
                    self.expect(Tok::Semi)?;
                    prog.inputs.push(InputParam { name, domain, pos });
                }
                Tok::Fn | Tok::Extern | Tok::Pure | Tok::Benign => {
                    let f = self.function()?;
                    prog.functions.push(f);
                }
                _ => return Err(self.unexpected(&["`config`", "`input`", "`fn`", "`extern`"])),
            }
        }
        Ok(prog)
    }

    fn domain(&mut self) -> PResult<Domain> {
        match self.peek() {
            Tok::BoolTy => {
                self.bump();
                Ok(Domain::Bool)
            }
            Tok::IntTy => {
                self.bump();
                self.expect(Tok::In)?;
                self.expect(Tok::LBracket)?;
                let lo = self.signed_int()?;
                self.expect(Tok::Comma)?;
                let hi = self.signed_int()?;
                self.expect(Tok::RBracket)?;
                Ok(Domain::Int { lo, hi })
            }
            Tok::EnumTy => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let mut members = Vec::new();
                if self.peek() != &Tok::RBrace {
                    members.push(self.ident()?);
                    while self.eat(&Tok::Comma) {
                        if self.peek() == &Tok::RBrace {
                            break;
                        }
                        members.push(self.ident()?);
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Domain::Enum(members))
            }
            _ => Err(self.unexpected(&["`bool`", "`int`", "`enum`"])),
        }
    }

    fn literal(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Value::Bool(false))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Value::Enum(s))
            }
            Tok::Int(_) | Tok::Minus => Ok(Value::Int(self.signed_int()?)),
            _ => Err(self.unexpected(&["literal"])),
        }
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let pos = self.pos();
        let mut attrs = FnAttrs::default();
        loop {
            match self.peek() {
                Tok::Extern => attrs.is_extern = true,
                Tok::Pure => attrs.pure = true,
                Tok::Benign => attrs.benign = true,
                _ => break,
            }
            self.bump();
        }
        self.expect(Tok::Fn)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                let pname = self.ident()?;
                self.expect(Tok::Colon)?;
                let domain = self.domain()?;
                params.push(Param {
                    name: pname,
                    domain,
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let ret = if self.eat(&Tok::Arrow) {
            Some(self.domain()?)
        } else {
            None
        };
        let body = if self.eat(&Tok::Semi) {
            Vec::new()
        } else if self.peek() == &Tok::LBrace {
            self.block()?
        } else {
            return Err(self.unexpected(&["`{`", "`;`"]));
        };
        Ok(FunctionDef {
            name,
            params,
            ret,
            body,
            attrs,
            pos,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while self.peek() != &Tok::RBrace {
            if self.peek() == &Tok::Eof {
                return Err(self.unexpected(&["`}`"]));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn fresh_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt);
        self.next_stmt += 1;
        id
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    /// Right-hand side of an assignment: either a call or a plain expression.
    fn assignment(&mut self, local: String, declare: bool) -> PResult<StmtKind> {
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::LParen {
            let callee = self.ident()?;
            let args = self.call_args()?;
            Ok(StmtKind::Call {
                dest: Some(CallDest { local, declare }),
                callee,
                args,
            })
        } else {
            Ok(StmtKind::Assign {
                local,
                declare,
                value: self.expr()?,
            })
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let id = self.fresh_id();
        let kind = match self.peek().clone() {
            Tok::Let => {
                self.bump();
                let local = self.ident()?;
                self.expect(Tok::Assign)?;
                let k = self.assignment(local, true)?;
                self.expect(Tok::Semi)?;
                k
            }
            Tok::If => return self.if_stmt(id, pos),
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Bound)?;
                let bpos = self.pos();
                let bound = match self.bump() {
                    Tok::Int(n) if n > 0 && n <= u32::MAX as i64 => n as u32,
                    _ => {
                        return Err(Diagnostic::syntax(
                            bpos,
                            "loop bound must be a positive integer literal",
                        ))
                    }
                };
                let body = self.block()?;
                StmtKind::While { cond, bound, body }
            }
            Tok::Cost => {
                self.bump();
                let mpos = self.pos();
                let mname = self.ident()?;
                let metric = Metric::from_name(&mname).ok_or_else(|| {
                    let mut d = Diagnostic::syntax(mpos, format!("unknown cost metric `{mname}`"));
                    d.expected = Metric::ALL.iter().map(|m| format!("`{m}`")).collect();
                    d
                })?;
                let amount = match self.bump() {
                    Tok::Int(n) if n >= 0 => n as u64,
                    _ => {
                        return Err(Diagnostic::syntax(
                            mpos,
                            "cost amount must be a non-negative integer literal",
                        ))
                    }
                };
                self.expect(Tok::Semi)?;
                StmtKind::Cost { metric, amount }
            }
            Tok::Return => {
                self.bump();
                let value = if self.peek() == &Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi)?;
                StmtKind::Return(value)
            }
            Tok::Ident(name) => {
                self.bump();
                let k = match self.peek() {
                    Tok::Assign => {
                        self.bump();
                        self.assignment(name, false)?
                    }
                    Tok::LParen => {
                        let args = self.call_args()?;
                        StmtKind::Call {
                            dest: None,
                            callee: name,
                            args,
                        }
                    }
                    _ => return Err(self.unexpected(&["`=`", "`(`"])),
                };
                self.expect(Tok::Semi)?;
                k
            }
            _ => {
                return Err(self.unexpected(&[
                    "`let`", "`if`", "`while`", "`cost`", "`return`", "identifier",
                ]))
            }
        };
        Ok(Stmt { id, pos, kind })
    }

    fn if_stmt(&mut self, id: StmtId, pos: Pos) -> PResult<Stmt> {
        self.expect(Tok::If)?;
        let cond = self.expr()?;
        let then_block = self.block()?;
        let else_block = if self.eat(&Tok::Else) {
            if self.peek() == &Tok::If {
                let ipos = self.pos();
                let iid = self.fresh_id();
                vec![self.if_stmt(iid, ipos)?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            id,
            pos,
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            if op.is_comparison() {
                if let Some(next) = self.binop() {
                    if next.is_comparison() {
                        return Err(Diagnostic::syntax(
                            self.pos(),
                            "comparison operators are non-associative; add parentheses",
                        ));
                    }
                }
            }
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            Tok::Minus => {
                self.bump();
                if let Tok::Int(n) = self.peek().clone() {
                    self.bump();
                    return Ok(Expr::Int(-n));
                }
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    return Err(Diagnostic::syntax(
                        pos,
                        "calls may only appear as statements or assignment right-hand sides",
                    ));
                }
                Ok(Expr::Name(s, pos))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}
