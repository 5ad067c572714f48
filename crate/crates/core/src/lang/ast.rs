//! ConfScript abstract syntax tree.

use std::fmt;

/// Source position (1-based). Positions never take part in structural equality,
/// so a re-parsed program compares equal to the original.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Program-wide statement identifier, assigned in source pre-order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// A concrete value. Enum members are stored by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Enum(m) => f.write_str(m),
        }
    }
}

/// Finite value domain of a parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum(Vec<String>),
}

/// Largest permitted integer domain.
pub const MAX_INT_DOMAIN: u64 = 4096;

impl Domain {
    pub fn size(&self) -> u64 {
        match self {
            Domain::Bool => 2,
            Domain::Int { lo, hi } => {
                if hi < lo {
                    0
                } else {
                    (*hi as i128 - *lo as i128 + 1) as u64
                }
            }
            Domain::Enum(members) => members.len() as u64,
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Int { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (Domain::Enum(ms), Value::Enum(m)) => ms.iter().any(|x| x == m),
            _ => false,
        }
    }

    /// Values in domain order: false < true, numeric order, enum declaration order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Domain::Enum(ms) => ms.iter().cloned().map(Value::Enum).collect(),
        }
    }

    pub fn smallest(&self) -> Value {
        match self {
            Domain::Bool => Value::Bool(false),
            Domain::Int { lo, .. } => Value::Int(*lo),
            Domain::Enum(ms) => Value::Enum(ms[0].clone()),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Bool => f.write_str("bool"),
            Domain::Int { lo, hi } => write!(f, "int in [{lo}, {hi}]"),
            Domain::Enum(ms) => write!(f, "enum {{ {} }}", ms.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigParam {
    pub name: String,
    pub domain: Domain,
    pub default: Value,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputParam {
    pub name: String,
    pub domain: Domain,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FnAttrs {
    pub is_extern: bool,
    pub pure: bool,
    pub benign: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Option<Domain>,
    pub body: Vec<Stmt>,
    pub attrs: FnAttrs,
    pub pos: Pos,
}

/// The six logical metrics plus latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Latency,
    Instructions,
    Syscalls,
    FileIoOps,
    IoBytes,
    SyncOps,
    NetOps,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Latency,
        Metric::Instructions,
        Metric::Syscalls,
        Metric::FileIoOps,
        Metric::IoBytes,
        Metric::SyncOps,
        Metric::NetOps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::Instructions => "instructions",
            Metric::Syscalls => "syscalls",
            Metric::FileIoOps => "file_io_ops",
            Metric::IoBytes => "io_bytes",
            Metric::SyncOps => "sync_ops",
            Metric::NetOps => "net_ops",
        }
    }

    pub fn from_name(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    /// `a op b` == `b op.flipped() a`
    pub fn flipped(self) -> BinOp {
        match self {
            BinOp::Lt => BinOp::Gt,
            BinOp::Le => BinOp::Ge,
            BinOp::Gt => BinOp::Lt,
            BinOp::Ge => BinOp::Le,
            other => other,
        }
    }

    /// Logical negation of a comparison.
    pub fn negated(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            BinOp::Lt => BinOp::Ge,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            BinOp::Ge => BinOp::Lt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    /// Variable or enum member; resolved during semantic checking.
    Name(String, Pos),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Every identifier mentioned by the expression, in order of appearance.
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Name(n, _) => out.push(n),
            Expr::Unary(_, e) => e.collect_names(out),
            Expr::Binary(_, a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Expr::Int(_) | Expr::Bool(_) => {}
        }
    }
}

/// Destination of a call's return value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallDest {
    pub local: String,
    pub declare: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    /// `let x = e;` (declare) or `x = e;`
    Assign {
        local: String,
        declare: bool,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Vec<Stmt>,
    },
    While {
        cond: Expr,
        bound: u32,
        body: Vec<Stmt>,
    },
    Call {
        dest: Option<CallDest>,
        callee: String,
        args: Vec<Expr>,
    },
    Cost {
        metric: Metric,
        amount: u64,
    },
    Return(Option<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub pos: Pos,
    pub kind: StmtKind,
}

impl Stmt {
    /// Expressions evaluated directly by this statement (not by nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return(Some(e)) => vec![e],
            StmtKind::Return(None) | StmtKind::Cost { .. } => vec![],
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }
}

/// Builtins that toggle the tracer window.
pub const BUILTIN_TRACE_ON: &str = "trace_on";
pub const BUILTIN_TRACE_OFF: &str = "trace_off";

pub fn is_builtin(name: &str) -> bool {
    name == BUILTIN_TRACE_ON || name == BUILTIN_TRACE_OFF
}

/// Name of the entry function.
pub const ENTRY: &str = "main";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub configs: Vec<ConfigParam>,
    pub inputs: Vec<InputParam>,
    pub functions: Vec<FunctionDef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Config,
    Input,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn entry(&self) -> &FunctionDef {
        self.function(ENTRY).expect("checked program has an entry function")
    }

    pub fn config(&self, name: &str) -> Option<&ConfigParam> {
        self.configs.iter().find(|c| c.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&InputParam> {
        self.inputs.iter().find(|c| c.name == name)
    }

    /// Domain and kind of a global (config or input) variable.
    pub fn global(&self, name: &str) -> Option<(VarKind, &Domain)> {
        if let Some(c) = self.config(name) {
            return Some((VarKind::Config, &c.domain));
        }
        self.input(name).map(|i| (VarKind::Input, &i.domain))
    }

    pub fn is_enum_member(&self, name: &str) -> bool {
        self.configs
            .iter()
            .map(|c| &c.domain)
            .chain(self.inputs.iter().map(|i| &i.domain))
            .chain(self.functions.iter().flat_map(|f| {
                f.params.iter().map(|p| &p.domain).chain(f.ret.iter())
            }))
            .any(|d| matches!(d, Domain::Enum(ms) if ms.iter().any(|m| m == name)))
    }

    /// Locate a statement anywhere in the program.
    pub fn stmt(&self, id: StmtId) -> Option<(&FunctionDef, &Stmt)> {
        for f in &self.functions {
            if let Some(s) = find_stmt(&f.body, id) {
                return Some((f, s));
            }
        }
        None
    }

    /// Program statement count (all functions, nested blocks included).
    pub fn stmt_count(&self) -> usize {
        self.functions.iter().map(|f| count_stmts(&f.body)).sum()
    }
}

pub fn find_stmt(block: &[Stmt], id: StmtId) -> Option<&Stmt> {
    for s in block {
        if s.id == id {
            return Some(s);
        }
        let found = match &s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => find_stmt(then_block, id).or_else(|| find_stmt(else_block, id)),
            StmtKind::While { body, .. } => find_stmt(body, id),
            _ => None,
        };
        if found.is_some() {
            return found;
        }
    }
    None
}

pub fn count_stmts(block: &[Stmt]) -> usize {
    let mut n = 0;
    walk_stmts(block, &mut |_| n += 1);
    n
}

/// Pre-order walk over a block and all nested blocks.
pub fn walk_stmts<'a>(block: &'a [Stmt], visit: &mut dyn FnMut(&'a Stmt)) {
    for s in block {
        visit(s);
        match &s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                walk_stmts(then_block, visit);
                walk_stmts(else_block, visit);
            }
            StmtKind::While { body, .. } => walk_stmts(body, visit),
            _ => {}
        }
    }
}
