//! Lowering of function bodies to control flow graphs.
//!
//! Node 0 is the synthetic entry, node 1 the synthetic exit. Both are empty.
//! A branch statement (`if`/`while`) is the last statement of its block.

use std::collections::BTreeMap;

use super::ast::{FunctionDef, Program, Stmt, StmtId, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BasicBlock {
    pub stmts: Vec<StmtId>,
    pub succs: Vec<BlockId>,
    pub preds: Vec<BlockId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub func: String,
    pub blocks: Vec<BasicBlock>,
    stmt_block: BTreeMap<StmtId, BlockId>,
}

impl Cfg {
    pub const ENTRY: BlockId = BlockId(0);
    pub const EXIT: BlockId = BlockId(1);

    /// Graph with `n` nodes (entry and exit included) and the given edges; statement-free.
    /// Used for synthetic graphs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Cfg {
        assert!(n >= 2, "a CFG needs entry and exit");
        let mut cfg = Cfg {
            func: String::new(),
            blocks: vec![BasicBlock::default(); n],
            stmt_block: BTreeMap::new(),
        };
        for &(a, b) in edges {
            cfg.edge(BlockId(a), BlockId(b));
        }
        cfg
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn succs(&self, b: BlockId) -> &[BlockId] {
        &self.blocks[b.0].succs
    }

    pub fn preds(&self, b: BlockId) -> &[BlockId] {
        &self.blocks[b.0].preds
    }

    pub fn block_of(&self, s: StmtId) -> Option<BlockId> {
        self.stmt_block.get(&s).copied()
    }

    pub fn contains(&self, b: BlockId) -> bool {
        b.0 < self.blocks.len()
    }

    /// Blocks other than entry and exit.
    pub fn interior(&self) -> impl Iterator<Item = BlockId> + '_ {
        (2..self.blocks.len()).map(BlockId)
    }

    fn new_block(&mut self) -> BlockId {
        self.blocks.push(BasicBlock::default());
        BlockId(self.blocks.len() - 1)
    }

    fn edge(&mut self, a: BlockId, b: BlockId) {
        if !self.blocks[a.0].succs.contains(&b) {
            self.blocks[a.0].succs.push(b);
            self.blocks[b.0].preds.push(a);
        }
    }

    fn place(&mut self, b: BlockId, s: StmtId) {
        self.blocks[b.0].stmts.push(s);
        self.stmt_block.insert(s, b);
    }

    /// Append `stmts` starting in block `cur`; returns the block where control
    /// falls through, or `None` if every path returned.
    fn build(&mut self, stmts: &[Stmt], mut cur: Option<BlockId>) -> Option<BlockId> {
        for s in stmts {
            let here = match cur {
                Some(b) => b,
                None => self.new_block(),
            };
            match &s.kind {
                StmtKind::Assign { .. } | StmtKind::Call { .. } | StmtKind::Cost { .. } => {
                    self.place(here, s.id);
                    cur = Some(here);
                }
                StmtKind::Return(_) => {
                    self.place(here, s.id);
                    self.edge(here, Self::EXIT);
                    cur = None;
                }
                StmtKind::If {
                    then_block,
                    else_block,
                    ..
                } => {
                    self.place(here, s.id);
                    let t = self.new_block();
                    let e = self.new_block();
                    self.edge(here, t);
                    self.edge(here, e);
                    let t_end = self.build(then_block, Some(t));
                    let e_end = self.build(else_block, Some(e));
                    let merge = self.new_block();
                    for end in [t_end, e_end].into_iter().flatten() {
                        self.edge(end, merge);
                    }
                    cur = Some(merge);
                }
                StmtKind::While { body, .. } => {
                    let header = self.new_block();
                    self.edge(here, header);
                    self.place(header, s.id);
                    let body_b = self.new_block();
                    let after = self.new_block();
                    self.edge(header, body_b);
                    self.edge(header, after);
                    if let Some(end) = self.build(body, Some(body_b)) {
                        self.edge(end, header);
                    }
                    cur = Some(after);
                }
            }
        }
        cur
    }
}

pub fn lower_function(f: &FunctionDef) -> Cfg {
    let mut cfg = Cfg {
        func: f.name.clone(),
        blocks: vec![BasicBlock::default(), BasicBlock::default()],
        stmt_block: BTreeMap::new(),
    };
    let first = cfg.new_block();
    cfg.edge(Cfg::ENTRY, first);
    if let Some(end) = cfg.build(&f.body, Some(first)) {
        cfg.edge(end, Cfg::EXIT);
    }
    cfg
}

/// One CFG per non-extern function, keyed by function name.
pub fn lower_to_cfg(p: &Program) -> BTreeMap<String, Cfg> {
    p.functions
        .iter()
        .filter(|f| !f.attrs.is_extern)
        .map(|f| (f.name.clone(), lower_function(f)))
        .collect()
}
