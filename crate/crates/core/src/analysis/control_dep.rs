//! Statement-level control dependency.
//!
//! The classic relation comes from postdominance: Y depends on X when some successor
//! S of X is postdominated by Y while X is not. On top of that, every statement nested
//! in any arm of an `if`/`else if` chain depends on every condition of that chain.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::{lower_function, walk_stmts, BlockId, Cfg, FunctionDef, Stmt, StmtId, StmtKind};

use super::postdom::PostDominators;
use super::AnalysisError;

/// Per-function facts needed to answer control-dependency queries.
#[derive(Debug, Clone)]
pub struct FunctionFacts {
    pub cfg: Cfg,
    pub pdom: PostDominators,
    branches: BTreeSet<StmtId>,
    /// `if` statement -> head `if` of its else-if chain
    chain_head: BTreeMap<StmtId, StmtId>,
    /// chain head -> statements nested in any arm of any `if` of the chain
    chain_body: BTreeMap<StmtId, BTreeSet<StmtId>>,
}

impl FunctionFacts {
    pub fn new(f: &FunctionDef) -> Self {
        let cfg = lower_function(f);
        let pdom = PostDominators::compute(&cfg);
        let mut facts = FunctionFacts {
            cfg,
            pdom,
            branches: BTreeSet::new(),
            chain_head: BTreeMap::new(),
            chain_body: BTreeMap::new(),
        };
        walk_stmts(&f.body, &mut |s| {
            if s.is_branch() {
                facts.branches.insert(s.id);
            }
        });
        facts.collect_chains(&f.body, None);
        facts
    }

    fn collect_chains(&mut self, block: &[Stmt], else_of: Option<StmtId>) {
        let sole = block.len() == 1;
        for s in block {
            match &s.kind {
                StmtKind::If {
                    then_block,
                    else_block,
                    ..
                } => {
                    let head = match else_of {
                        Some(parent) if sole => self.chain_head[&parent],
                        _ => s.id,
                    };
                    self.chain_head.insert(s.id, head);
                    let body = self.chain_body.entry(head).or_default();
                    for arm in [then_block, else_block] {
                        walk_stmts(arm, &mut |n| {
                            body.insert(n.id);
                        });
                    }
                    self.collect_chains(then_block, None);
                    self.collect_chains(else_block, Some(s.id));
                }
                StmtKind::While { body, .. } => self.collect_chains(body, None),
                _ => {}
            }
        }
    }

    fn block(&self, s: StmtId) -> Result<BlockId, AnalysisError> {
        self.cfg
            .block_of(s)
            .ok_or(AnalysisError::UnknownStatement(s))
    }

    /// Classic postdominator-based control dependency of `y` on branch `x`.
    pub fn classic(&self, y: StmtId, x: StmtId) -> Result<bool, AnalysisError> {
        let by = self.block(y)?;
        let bx = self.block(x)?;
        if !self.branches.contains(&x) {
            return Ok(false);
        }
        Ok(classic_blocks(&self.cfg, &self.pdom, by, bx))
    }

    /// Broadened control dependency: classic, or `y` nested in the else-if chain of `x`.
    pub fn control_dependent(&self, y: StmtId, x: StmtId) -> Result<bool, AnalysisError> {
        if self.classic(y, x)? {
            return Ok(true);
        }
        Ok(self
            .chain_head
            .get(&x)
            .and_then(|h| self.chain_body.get(h))
            .is_some_and(|body| body.contains(&y)))
    }
}

/// Block-level classic control dependency of `y` on `x`.
pub fn classic_blocks(cfg: &Cfg, pdom: &PostDominators, y: BlockId, x: BlockId) -> bool {
    if pdom.postdominates(y, x) {
        return false;
    }
    cfg.succs(x).iter().any(|&s| pdom.postdominates(y, s))
}
