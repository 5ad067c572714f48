//! Postdominator sets over a [`Cfg`], by iterative dataflow on the reverse graph.

use crate::lang::{BlockId, Cfg};

use super::AnalysisError;

#[derive(Debug, Clone)]
pub struct PostDominators {
    /// `sets[a][b]` is true iff `b` postdominates `a`.
    sets: Vec<Vec<bool>>,
}

impl PostDominators {
    pub fn compute(cfg: &Cfg) -> Self {
        let n = cfg.len();
        let mut sets = vec![vec![true; n]; n];
        let exit = Cfg::EXIT.0;
        sets[exit] = (0..n).map(|i| i == exit).collect();

        let mut changed = true;
        while changed {
            changed = false;
            for a in (0..n).filter(|&a| a != exit) {
                let succs = cfg.succs(BlockId(a));
                // Nodes that cannot reach the exit keep the full set (vacuously true).
                if succs.is_empty() {
                    continue;
                }
                let mut next = vec![true; n];
                for s in succs {
                    for (slot, &v) in next.iter_mut().zip(&sets[s.0]) {
                        *slot &= v;
                    }
                }
                next[a] = true;
                if next != sets[a] {
                    sets[a] = next;
                    changed = true;
                }
            }
        }
        PostDominators { sets }
    }

    /// Does `b` postdominate `a`?
    pub fn postdominates(&self, b: BlockId, a: BlockId) -> bool {
        self.sets[a.0][b.0]
    }

    /// Immediate postdominator of `a`: the closest strict postdominator.
    pub fn immediate(&self, a: BlockId) -> Option<BlockId> {
        let strict: Vec<usize> = (0..self.sets.len())
            .filter(|&b| b != a.0 && self.sets[a.0][b])
            .collect();
        strict
            .iter()
            .copied()
            .find(|&d| strict.iter().all(|&o| o == d || self.sets[d][o]))
            .map(BlockId)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Checked single query: does `b` postdominate `a` in `cfg`?
pub fn postdominates(cfg: &Cfg, b: BlockId, a: BlockId) -> Result<bool, AnalysisError> {
    for x in [a, b] {
        if !cfg.contains(x) {
            return Err(AnalysisError::UnknownNode(x.0));
        }
    }
    Ok(PostDominators::compute(cfg).postdominates(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Cfg {
        // entry -> head -> {then, else} -> merge -> exit
        Cfg::from_edges(6, &[(0, 2), (2, 3), (2, 4), (3, 5), (4, 5), (5, 1)])
    }

    #[test]
    fn exit_postdominates_everything() {
        let cfg = diamond();
        for a in 0..cfg.len() {
            assert!(postdominates(&cfg, Cfg::EXIT, BlockId(a)).unwrap());
        }
    }

    #[test]
    fn diamond_merge_but_not_arm() {
        let cfg = diamond();
        assert!(postdominates(&cfg, BlockId(5), BlockId(2)).unwrap());
        assert!(!postdominates(&cfg, BlockId(3), BlockId(2)).unwrap());
        let pd = PostDominators::compute(&cfg);
        assert_eq!(pd.immediate(BlockId(2)), Some(BlockId(5)));
        assert_eq!(pd.immediate(BlockId(5)), Some(Cfg::EXIT));
        assert_eq!(pd.immediate(Cfg::EXIT), None);
    }

    #[test]
    fn unknown_node() {
        assert_eq!(
            postdominates(&diamond(), BlockId(9), BlockId(0)),
            Err(AnalysisError::UnknownNode(9))
        );
    }
}
