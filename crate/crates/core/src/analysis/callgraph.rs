use std::collections::BTreeSet;

use crate::lang::{is_builtin, walk_stmts, Program, StmtId, StmtKind};

/// Maximum call-chain length considered when enumerating chains.
pub const MAX_CHAIN_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub site: StmtId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<CallEdge>,
}

impl CallGraph {
    pub fn build(p: &Program) -> Self {
        let nodes = p.functions.iter().map(|f| f.name.clone()).collect();
        let mut edges = Vec::new();
        for f in &p.functions {
            walk_stmts(&f.body, &mut |s| {
                if let StmtKind::Call { callee, .. } = &s.kind {
                    if !is_builtin(callee) {
                        edges.push(CallEdge {
                            caller: f.name.clone(),
                            callee: callee.clone(),
                            site: s.id,
                        });
                    }
                }
            });
        }
        CallGraph { nodes, edges }
    }

    pub fn callees<'a>(&'a self, f: &'a str) -> impl Iterator<Item = &'a CallEdge> + 'a {
        self.edges.iter().filter(move |e| e.caller == f)
    }

    pub fn callers<'a>(&'a self, f: &'a str) -> impl Iterator<Item = &'a CallEdge> + 'a {
        self.edges.iter().filter(move |e| e.callee == f)
    }

    /// All call chains from `from` to `to`, each as the list of edges taken.
    /// A function appears at most once per chain, so every cycle is entered at most
    /// once, and chains longer than [`MAX_CHAIN_DEPTH`] edges are dropped.
    /// `from == to` yields no chains.
    pub fn chains(&self, from: &str, to: &str) -> Vec<Vec<CallEdge>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        let mut on_path = BTreeSet::new();
        on_path.insert(from.to_string());
        self.dfs(from, to, &mut path, &mut on_path, &mut out);
        out
    }

    fn dfs(
        &self,
        at: &str,
        to: &str,
        path: &mut Vec<CallEdge>,
        on_path: &mut BTreeSet<String>,
        out: &mut Vec<Vec<CallEdge>>,
    ) {
        if path.len() >= MAX_CHAIN_DEPTH {
            return;
        }
        for e in self.callees(at) {
            if e.callee == to {
                let mut chain = path.clone();
                chain.push(e.clone());
                out.push(chain);
                continue;
            }
            if on_path.contains(&e.callee) {
                continue;
            }
            on_path.insert(e.callee.clone());
            path.push(e.clone());
            self.dfs(&e.callee, to, path, on_path, out);
            path.pop();
            on_path.remove(&e.callee);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn chains_through_two_callers() {
        let p = parse(
            "fn main() { a(); b(); } fn a() { c(); } fn b() { c(); a(); } fn c() { }",
        )
        .unwrap();
        let g = CallGraph::build(&p);
        assert_eq!(g.edges.len(), 5);
        let chains = g.chains("main", "c");
        let names: Vec<Vec<&str>> = chains
            .iter()
            .map(|ch| ch.iter().map(|e| e.callee.as_str()).collect())
            .collect();
        assert_eq!(names, vec![vec!["a", "c"], vec!["b", "c"], vec!["b", "a", "c"]]);
    }

    #[test]
    fn recursion_terminates() {
        let p = parse("fn main() { f(); } fn f() { f(); g(); } fn g() { }").unwrap();
        let g = CallGraph::build(&p);
        assert_eq!(g.chains("main", "g").len(), 1);
        assert_eq!(g.chains("main", "f").len(), 1);
    }

    #[test]
    fn builtins_are_not_edges() {
        let p = parse("fn main() { trace_on(); trace_off(); }").unwrap();
        assert!(CallGraph::build(&p).edges.is_empty());
    }
}
