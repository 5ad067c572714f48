//! Synthetic code layout so that call and return addresses behave like a real binary's.

use std::collections::BTreeMap;

use crate::lang::{walk_stmts, Program, StmtId};

/// Address of the first function.
pub const LOAD_BASE: u64 = 0x1000;
/// Bytes per statement slot.
pub const SLOT: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRange {
    pub name: String,
    pub start: u64,
    /// One past the last address.
    pub end: u64,
}

/// Functions laid out back to back in declaration order. A function with `n` statements
/// takes `n + 2` slots: the entry slot, one per statement, and a trailing slot so that the
/// address after the last statement still belongs to the function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressMap {
    pub load_base: u64,
    pub functions: Vec<FunctionRange>,
    stmt_addr: BTreeMap<StmtId, u64>,
}

impl AddressMap {
    pub fn new(p: &Program) -> Self {
        let mut functions = Vec::new();
        let mut stmt_addr = BTreeMap::new();
        let mut at = LOAD_BASE;
        for f in &p.functions {
            let mut k = 0u64;
            walk_stmts(&f.body, &mut |s| {
                k += 1;
                stmt_addr.insert(s.id, at + SLOT * k);
            });
            let end = at + SLOT * (k + 2);
            functions.push(FunctionRange {
                name: f.name.clone(),
                start: at,
                end,
            });
            at = end;
        }
        AddressMap {
            load_base: LOAD_BASE,
            functions,
            stmt_addr,
        }
    }

    pub fn entry(&self, func: &str) -> Option<u64> {
        self.functions.iter().find(|r| r.name == func).map(|r| r.start)
    }

    pub fn stmt(&self, id: StmtId) -> Option<u64> {
        self.stmt_addr.get(&id).copied()
    }

    /// Address of the instruction following a call statement.
    pub fn return_address(&self, callsite: StmtId) -> Option<u64> {
        self.stmt(callsite).map(|a| a + SLOT)
    }

    /// Function whose range contains `addr`.
    pub fn function_at(&self, addr: u64) -> Option<&str> {
        self.functions
            .iter()
            .find(|r| r.start <= addr && addr < r.end)
            .map(|r| r.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, StmtKind};

    #[test]
    fn layout_is_disjoint_and_return_addresses_stay_inside_caller() {
        let p = parse("fn main() { cost latency 1; f(); cost latency 2; } fn f() { }").unwrap();
        let m = AddressMap::new(&p);
        assert_eq!(m.entry("main"), Some(0x1000));
        assert_eq!(m.functions[0].end, 0x1000 + 4 * 5);
        assert_eq!(m.entry("f"), Some(0x1014));
        let call = p.entry().body.iter().find(|s| matches!(s.kind, StmtKind::Call { .. })).unwrap();
        let ra = m.return_address(call.id).unwrap();
        assert_eq!(ra, 0x100c);
        assert_eq!(m.function_at(ra), Some("main"));
        assert!(ra > m.entry("main").unwrap());
    }
}
