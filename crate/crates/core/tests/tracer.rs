mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::corpus_files;
use common::corpus_program;
use common::oracle::explore_all;
use proptest::prelude::*;
use violet_core::lang::{parse, walk_stmts};
use violet_core::symexec::{explore, Budget};
use violet_core::trace::{
    match_call_returns, reconstruct_call_chain, AddressMap, CallRecord, ReturnRecord, StateStatus,
    TraceFile, LOAD_BASE,
};

fn run_concrete(src: &str) -> violet_core::trace::StateTrace {
    let p = parse(src).unwrap();
    let ex = explore(&p, &BTreeMap::new(), &BTreeSet::new(), Budget::default()).unwrap();
    ex.traces().remove(0)
}

#[test]
fn no_op_program_counts_statements() {
    let t = run_concrete("fn main() { trace_on(); let a = 1; let b = a + 1; a = b; trace_off(); }");
    assert_eq!(t.cost.latency, 0);
    assert_eq!(t.cost.instructions, 5);
    assert_eq!(t.root().unwrap().func, "main");
}

#[test]
fn untraced_program_is_empty() {
    let t = run_concrete("fn main() { cost latency 40; f(); } fn f() { cost syscalls 3; }");
    assert!(t.cost.is_zero());
    assert!(t.calls.is_empty());
    assert_eq!(t.root_latency(), 0);
}

#[test]
fn costs_sum_over_windows() {
    let t = run_concrete(
        "fn main() { cost latency 1; trace_on(); cost latency 2; trace_off(); cost latency 4;
                     trace_on(); cost latency 8; cost file_io_ops 3; trace_off(); cost latency 16; }",
    );
    assert_eq!(t.cost.latency, 10);
    assert_eq!(t.cost.file_io_ops, 3);
}

#[test]
fn syscall_cost_also_counts_one_instruction() {
    let t = run_concrete("fn main() { trace_on(); cost syscalls 5; }");
    assert_eq!(t.cost.syscalls, 5);
    assert_eq!(t.cost.instructions, 2);
}

#[test]
fn mimic_slow_state_latency() {
    let p = corpus_program("autocommit.cfs");
    let ex = explore_all(&p);
    let traces = ex.traces();
    let slow = &traces[0];
    assert_eq!(slow.cost.latency, 2600);
    assert_eq!(slow.root_latency(), 2600);
    assert_eq!(slow.root().unwrap().func, "main");
    let leaf = slow.calls.iter().find(|c| c.func == "fil_flush").unwrap();
    assert_eq!(
        slow.chain_to(leaf.cid),
        ["main", "write_row", "trx_commit_complete", "log_write_buf", "fil_flush"]
    );
}

#[test]
fn call_tree_folds_on_corpus() {
    for name in corpus_files() {
        let p = corpus_program(&name);
        let ex = explore_all(&p);
        for t in ex.traces() {
            assert_ne!(t.status, StateStatus::Running);
            if t.calls.is_empty() {
                assert_eq!(t.cost.latency, 0, "{name}");
                continue;
            }
            // root latency equals the state's total latency
            assert_eq!(t.root_latency(), t.cost.latency, "{name} state {}", t.state);
            for c in &t.calls {
                let kids: u64 = t.children(c.cid).map(|k| k.latency).sum();
                assert!(kids <= c.latency, "{name} state {} cid {}", t.state, c.cid);
                assert_eq!(c.self_latency, c.latency - kids);
                for k in t.children(c.cid) {
                    assert!(k.latency <= c.latency);
                    assert_eq!(k.depth, c.depth + 1);
                }
            }
        }
    }
}

#[test]
fn trace_files_round_trip_on_corpus() {
    for name in corpus_files() {
        let p = corpus_program(&name);
        let map = AddressMap::new(&p);
        let ex = explore_all(&p);
        assert_eq!(map, ex.addresses);
        for (file, t) in ex.trace_files().into_iter().zip(ex.traces()) {
            let text = file.render();
            let back = TraceFile::parse(&text).unwrap();
            assert_eq!(back, file, "{name}");
            assert_eq!(back.render(), text);
            assert_eq!(back.to_state_trace(), t, "{name} state {}", t.state);
        }
    }
}

#[test]
fn address_map_layout() {
    for name in corpus_files() {
        let p = corpus_program(&name);
        let map = AddressMap::new(&p);
        let mut ranges: Vec<(u64, u64)> = map.functions.iter().map(|r| (r.start, r.end)).collect();
        ranges.sort();
        assert!(ranges[0].0 >= LOAD_BASE);
        for w in ranges.windows(2) {
            assert!(w[0].1 <= w[1].0, "{name}: overlapping ranges");
        }
        for f in &p.functions {
            let entry = map.entry(&f.name).unwrap();
            let mut seen = BTreeSet::new();
            walk_stmts(&f.body, &mut |s| {
                let a = map.stmt(s.id).unwrap();
                assert!(seen.insert(a), "{name}: duplicate statement address");
                assert_eq!(map.function_at(a), Some(f.name.as_str()));
                if let violet_core::lang::StmtKind::Call { .. } = s.kind {
                    let ra = map.return_address(s.id).unwrap();
                    assert!(ra > entry);
                    assert_eq!(map.function_at(ra), Some(f.name.as_str()));
                }
            });
        }
    }
}

#[test]
fn trace_dump_of_empty_file() {
    let t = TraceFile::parse("").unwrap().to_state_trace();
    assert!(t.calls.is_empty());
    assert_eq!(violet_core::trace::render_call_tree(&t), "");
}

fn call(cid: u64, ra: u64, ts: u64, tid: u32) -> CallRecord {
    CallRecord {
        cid,
        eip: 0x1000 + 0x40 * (cid % 4),
        return_address: ra,
        timestamp: ts,
        thread_id: tid,
        parent_id: None,
    }
}

fn records() -> impl Strategy<Value = (Vec<CallRecord>, Vec<ReturnRecord>)> {
    let calls = proptest::collection::vec((0u64..4, 0u64..50, 0u32..3), 0..24);
    let rets = proptest::collection::vec((0u64..4, 0u64..50, 0u32..3), 0..24);
    (calls, rets).prop_map(|(cs, rs)| {
        let mut cs: Vec<(u64, u64, u32)> = cs;
        cs.sort_by_key(|c| c.1);
        let calls = cs
            .iter()
            .enumerate()
            .map(|(i, &(ra, ts, tid))| call(i as u64 + 1, 0x2000 + ra * 4, ts, tid))
            .collect();
        let rets = rs
            .iter()
            .map(|&(ra, ts, tid)| ReturnRecord {
                return_address: 0x2000 + ra * 4,
                timestamp: ts,
                thread_id: tid,
            })
            .collect();
        (calls, rets)
    })
}

proptest! {
    #[test]
    fn matching_is_a_bijection((calls, rets) in records()) {
        let m = match_call_returns(&calls, &rets, 100);
        prop_assert_eq!(m.len(), calls.len());
        let mut used: BTreeMap<ReturnRecord, usize> = BTreeMap::new();
        for c in &m {
            if let Some(r) = c.ret {
                prop_assert_eq!(r.thread_id, c.call.thread_id);
                prop_assert_eq!(r.return_address, c.call.return_address);
                prop_assert!(r.timestamp >= c.call.timestamp);
                prop_assert_eq!(c.latency, r.timestamp - c.call.timestamp);
                *used.entry(r).or_default() += 1;
            } else {
                prop_assert_eq!(c.latency, 100 - c.call.timestamp);
            }
        }
        for (r, n) in used {
            let avail = rets.iter().filter(|x| **x == r).count();
            prop_assert!(n <= avail);
        }
    }

    #[test]
    fn matching_partitions_by_thread((calls, rets) in records()) {
        let all = match_call_returns(&calls, &rets, 100);
        for tid in 0..3u32 {
            let cs: Vec<CallRecord> = calls.iter().copied().filter(|c| c.thread_id == tid).collect();
            let rs: Vec<ReturnRecord> = rets.iter().copied().filter(|r| r.thread_id == tid).collect();
            let alone = match_call_returns(&cs, &rs, 100);
            let mixed: Vec<_> = all.iter().copied().filter(|m| m.call.thread_id == tid).collect();
            prop_assert_eq!(alone, mixed);
        }
    }

    #[test]
    fn reconstruction_respects_address_rule((calls, rets) in records()) {
        let mut m = match_call_returns(&calls, &rets, 100);
        reconstruct_call_chain(&mut m);
        for a in &m {
            if let Some(p) = a.call.parent_id {
                let b = m.iter().find(|x| x.call.cid == p).unwrap();
                prop_assert!(b.call.cid < a.call.cid);
                prop_assert!(b.call.eip < a.call.return_address);
                prop_assert_eq!(b.call.thread_id, a.call.thread_id);
            }
        }
    }
}
