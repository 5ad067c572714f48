//! Line-oriented trace files.
//!
//! ```text
//! # violet-trace v1
//! # state 0 terminated
//! # end 2600
//! # constraint autocommit==true
//! # fn 0x1000 main
//! C 1 0x1000 0x0 0 0
//! K instructions 1 0
//! R 0x100c 600 0
//! ```
//!
//! `C cid eip ra ts tid`, `R ra ts tid` and `K metric amount ts`. Addresses are hex,
//! everything else decimal. Header lines start with `#`; unknown headers are ignored.

use std::fmt::Write;

use crate::lang::Metric;

use super::records::{CallRecord, CostRecord, ReturnRecord, TraceEvent};
use super::state::{finalize_trace, StateStatus, StateTrace};

pub const TRACE_MAGIC: &str = "# violet-trace v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceFile {
    pub state: usize,
    pub status: Option<StateStatus>,
    pub end: u64,
    pub constraint: Vec<String>,
    /// Entry address and name of every function.
    pub functions: Vec<(u64, String)>,
    pub events: Vec<TraceEvent>,
}

impl TraceFile {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(TRACE_MAGIC);
        s.push('\n');
        let status = self.status.unwrap_or(StateStatus::Terminated).name();
        let _ = writeln!(s, "# state {} {}", self.state, status);
        let _ = writeln!(s, "# end {}", self.end);
        for a in &self.constraint {
            let _ = writeln!(s, "# constraint {a}");
        }
        for (addr, name) in &self.functions {
            let _ = writeln!(s, "# fn {addr:#x} {name}");
        }
        for e in &self.events {
            match e {
                TraceEvent::Call(c) => {
                    let _ = writeln!(
                        s,
                        "C {} {:#x} {:#x} {} {}",
                        c.cid, c.eip, c.return_address, c.timestamp, c.thread_id
                    );
                }
                TraceEvent::Return(r) => {
                    let _ = writeln!(s, "R {:#x} {} {}", r.return_address, r.timestamp, r.thread_id);
                }
                TraceEvent::Cost(k) => {
                    let _ = writeln!(s, "K {} {} {}", k.metric.name(), k.amount, k.timestamp);
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<TraceFile, TraceParseError> {
        let mut out = TraceFile::default();
        let mut lines = text.lines().enumerate().peekable();
        match lines.peek() {
            Some((_, l)) if l.trim_end() == TRACE_MAGIC => {
                lines.next();
            }
            Some(_) => {
                return Err(TraceParseError {
                    line: 1,
                    message: format!("expected `{TRACE_MAGIC}`"),
                })
            }
            None => return Ok(out),
        }
        for (i, raw) in lines {
            let line = raw.trim();
            let err = |message: String| TraceParseError { line: i + 1, message };
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim_start();
                let (key, rest) = h.split_once(' ').unwrap_or((h, ""));
                match key {
                    "state" => {
                        let mut it = rest.split_whitespace();
                        out.state = num(it.next(), &err)? as usize;
                        if let Some(st) = it.next() {
                            out.status = Some(
                                StateStatus::from_name(st)
                                    .ok_or_else(|| err(format!("unknown status `{st}`")))?,
                            );
                        }
                    }
                    "end" => out.end = num(Some(rest.trim()), &err)?,
                    "constraint" => out.constraint.push(rest.trim().to_string()),
                    "fn" => {
                        let (addr, name) = rest
                            .trim()
                            .split_once(' ')
                            .ok_or_else(|| err("expected `# fn ADDR NAME`".into()))?;
                        out.functions.push((hex(Some(addr), &err)?, name.trim().to_string()));
                    }
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let ev = match f.as_slice() {
                ["C", cid, eip, ra, ts, tid] => TraceEvent::Call(CallRecord {
                    cid: num(Some(cid), &err)?,
                    eip: hex(Some(eip), &err)?,
                    return_address: hex(Some(ra), &err)?,
                    timestamp: num(Some(ts), &err)?,
                    thread_id: num(Some(tid), &err)? as u32,
                    parent_id: None,
                }),
                ["R", ra, ts, tid] => TraceEvent::Return(ReturnRecord {
                    return_address: hex(Some(ra), &err)?,
                    timestamp: num(Some(ts), &err)?,
                    thread_id: num(Some(tid), &err)? as u32,
                }),
                ["K", metric, amount, ts] => TraceEvent::Cost(CostRecord {
                    metric: Metric::from_name(metric)
                        .ok_or_else(|| err(format!("unknown metric `{metric}`")))?,
                    amount: num(Some(amount), &err)?,
                    timestamp: num(Some(ts), &err)?,
                }),
                _ => return Err(err(format!("unrecognized record `{line}`"))),
            };
            out.events.push(ev);
        }
        Ok(out)
    }

    pub fn function_name(&self, eip: u64) -> String {
        self.functions
            .iter()
            .find(|(a, _)| *a == eip)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| format!("{eip:#x}"))
    }

    pub fn to_state_trace(&self) -> StateTrace {
        finalize_trace(
            self.state,
            self.status.unwrap_or(StateStatus::Terminated),
            self.constraint.clone(),
            &self.events,
            self.end,
            &|eip| self.function_name(eip),
        )
    }
}

fn num(s: Option<&str>, err: &dyn Fn(String) -> TraceParseError) -> Result<u64, TraceParseError> {
    let s = s.ok_or_else(|| err("missing field".into()))?;
    s.parse().map_err(|_| err(format!("expected a number, found `{s}`")))
}

fn hex(s: Option<&str>, err: &dyn Fn(String) -> TraceParseError) -> Result<u64, TraceParseError> {
    let s = s.ok_or_else(|| err("missing field".into()))?;
    let digits = s
        .strip_prefix("0x")
        .ok_or_else(|| err(format!("expected a hex address, found `{s}`")))?;
    u64::from_str_radix(digits, 16).map_err(|_| err(format!("bad hex address `{s}`")))
}

/// Indented call tree with per-call latencies, one call per line.
pub fn render_call_tree(t: &StateTrace) -> String {
    let mut s = String::new();
    for c in &t.calls {
        let _ = writeln!(
            s,
            "{}{} latency={} self={}{}",
            "  ".repeat(c.depth),
            c.func,
            c.latency,
            c.self_latency,
            if c.returned { "" } else { " (no return)" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# violet-trace v1\n# state 2 budget-exceeded\n# end 9\n# constraint a==true\n# fn 0x1000 main\n# fn 0x1010 f\nC 1 0x1000 0x0 0 0\nC 2 0x1010 0x1008 0 0\nK latency 9 9\nR 0x1008 9 0\n";
        let t = TraceFile::parse(text).unwrap();
        assert_eq!(t.render(), text);
        let st = t.to_state_trace();
        assert_eq!(st.calls.len(), 2);
        assert_eq!(st.calls[1].func, "f");
        assert_eq!(st.root_latency(), 9);
        assert_eq!(render_call_tree(&st), "main latency=9 self=0 (no return)\n  f latency=9 self=9\n");
    }

    #[test]
    fn empty_and_bad_input() {
        assert!(TraceFile::parse("").unwrap().events.is_empty());
        assert!(TraceFile::parse("nope").is_err());
        assert!(TraceFile::parse("# violet-trace v1\nX 1").is_err());
    }
}
