//! Per-state record buffer and cost accounting.

use std::collections::BTreeMap;

use crate::lang::Metric;

use super::records::{CallRecord, CostRecord, CostVector, ReturnRecord, TraceEvent};

/// Thread id every engine record carries.
pub const MAIN_THREAD: u32 = 0;

/// The tracer's view of one activation frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameMark {
    pub eip: u64,
    pub return_address: u64,
    /// Call record emitted for this frame, if tracing was on at some point while it was live.
    pub cid: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tracer {
    enabled: bool,
    clock: u64,
    next_cid: u64,
    events: Vec<TraceEvent>,
    cost: CostVector,
    /// Parent cid of each call record, taken from the live frame stack.
    true_parent: BTreeMap<u64, Option<u64>>,
}

impl Tracer {
    pub fn new() -> Self {
        Tracer {
            next_cid: 1,
            ..Default::default()
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn cost(&self) -> &CostVector {
        &self.cost
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn true_parents(&self) -> &BTreeMap<u64, Option<u64>> {
        &self.true_parent
    }

    /// Start tracing. Live frames without a call record get one, outermost first,
    /// so the eventual call tree is rooted at the entry function.
    pub fn start(&mut self, frames: &mut [FrameMark]) {
        self.enabled = true;
        let mut parent = None;
        for fm in frames.iter_mut() {
            if fm.cid.is_none() {
                fm.cid = Some(self.emit_call(fm.eip, fm.return_address, parent));
            }
            parent = fm.cid;
        }
    }

    pub fn stop(&mut self) {
        self.enabled = false;
    }

    /// Charge a cost. Latency also advances the virtual clock. Ignored while tracing is off.
    pub fn charge(&mut self, metric: Metric, amount: u64) {
        if !self.enabled || amount == 0 {
            return;
        }
        self.cost.add_metric(metric, amount);
        if metric == Metric::Latency {
            self.clock = self.clock.saturating_add(amount);
        }
        let before = self.clock_before(metric, amount);
        if let Some(TraceEvent::Cost(last)) = self.events.last_mut() {
            if last.metric == metric && last.timestamp == before {
                last.amount += amount;
                last.timestamp = self.clock;
                return;
            }
        }
        self.events.push(TraceEvent::Cost(CostRecord {
            metric,
            amount,
            timestamp: self.clock,
        }));
    }

    fn clock_before(&self, metric: Metric, amount: u64) -> u64 {
        if metric == Metric::Latency {
            self.clock - amount
        } else {
            self.clock
        }
    }

    /// Emit a call record for `callee` when tracing; `caller_cid` is its true parent.
    pub fn call(&mut self, callee: &mut FrameMark, caller_cid: Option<u64>) {
        if self.enabled {
            callee.cid = Some(self.emit_call(callee.eip, callee.return_address, caller_cid));
        }
    }

    pub fn ret(&mut self, frame: &FrameMark) {
        if self.enabled && frame.cid.is_some() {
            self.events.push(TraceEvent::Return(ReturnRecord {
                return_address: frame.return_address,
                timestamp: self.clock,
                thread_id: MAIN_THREAD,
            }));
        }
    }

    fn emit_call(&mut self, eip: u64, return_address: u64, parent: Option<u64>) -> u64 {
        let cid = self.next_cid;
        self.next_cid += 1;
        self.events.push(TraceEvent::Call(CallRecord {
            cid,
            eip,
            return_address,
            timestamp: self.clock,
            thread_id: MAIN_THREAD,
            parent_id: None,
        }));
        self.true_parent.insert(cid, parent);
        cid
    }
}
