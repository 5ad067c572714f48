//! Finalized per-state profile: matched, parented call tree with latencies.

use serde::{Deserialize, Serialize};

use super::address::AddressMap;
use super::matching::{match_events, reconstruct_call_chain};
use super::records::{CostVector, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateStatus {
    Running,
    Terminated,
    BudgetExceeded,
}

impl StateStatus {
    pub fn name(self) -> &'static str {
        match self {
            StateStatus::Running => "running",
            StateStatus::Terminated => "terminated",
            StateStatus::BudgetExceeded => "budget-exceeded",
        }
    }

    pub fn from_name(s: &str) -> Option<StateStatus> {
        [StateStatus::Running, StateStatus::Terminated, StateStatus::BudgetExceeded]
            .into_iter()
            .find(|st| st.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallNode {
    pub cid: u64,
    pub func: String,
    pub eip: u64,
    pub return_address: u64,
    pub timestamp: u64,
    pub parent: Option<u64>,
    pub depth: usize,
    /// Inclusive latency.
    pub latency: u64,
    /// Latency not spent in callees.
    pub self_latency: u64,
    /// False when no return record was matched; latency then runs to the end of
    /// the enclosing call or of the state.
    pub returned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTrace {
    pub state: usize,
    pub status: StateStatus,
    /// Canonical atom texts of the final path constraint.
    pub constraint: Vec<String>,
    pub cost: CostVector,
    /// Virtual clock at termination.
    pub end: u64,
    /// Call tree in cid order; parents precede children.
    pub calls: Vec<CallNode>,
}

impl StateTrace {
    pub fn root(&self) -> Option<&CallNode> {
        self.calls.iter().find(|c| c.parent.is_none())
    }

    pub fn call(&self, cid: u64) -> Option<&CallNode> {
        self.calls.iter().find(|c| c.cid == cid)
    }

    pub fn children(&self, cid: u64) -> impl Iterator<Item = &CallNode> + '_ {
        self.calls.iter().filter(move |c| c.parent == Some(cid))
    }

    /// Function names from the root down to `cid`.
    pub fn chain_to(&self, cid: u64) -> Vec<String> {
        let mut out = Vec::new();
        let mut at = self.call(cid);
        while let Some(c) = at {
            out.push(c.func.clone());
            at = c.parent.and_then(|p| self.call(p));
        }
        out.reverse();
        out
    }

    /// Total latency as observed from the call tree.
    pub fn root_latency(&self) -> u64 {
        self.root().map_or(0, |r| r.latency)
    }
}

/// Build the call tree of one state from its raw events.
pub fn finalize_trace(
    state: usize,
    status: StateStatus,
    constraint: Vec<String>,
    events: &[TraceEvent],
    end: u64,
    names: &dyn Fn(u64) -> String,
) -> StateTrace {
    let mut cost = CostVector::default();
    for e in events {
        if let TraceEvent::Cost(k) = e {
            cost.add_metric(k.metric, k.amount);
        }
    }
    let mut matches = match_events(events, end);
    reconstruct_call_chain(&mut matches);
    matches.sort_by_key(|m| m.call.cid);

    let mut calls: Vec<CallNode> = Vec::with_capacity(matches.len());
    for m in &matches {
        let parent = m.call.parent_id.and_then(|p| calls.iter().find(|c| c.cid == p));
        let mut latency = m.latency;
        if m.unmatched() {
            // the return went unrecorded; the call was over by the time its parent
            // ended or made its next call
            if let Some(p) = parent {
                let parent_end = p.timestamp + p.latency;
                latency = latency.min(parent_end.saturating_sub(m.call.timestamp));
            }
            let next_sibling = matches
                .iter()
                .find(|n| n.call.cid > m.call.cid && n.call.parent_id == m.call.parent_id && n.call.thread_id == m.call.thread_id);
            if let Some(n) = next_sibling {
                latency = latency.min(n.call.timestamp.saturating_sub(m.call.timestamp));
            }
        }
        calls.push(CallNode {
            cid: m.call.cid,
            func: names(m.call.eip),
            eip: m.call.eip,
            return_address: m.call.return_address,
            timestamp: m.call.timestamp,
            parent: m.call.parent_id,
            depth: parent.map_or(0, |p| p.depth + 1),
            latency,
            self_latency: latency,
            returned: !m.unmatched(),
        });
    }
    for i in 0..calls.len() {
        if let Some(p) = calls[i].parent {
            let child = calls[i].latency;
            if let Some(parent) = calls.iter_mut().find(|c| c.cid == p) {
                parent.self_latency = parent.self_latency.saturating_sub(child);
            }
        }
    }
    StateTrace {
        state,
        status,
        constraint,
        cost,
        end,
        calls,
    }
}

/// Name lookup through an address map, falling back to the raw address.
pub fn names_from(map: &AddressMap) -> impl Fn(u64) -> String + '_ {
    move |eip| {
        map.function_at(eip)
            .map(str::to_string)
            .unwrap_or_else(|| format!("{eip:#x}"))
    }
}
