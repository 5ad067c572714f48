use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::lang::Metric;

/// Per-path cost counters. Latency is in virtual clock units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CostVector {
    pub latency: u64,
    pub instructions: u64,
    pub syscalls: u64,
    pub file_io_ops: u64,
    pub io_bytes: u64,
    pub sync_ops: u64,
    pub net_ops: u64,
}

impl CostVector {
    pub fn get(&self, m: Metric) -> u64 {
        match m {
            Metric::Latency => self.latency,
            Metric::Instructions => self.instructions,
            Metric::Syscalls => self.syscalls,
            Metric::FileIoOps => self.file_io_ops,
            Metric::IoBytes => self.io_bytes,
            Metric::SyncOps => self.sync_ops,
            Metric::NetOps => self.net_ops,
        }
    }

    pub fn get_mut(&mut self, m: Metric) -> &mut u64 {
        match m {
            Metric::Latency => &mut self.latency,
            Metric::Instructions => &mut self.instructions,
            Metric::Syscalls => &mut self.syscalls,
            Metric::FileIoOps => &mut self.file_io_ops,
            Metric::IoBytes => &mut self.io_bytes,
            Metric::SyncOps => &mut self.sync_ops,
            Metric::NetOps => &mut self.net_ops,
        }
    }

    pub fn add_metric(&mut self, m: Metric, amount: u64) {
        let slot = self.get_mut(m);
        *slot = slot.saturating_add(amount);
    }

    pub fn is_zero(&self) -> bool {
        *self == CostVector::default()
    }

    /// Componentwise `self - other` as signed values.
    pub fn diff(&self, other: &CostVector) -> CostDiff {
        let mut out = CostDiff::default();
        for m in Metric::ALL {
            out.0[m as usize] = self.get(m) as i128 - other.get(m) as i128;
        }
        out
    }
}

impl Add for CostVector {
    type Output = CostVector;
    fn add(mut self, rhs: CostVector) -> CostVector {
        self += rhs;
        self
    }
}

impl AddAssign for CostVector {
    fn add_assign(&mut self, rhs: CostVector) {
        for m in Metric::ALL {
            self.add_metric(m, rhs.get(m));
        }
    }
}

impl fmt::Display for CostVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = Metric::ALL
            .iter()
            .map(|m| format!("{}={}", m.name(), self.get(*m)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Signed componentwise difference of two cost vectors, indexed like [`Metric::ALL`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostDiff(pub [i128; 7]);

impl CostDiff {
    pub fn get(&self, m: Metric) -> i128 {
        self.0[m as usize]
    }

    pub fn neg(&self) -> CostDiff {
        CostDiff(self.0.map(|v| -v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallRecord {
    pub cid: u64,
    pub eip: u64,
    pub return_address: u64,
    pub timestamp: u64,
    pub thread_id: u32,
    /// Filled by call-chain reconstruction.
    pub parent_id: Option<u64>,
}

impl CallRecord {
    pub fn offset(&self, load_base: u64) -> u64 {
        self.eip - load_base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReturnRecord {
    pub return_address: u64,
    pub timestamp: u64,
    pub thread_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRecord {
    pub metric: Metric,
    pub amount: u64,
    pub timestamp: u64,
}

/// One line of a trace, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Call(CallRecord),
    Return(ReturnRecord),
    Cost(CostRecord),
}
