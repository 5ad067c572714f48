//! Profiling records, call/return matching and call-chain reconstruction.

pub mod address;
pub mod format;
pub mod matching;
pub mod records;
pub mod state;
pub mod tracer;

pub use address::{AddressMap, LOAD_BASE};
pub use format::{render_call_tree, TraceFile, TraceParseError};
pub use matching::{match_call_returns, match_events, reconstruct_call_chain, CallMatch};
pub use records::{CallRecord, CostDiff, CostRecord, CostVector, ReturnRecord, TraceEvent};
pub use state::{finalize_trace, CallNode, StateStatus, StateTrace};
pub use tracer::{FrameMark, Tracer, MAIN_THREAD};
