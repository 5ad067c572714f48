//! Pairing call records with return records, and recovering parents from addresses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::{CallRecord, ReturnRecord, TraceEvent};

/// A call record with its matched return, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallMatch {
    pub call: CallRecord,
    pub ret: Option<ReturnRecord>,
    /// Return minus call timestamp, or state end minus call timestamp when unmatched.
    pub latency: u64,
    /// Ordering key of the call: its position in the event stream when known,
    /// otherwise its timestamp.
    pub call_key: u64,
    pub ret_key: Option<u64>,
}

impl CallMatch {
    pub fn unmatched(&self) -> bool {
        self.ret.is_none()
    }
}

struct Keyed<T> {
    rec: T,
    key: u64,
}

/// Match calls to returns from separate lists. Without the interleaving of the two
/// lists, timestamps stand in for order.
pub fn match_call_returns(
    calls: &[CallRecord],
    returns: &[ReturnRecord],
    state_end: u64,
) -> Vec<CallMatch> {
    let calls = calls.iter().map(|c| Keyed { rec: *c, key: c.timestamp }).collect();
    let rets = returns.iter().map(|r| Keyed { rec: *r, key: r.timestamp }).collect();
    match_keyed(calls, rets, state_end)
}

/// Match calls to returns using the emission order of a full trace.
pub fn match_events(events: &[TraceEvent], state_end: u64) -> Vec<CallMatch> {
    let mut calls = Vec::new();
    let mut rets = Vec::new();
    for (i, e) in events.iter().enumerate() {
        match e {
            TraceEvent::Call(c) => calls.push(Keyed { rec: *c, key: i as u64 }),
            TraceEvent::Return(r) => rets.push(Keyed { rec: *r, key: i as u64 }),
            TraceEvent::Cost(_) => {}
        }
    }
    match_keyed(calls, rets, state_end)
}

/// Per thread, calls are taken in descending cid order and each claims the earliest
/// unclaimed return with the same return address that does not precede it. Innermost
/// calls claim first, so recursive calls through one callsite pair up correctly.
fn match_keyed(
    calls: Vec<Keyed<CallRecord>>,
    rets: Vec<Keyed<ReturnRecord>>,
    state_end: u64,
) -> Vec<CallMatch> {
    type Events = (Vec<Keyed<CallRecord>>, Vec<Keyed<ReturnRecord>>);
    let mut by_thread: BTreeMap<u32, Events> =
        BTreeMap::new();
    for c in calls {
        by_thread.entry(c.rec.thread_id).or_default().0.push(c);
    }
    for r in rets {
        by_thread.entry(r.rec.thread_id).or_default().1.push(r);
    }
    let mut out = Vec::new();
    for (_, (mut calls, mut rets)) in by_thread {
        calls.sort_by_key(|c| c.rec.cid);
        rets.sort_by_key(|r| r.key);
        let mut taken = vec![false; rets.len()];
        let mut matched: Vec<CallMatch> = Vec::with_capacity(calls.len());
        for c in calls.iter().rev() {
            let hit = rets.iter().enumerate().position(|(i, r)| {
                !taken[i]
                    && r.rec.return_address == c.rec.return_address
                    && r.key >= c.key
                    && r.rec.timestamp >= c.rec.timestamp
            });
            let (ret, ret_key, latency) = match hit {
                Some(i) => {
                    taken[i] = true;
                    let r = &rets[i];
                    (Some(r.rec), Some(r.key), r.rec.timestamp - c.rec.timestamp)
                }
                None => (None, None, state_end.saturating_sub(c.rec.timestamp)),
            };
            matched.push(CallMatch {
                call: c.rec,
                ret,
                latency,
                call_key: c.key,
                ret_key,
            });
        }
        matched.reverse();
        out.extend(matched);
    }
    out
}

/// Fill `parent_id` of every record. The parent of A is the record B of the same
/// thread with a smaller cid and an entry address below A's return address that
/// minimizes the gap between the two, ties going to the latest such B. Records whose
/// matched return comes before A's call are no longer live and are skipped.
pub fn reconstruct_call_chain(calls: &mut [CallMatch]) {
    let snapshot: Vec<CallMatch> = calls.to_vec();
    for a in calls.iter_mut() {
        let mut best: Option<&CallMatch> = None;
        for b in &snapshot {
            if b.call.thread_id != a.call.thread_id
                || b.call.cid >= a.call.cid
                || b.call.eip >= a.call.return_address
                || b.ret_key.is_some_and(|k| k < a.call_key)
            {
                continue;
            }
            let better = match best {
                None => true,
                Some(cur) => {
                    let gap = a.call.return_address - b.call.eip;
                    let cur_gap = a.call.return_address - cur.call.eip;
                    gap < cur_gap || (gap == cur_gap && b.call.cid > cur.call.cid)
                }
            };
            if better {
                best = Some(b);
            }
        }
        a.call.parent_id = best.map(|b| b.call.cid);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(cid: u64, eip: u64, ra: u64, ts: u64, tid: u32) -> CallRecord {
        CallRecord {
            cid,
            eip,
            return_address: ra,
            timestamp: ts,
            thread_id: tid,
            parent_id: None,
        }
    }

    fn ret(ra: u64, ts: u64, tid: u32) -> ReturnRecord {
        ReturnRecord {
            return_address: ra,
            timestamp: ts,
            thread_id: tid,
        }
    }

    #[test]
    fn single_pair() {
        let m = match_call_returns(&[call(1, 0x40, 0x54, 3, 0)], &[ret(0x54, 10, 0)], 20);
        assert_eq!(m[0].latency, 7);
    }

    #[test]
    fn nested_calls() {
        let calls = [call(1, 0x100, 0x0, 0, 0), call(2, 0x200, 0x10c, 2, 0)];
        let rets = [ret(0x10c, 5, 0), ret(0x0, 9, 0)];
        let mut m = match_call_returns(&calls, &rets, 9);
        assert_eq!((m[0].latency, m[1].latency), (9, 3));
        reconstruct_call_chain(&mut m);
        assert_eq!(m[1].call.parent_id, Some(1));
        assert_eq!(m[0].call.parent_id, None);
    }

    #[test]
    fn unmatched_call_runs_to_state_end() {
        let m = match_call_returns(&[call(1, 0x40, 0x54, 3, 0)], &[], 50);
        assert!(m[0].unmatched());
        assert_eq!(m[0].latency, 47);
    }

    #[test]
    fn threads_never_cross() {
        let calls = [call(1, 0x40, 0x54, 0, 0), call(2, 0x40, 0x54, 1, 1)];
        let rets = [ret(0x54, 2, 1), ret(0x54, 8, 0)];
        let m = match_call_returns(&calls, &rets, 10);
        assert_eq!(m.iter().find(|c| c.call.thread_id == 0).unwrap().latency, 8);
        assert_eq!(m.iter().find(|c| c.call.thread_id == 1).unwrap().latency, 1);
    }

    #[test]
    fn repeated_callsite_uses_event_order() {
        // main calls f twice from one site with no time passing in between
        let events = [
            TraceEvent::Call(call(1, 0x100, 0, 0, 0)),
            TraceEvent::Call(call(2, 0x200, 0x10c, 0, 0)),
            TraceEvent::Return(ret(0x10c, 0, 0)),
            TraceEvent::Call(call(3, 0x200, 0x10c, 0, 0)),
            TraceEvent::Call(call(4, 0x300, 0x208, 0, 0)),
            TraceEvent::Return(ret(0x208, 4, 0)),
            TraceEvent::Return(ret(0x10c, 4, 0)),
        ];
        let mut m = match_events(&events, 4);
        assert_eq!(m[1].ret_key, Some(2));
        assert_eq!(m[2].ret_key, Some(6));
        reconstruct_call_chain(&mut m);
        let parents: Vec<Option<u64>> = m.iter().map(|c| c.call.parent_id).collect();
        assert_eq!(parents, vec![None, Some(1), Some(1), Some(3)]);
    }
}
