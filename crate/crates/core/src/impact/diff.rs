//! Differential critical path between a slow and a fast state.

use serde::{Deserialize, Serialize};

use crate::trace::StateTrace;

use super::ImpactError;

/// Matched index pairs of a longest common subsequence of `a` and `b`, using the
/// greedy O((N+M)D) forward search with a recorded frontier per edit distance.
pub fn lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let n = a.len() as isize;
    let m = b.len() as isize;
    let max = n + m;
    let off = max;
    let idx = |k: isize| (off + k) as usize;
    let mut v = vec![0isize; 2 * max as usize + 2];
    let mut trace: Vec<Vec<isize>> = Vec::new();
    let mut end_d = None;
    'outer: for d in 0..=max {
        trace.push(v.clone());
        let mut k = -d;
        while k <= d {
            let mut x = if k == -d || (k != d && v[idx(k - 1)] < v[idx(k + 1)]) {
                v[idx(k + 1)]
            } else {
                v[idx(k - 1)] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx(k)] = x;
            if x >= n && y >= m {
                end_d = Some(d);
                break 'outer;
            }
            k += 2;
        }
    }
    let mut out = Vec::new();
    let (mut x, mut y) = (n, m);
    for d in (0..=end_d.unwrap_or(0)).rev() {
        let v = &trace[d as usize];
        let k = x - y;
        let prev_k = if k == -d || (k != d && v[idx(k - 1)] < v[idx(k + 1)]) {
            k + 1
        } else {
            k - 1
        };
        let prev_x = v[idx(prev_k)];
        let prev_y = prev_x - prev_k;
        while x > prev_x && y > prev_y && x > 0 && y > 0 {
            x -= 1;
            y -= 1;
            out.push((x as usize, y as usize));
        }
        if d > 0 {
            x = prev_x;
            y = prev_y;
        }
    }
    out.reverse();
    out
}

/// One call of the slow state, aligned with the fast state where possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub func: String,
    pub slow_cid: u64,
    /// Aligned call of the fast state; `None` for slow-only records.
    pub fast_cid: Option<u64>,
    /// Inclusive latency difference (full latency for slow-only records).
    pub latency: i128,
    /// Self latency difference (full self latency for slow-only records).
    pub self_latency: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffCriticalPath {
    pub common: Vec<DiffRecord>,
    pub slow_only: Vec<DiffRecord>,
    /// Function chain from the root to the call with the largest positive
    /// self-latency difference; empty when no non-root call got slower.
    pub critical_chain: Vec<String>,
}

impl DiffCriticalPath {
    pub fn critical_call(&self) -> Option<&str> {
        self.critical_chain.last().map(String::as_str)
    }
}

/// Align the call records of two states on `(eip, return_address)` and locate the
/// non-root call whose own latency grew the most.
pub fn differential_critical_path(slow: &StateTrace, fast: &StateTrace) -> Result<DiffCriticalPath, ImpactError> {
    if slow.calls.is_empty() || fast.calls.is_empty() {
        return Err(ImpactError::DegenerateTrace {
            state: if slow.calls.is_empty() { slow.state } else { fast.state },
        });
    }
    let key = |t: &StateTrace| -> Vec<(u64, u64)> {
        t.calls.iter().map(|c| (c.eip, c.return_address)).collect()
    };
    let pairs = lcs_pairs(&key(slow), &key(fast));
    let mut aligned: Vec<Option<usize>> = vec![None; slow.calls.len()];
    for (i, j) in pairs {
        aligned[i] = Some(j);
    }
    let mut common = Vec::new();
    let mut slow_only = Vec::new();
    let mut best: Option<(i128, u64)> = None;
    for (i, c) in slow.calls.iter().enumerate() {
        let rec = match aligned[i] {
            Some(j) => {
                let f = &fast.calls[j];
                DiffRecord {
                    func: c.func.clone(),
                    slow_cid: c.cid,
                    fast_cid: Some(f.cid),
                    latency: c.latency as i128 - f.latency as i128,
                    self_latency: c.self_latency as i128 - f.self_latency as i128,
                }
            }
            None => DiffRecord {
                func: c.func.clone(),
                slow_cid: c.cid,
                fast_cid: None,
                latency: c.latency as i128,
                self_latency: c.self_latency as i128,
            },
        };
        if c.parent.is_some() && rec.self_latency > 0 && best.is_none_or(|(d, _)| rec.self_latency > d) {
            best = Some((rec.self_latency, c.cid));
        }
        if rec.fast_cid.is_some() {
            common.push(rec);
        } else {
            slow_only.push(rec);
        }
    }
    Ok(DiffCriticalPath {
        common,
        slow_only,
        critical_chain: best.map(|(_, cid)| slow.chain_to(cid)).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcs(a: &str, b: &str) -> Vec<(usize, usize)> {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        lcs_pairs(&a, &b)
    }

    #[test]
    fn small_cases() {
        assert!(lcs("", "").is_empty());
        assert!(lcs("abc", "").is_empty());
        assert_eq!(lcs("abc", "abc").len(), 3);
        assert_eq!(lcs("abcabba", "cbabac").len(), 4);
        for (i, j) in lcs("abcabba", "cbabac") {
            assert_eq!("abcabba".as_bytes()[i], "cbabac".as_bytes()[j]);
        }
    }
}
