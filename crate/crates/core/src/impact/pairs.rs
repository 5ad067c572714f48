//! Pairwise comparison of cost table rows.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::Metric;
use crate::symexec::SymVar;

use super::table::{atom_names, CostTableRow};
use super::ImpactError;

/// One metric's values on the slow and fast side of a pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRatio {
    pub metric: Metric,
    pub slow: u64,
    pub fast: u64,
    /// `(slow - fast) / fast` as text, `inf` when `fast` is zero.
    pub ratio: String,
}

impl MetricRatio {
    pub fn new(metric: Metric, slow: u64, fast: u64) -> Self {
        let ratio = if fast == 0 {
            "inf".to_string()
        } else {
            format!("{:.4}", (slow as f64 - fast as f64) / fast as f64)
        };
        MetricRatio {
            metric,
            slow,
            fast,
            ratio,
        }
    }

    pub fn value(&self) -> f64 {
        if self.fast == 0 {
            f64::INFINITY
        } else {
            (self.slow as f64 - self.fast as f64) / self.fast as f64
        }
    }

    /// Whether the relative difference is strictly above `threshold_pct` percent.
    pub fn exceeds(&self, threshold_pct: u32) -> bool {
        exceeds(self.slow, self.fast, threshold_pct)
    }
}

impl fmt::Display for MetricRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fast == 0 {
            write!(f, "{} {} vs {} (+inf)", self.metric, self.slow, self.fast)
        } else {
            write!(f, "{} {} vs {} (+{:.1}%)", self.metric, self.slow, self.fast, self.value() * 100.0)
        }
    }
}

/// `(slow - fast) / fast > threshold / 100`, in exact integer arithmetic.
pub fn exceeds(slow: u64, fast: u64, threshold_pct: u32) -> bool {
    if slow <= fast {
        return false;
    }
    if fast == 0 {
        return true;
    }
    (slow - fast) as u128 * 100 > threshold_pct as u128 * fast as u128
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspiciousPair {
    pub slow: usize,
    pub fast: usize,
    /// The first metric that crossed the threshold, latency before logical metrics.
    pub metric: Metric,
    pub ratio: MetricRatio,
    /// Every metric that crossed the threshold in this orientation.
    pub triggered: Vec<MetricRatio>,
    pub similarity: usize,
}

impl SuspiciousPair {
    pub fn key(&self) -> (usize, usize) {
        (self.slow, self.fast)
    }
}

/// Number of atoms over a related parameter that occur in both config constraints.
pub fn similarity(
    a: &CostTableRow,
    b: &CostTableRow,
    related: &BTreeSet<String>,
    vars: &[SymVar],
) -> Result<usize, ImpactError> {
    let mut n = 0;
    for atom in &a.config_constraint {
        if !b.config_constraint.contains(atom) {
            continue;
        }
        if atom_names(atom, vars)?.iter().any(|v| related.contains(v)) {
            n += 1;
        }
    }
    Ok(n)
}

/// Compare every pair of rows. A pair is flagged in the orientation where some metric
/// of the slow row exceeds the fast row's by more than `threshold_pct` percent; when
/// different metrics point different ways, both orientations may be flagged.
/// Output is ordered by descending similarity, then by state ids.
pub fn find_suspicious_pairs(
    rows: &[CostTableRow],
    threshold_pct: u32,
    related: &BTreeSet<String>,
    vars: &[SymVar],
) -> Result<Vec<SuspiciousPair>, ImpactError> {
    if threshold_pct == 0 {
        return Err(ImpactError::BadThreshold(threshold_pct));
    }
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let sim = similarity(a, b, related, vars)?;
            for (slow, fast) in [(a, b), (b, a)] {
                let triggered: Vec<MetricRatio> = Metric::ALL
                    .into_iter()
                    .map(|m| MetricRatio::new(m, slow.cost.get(m), fast.cost.get(m)))
                    .filter(|r| r.exceeds(threshold_pct))
                    .collect();
                if let Some(first) = triggered.first() {
                    out.push(SuspiciousPair {
                        slow: slow.state,
                        fast: fast.state,
                        metric: first.metric,
                        ratio: first.clone(),
                        triggered: triggered.clone(),
                        similarity: sim,
                    });
                }
            }
        }
    }
    out.sort_by(|x, y| {
        let kx = (x.slow.min(x.fast), x.slow.max(x.fast), x.slow);
        let ky = (y.slow.min(y.fast), y.slow.max(y.fast), y.slow);
        y.similarity.cmp(&x.similarity).then(kx.cmp(&ky))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Domain;
    use crate::symexec::SymVarKind;
    use crate::trace::{CostVector, StateStatus};

    fn vars() -> Vec<SymVar> {
        vec![
            SymVar {
                name: "autocommit".into(),
                kind: SymVarKind::Config,
                domain: Domain::Int { lo: 0, hi: 1 },
            },
            SymVar {
                name: "flush".into(),
                kind: SymVarKind::Config,
                domain: Domain::Int { lo: 0, hi: 2 },
            },
        ]
    }

    fn row(state: usize, atoms: &[&str], latency: u64) -> CostTableRow {
        CostTableRow {
            state,
            status: StateStatus::Terminated,
            config_constraint: atoms.iter().map(|s| s.to_string()).collect(),
            input_predicate: vec![],
            mixed: vec![],
            cost: CostVector {
                latency,
                ..Default::default()
            },
            critical_path: vec![],
        }
    }

    fn related() -> BTreeSet<String> {
        ["autocommit", "flush"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn similarity_counts_shared_atoms() {
        let vs = vars();
        let a = row(0, &["autocommit==1", "flush==1"], 0);
        let b = row(1, &["autocommit==1", "flush==2"], 0);
        let c = row(2, &["autocommit==0"], 0);
        assert_eq!(similarity(&a, &b, &related(), &vs).unwrap(), 1);
        assert_eq!(similarity(&a, &a, &related(), &vs).unwrap(), 2);
        assert_eq!(similarity(&a, &c, &related(), &vs).unwrap(), 0);
    }

    #[test]
    fn threshold_arithmetic() {
        assert!(exceeds(2600, 600, 100));
        assert!(!exceeds(1200, 600, 100));
        assert!(exceeds(1, 0, 400));
        assert!(!exceeds(0, 0, 1));
        assert_eq!(MetricRatio::new(Metric::Latency, 2600, 600).ratio, "3.3333");
        assert_eq!(MetricRatio::new(Metric::FileIoOps, 100, 0).ratio, "inf");
    }

    #[test]
    fn pairs_are_oriented_and_ordered() {
        let vs = vars();
        let rows = vec![
            row(0, &["autocommit==1", "flush==1"], 2600),
            row(1, &["autocommit==1", "flush==2"], 1700),
            row(2, &["autocommit==0"], 600),
        ];
        let pairs = find_suspicious_pairs(&rows, 100, &related(), &vs).unwrap();
        let keys: Vec<(usize, usize)> = pairs.iter().map(|p| p.key()).collect();
        assert_eq!(keys, vec![(0, 2), (1, 2)]);
        assert_eq!(pairs[0].metric, Metric::Latency);
        let flat = vec![row(0, &[], 5), row(1, &[], 5)];
        assert!(find_suspicious_pairs(&flat, 1, &related(), &vs).unwrap().is_empty());
        assert!(find_suspicious_pairs(&flat, 0, &related(), &vs).is_err());
    }
}
