//! Exhaustive sweeps over partition space: which partitions cannot be
//! realized minimally as one segment per target, and by how much.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::Partition;
use crate::order::exhaustive_best_order;

/// Default cap on the number of ordered partitions a sweep may touch.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// `C(n, r)` saturating at `u64::MAX`.
fn binomial(n: u64, r: u64) -> u64 {
    let r = r.min(n - r.min(n));
    let mut result: u128 = 1;
    for i in 0..r {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if result > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    result as u64
}

/// Ordered partitions (compositions) of `2^width` into `k` positive
/// parts, in lexicographic order. There are `C(2^width - 1, k - 1)`.
pub fn enumerate_partitions(
    width: u32,
    k: u32,
    budget: u64,
) -> Result<impl Iterator<Item = Partition>> {
    if width > 62 || k == 0 || u64::from(k) > 1u64 << width {
        return Err(Error::InvalidKw { k, width });
    }
    let total = 1u64 << width;
    let count = binomial(total - 1, u64::from(k) - 1);
    if count > budget {
        return Err(Error::BudgetExceeded {
            count: count.to_string(),
            budget,
        });
    }
    let mut current: Option<Vec<u64>> = Some({
        let mut first = vec![1u64; k as usize];
        first[k as usize - 1] = total - u64::from(k - 1);
        first
    });
    Ok(std::iter::from_fn(move || {
        let weights = current.take()?;
        let result = Partition::from_u64s(&weights, Some(width)).expect("valid composition");
        current = next_composition(&weights);
        Some(result)
    }))
}

/// Lexicographic successor of a composition, keeping every part positive.
fn next_composition(c: &[u64]) -> Option<Vec<u64>> {
    let k = c.len();
    if k < 2 {
        return None;
    }
    // Rightmost position that can absorb one unit from its suffix.
    let mut suffix_sum = 0u64;
    for j in (0..k - 1).rev() {
        suffix_sum += c[j + 1];
        if suffix_sum > (k - 1 - j) as u64 {
            let mut next = c[..=j].to_vec();
            next[j] += 1;
            let remaining = suffix_sum - 1;
            let tail = k - 1 - j;
            next.extend(std::iter::repeat_n(1, tail - 1));
            next.push(remaining - (tail as u64 - 1));
            return Some(next);
        }
    }
    None
}

/// One partition that has no minimal single-segment-per-target table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub weights: Vec<u64>,
    pub complexity: u64,
    pub best_segmented: u64,
    pub gap: u64,
}

/// Outcome of a sweep over all partitions of `2^width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalityReport {
    pub width: u32,
    /// The part count swept, or `None` for all counts.
    pub k: Option<u32>,
    /// Unordered weight multisets examined.
    pub classes: u64,
    /// Ordered partitions they expand to.
    pub ordered: u64,
    /// Every ordered partition whose best segmented table exceeds its
    /// complexity, lexicographically sorted.
    pub rows: Vec<ReportRow>,
}

impl OptimalityReport {
    /// `partition,lambda,minN,gap` rows plus a trailing summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("partition,lambda,minN,gap\n");
        for row in &self.rows {
            let weights: Vec<String> = row.weights.iter().map(u64::to_string).collect();
            writeln!(
                out,
                "\"{}\",{},{},{}",
                weights.join(","),
                row.complexity,
                row.best_segmented,
                row.gap
            )
            .expect("string write");
        }
        write!(
            out,
            "# classes={} ordered={} flagged={}",
            self.classes,
            self.ordered,
            self.rows.len()
        )
        .expect("string write");
        out
    }
}

/// Sweeps every partition of `2^width` into `k` parts (or all part
/// counts), reporting those where no segment order reaches the minimum
/// rule count. Work is sharded over unordered classes; each class is
/// searched once and expanded into its orderings only when flagged.
pub fn segment_optimality_report(
    width: u32,
    k: Option<u32>,
    budget: u64,
    jobs: usize,
) -> Result<OptimalityReport> {
    if width > 62 {
        return Err(Error::InvalidKw { k: k.unwrap_or(0), width });
    }
    let total = 1u64 << width;
    let k_range: Vec<u32> = match k {
        Some(k) if k == 0 || u64::from(k) > total => {
            return Err(Error::InvalidKw { k, width })
        }
        Some(k) => vec![k],
        None => (1..=u32::try_from(total.min(u64::from(u32::MAX))).expect("bounded"))
            .collect(),
    };
    let ordered: u64 = k_range
        .iter()
        .map(|&k| binomial(total - 1, u64::from(k) - 1))
        .fold(0u64, u64::saturating_add);
    if ordered > budget {
        return Err(Error::BudgetExceeded {
            count: ordered.to_string(),
            budget,
        });
    }

    let mut classes: Vec<Vec<u64>> = Vec::new();
    for &k in &k_range {
        descending_partitions(total, k, &mut classes);
    }
    let class_count = classes.len() as u64;

    let jobs = jobs.max(1);
    let chunk = classes.len().div_ceil(jobs).max(1);
    let mut rows: Vec<ReportRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = classes
            .chunks(chunk)
            .map(|shard| {
                scope.spawn(move || {
                    let mut local = Vec::new();
                    for class in shard {
                        scan_class(class, &mut local);
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker"))
            .collect()
    });
    rows.sort_by(|a, b| a.weights.cmp(&b.weights));
    Ok(OptimalityReport {
        width,
        k,
        classes: class_count,
        ordered,
        rows,
    })
}

/// Emits every flagged ordering of one unordered class.
fn scan_class(class: &[u64], out: &mut Vec<ReportRow>) {
    let p = Partition::from_u64s(class, None).expect("class sums to a power of two");
    let report = exhaustive_best_order(&p, false).expect("classes fit the search budget");
    if report.gap == 0 {
        return;
    }
    let mut arrangement = class.to_vec();
    arrangement.sort_unstable();
    loop {
        out.push(ReportRow {
            weights: arrangement.clone(),
            complexity: report.complexity,
            best_segmented: report.best.conflicts,
            gap: report.gap,
        });
        if !next_distinct_permutation(&mut arrangement) {
            break;
        }
    }
}

fn next_distinct_permutation(seq: &mut [u64]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// All multisets of `k` positive parts summing to `total`, descending.
fn descending_partitions(total: u64, k: u32, out: &mut Vec<Vec<u64>>) {
    fn recurse(remaining: u64, parts_left: u32, cap: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts_left == 0 {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        let left = u64::from(parts_left);
        // Each remaining part is at least 1 and at most cap.
        let low = remaining.div_ceil(left);
        let high = cap.min(remaining - (left - 1));
        for value in low.max(1)..=high {
            current.push(value);
            recurse(remaining - value, parts_left - 1, value, current, out);
            current.pop();
        }
    }
    if u64::from(k) <= total {
        let mut current = Vec::with_capacity(k as usize);
        recurse(total, k, total, &mut current, out);
    }
}
