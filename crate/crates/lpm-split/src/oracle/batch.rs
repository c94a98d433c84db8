//! Exact distance-to-zero for every weight multiset with a bounded sum,
//! in one backward breadth-first pass.
//!
//! The state space relaxes the slot model: a state is the multiset of
//! positive weights, and a move may deposit weight into a fresh slot.
//! Every k-slot move is available here, so the distances are lower bounds
//! on the slotted distances; when they coincide with the production
//! count the slotted optimum is pinned from both sides. States are
//! indexed by combinatorial rank instead of hashing, keeping the sweep
//! allocation-free.

use std::sync::atomic::{AtomicU8, Ordering};

use crate::error::{Error, Result};

/// Hard cap: the state count grows like the partition function.
pub const BATCH_MAX_SUM: u64 = 64;

const UNSEEN: u8 = u8::MAX;

/// Distance-to-zero for all weight multisets with sum at most `max_sum`.
pub struct ZeroingDistanceTable {
    max_sum: usize,
    stride: usize,
    /// Flattened `count[n][m]`: partitions of n into parts each at most m.
    /// Doubles as the rank prefix (partitions with a smaller largest part
    /// sort first).
    count: Vec<u64>,
    /// offset[n]: states of smaller sums preceding layer n.
    offset: Vec<u64>,
    dist: Vec<AtomicU8>,
}

impl ZeroingDistanceTable {
    /// Builds the table by backward search from the empty state.
    pub fn build(max_sum: u64) -> Result<Self> {
        if max_sum > BATCH_MAX_SUM {
            return Err(Error::StateSpaceTooLarge {
                reason: format!("distance table sum {max_sum} exceeds {BATCH_MAX_SUM}"),
            });
        }
        let n_max = max_sum as usize;
        let stride = n_max + 1;
        let mut count = vec![0u64; stride * stride];
        count[..stride].fill(1); // row n = 0
        for n in 1..=n_max {
            for m in 1..=n_max {
                let with_m = if m <= n {
                    count[(n - m) * stride + m.min(n - m)]
                } else {
                    0
                };
                count[n * stride + m] = count[n * stride + m - 1] + with_m;
            }
        }
        let mut offset = vec![0u64; n_max + 2];
        for n in 0..=n_max {
            offset[n + 1] = offset[n] + count[n * stride + n];
        }
        let total = offset[n_max + 1] as usize;
        let mut dist = Vec::with_capacity(total);
        dist.resize_with(total, || AtomicU8::new(UNSEEN));
        let table = ZeroingDistanceTable {
            max_sum: n_max,
            stride,
            count,
            offset,
            dist,
        };
        table.run_bfs();
        Ok(table)
    }

    pub fn state_count(&self) -> usize {
        self.dist.len()
    }

    /// Distance for the multiset of positive entries of `weights`.
    /// `None` if the sum exceeds the table bound.
    pub fn distance(&self, weights: &[u64]) -> Option<u32> {
        let mut parts: Vec<u64> = weights.iter().copied().filter(|&w| w > 0).collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let sum: u64 = parts.iter().sum();
        if sum as usize > self.max_sum {
            return None;
        }
        let parts_u8: Vec<u8> = parts.iter().map(|&p| p as u8).collect();
        let idx = self.index_of(&parts_u8, sum as usize);
        let d = self.dist[idx as usize].load(Ordering::Relaxed);
        debug_assert_ne!(d, UNSEEN, "backward search reaches every state");
        Some(u32::from(d))
    }

    #[inline]
    fn parts_below(&self, n: usize, largest: usize) -> u64 {
        self.count[n * self.stride + largest.min(n)]
    }

    /// Rank of a descending parts list within its sum layer, plus the
    /// layer offset. Partitions of a layer are ordered by largest part
    /// ascending, recursively.
    fn index_of(&self, parts: &[u8], sum: usize) -> u64 {
        let mut rank = 0u64;
        let mut remaining = sum;
        for &a in parts {
            let a = a as usize;
            rank += self.parts_below(remaining, a - 1);
            remaining -= a;
        }
        self.offset[sum] + rank
    }

    /// Inverse of [`Self::index_of`] within layer `sum`.
    fn unrank(&self, sum: usize, mut rank: u64, out: &mut Vec<u8>) {
        out.clear();
        let mut remaining = sum;
        let mut cap = sum;
        while remaining > 0 {
            // Smallest a with parts_below(remaining, a) > rank.
            let (mut lo, mut hi) = (1usize, cap.min(remaining));
            while lo < hi {
                let mid = (lo + hi) / 2;
                if self.parts_below(remaining, mid) > rank {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let a = lo;
            rank -= self.parts_below(remaining, a - 1);
            out.push(a as u8);
            remaining -= a;
            cap = a;
        }
    }

    fn run_bfs(&self) {
        let start = self.offset[0]; // the empty state
        self.dist[start as usize].store(0, Ordering::Relaxed);
        let mut frontier: Vec<u64> = vec![start];
        let mut depth: u8 = 0;
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(8);
        while !frontier.is_empty() {
            depth += 1;
            assert!(depth < UNSEEN, "distances exceed the u8 encoding");
            let chunk = frontier.len().div_ceil(workers);
            let next = std::thread::scope(|scope| {
                let handles: Vec<_> = frontier
                    .chunks(chunk.max(1))
                    .map(|slice| {
                        scope.spawn(move || {
                            let mut local: Vec<u64> = Vec::new();
                            let mut parts: Vec<u8> = Vec::with_capacity(self.max_sum);
                            let mut pred: Vec<u8> = Vec::with_capacity(self.max_sum);
                            for &index in slice {
                                let sum =
                                    self.offset.partition_point(|&o| o <= index) - 1;
                                self.unrank(sum, index - self.offset[sum], &mut parts);
                                self.push_predecessors(
                                    &parts, sum, depth, &mut local, &mut pred,
                                );
                            }
                            local
                        })
                    })
                    .collect();
                let mut merged = Vec::new();
                for h in handles {
                    merged.append(&mut h.join().expect("bfs worker"));
                }
                merged
            });
            frontier = next;
        }
    }

    /// Claims `pred` at `depth` if unseen, collecting it into the next
    /// frontier. Claims are atomic so frontier chunks can run in parallel;
    /// the frontier set per level is the same regardless of schedule.
    #[inline]
    fn visit(&self, pred: &[u8], pred_sum: usize, depth: u8, next: &mut Vec<u64>) {
        let idx = self.index_of(pred, pred_sum) as usize;
        if self.dist[idx].load(Ordering::Relaxed) == UNSEEN
            && self.dist[idx]
                .compare_exchange(UNSEEN, depth, Ordering::Relaxed, Ordering::Relaxed)
                .is_ok()
        {
            next.push(idx as u64);
        }
    }

    /// Generates every state one transaction before `parts`.
    fn push_predecessors(
        &self,
        parts: &[u8],
        sum: usize,
        depth: u8,
        next: &mut Vec<u64>,
        pred: &mut Vec<u8>,
    ) {
        let max = self.max_sum;

        // Undo a discard `i -(m)-> 0`: the sender held m more.
        let mut m = 1usize;
        while sum + m <= max {
            // The sender's remaining weight is some current part, or zero.
            build_with_replaced(parts, None, Some(m as u8), pred);
            self.visit(pred, sum + m, depth, next);
            for (pos, &v) in parts.iter().enumerate() {
                if pos > 0 && parts[pos - 1] == v {
                    continue;
                }
                if (v as usize + m) <= max {
                    build_with_replaced(parts, Some(pos), Some(v + m as u8), pred);
                    self.visit(pred, sum + m, depth, next);
                }
            }
            m <<= 1;
        }

        // Undo an inner move `i -(m)-> j`: receiver j shows u here and had
        // u - m; sender i shows v here and had v + m (v may be zero).
        let mut m = 1usize;
        while m <= sum {
            for (rpos, &u) in parts.iter().enumerate() {
                if rpos > 0 && parts[rpos - 1] == u {
                    continue;
                }
                if (u as usize) < m {
                    continue;
                }
                let receiver_before = u - m as u8;
                // Sender slot ended at zero: it held exactly m.
                build_with_two(parts, rpos, receiver_before, None, m as u8, pred);
                self.visit(pred, sum, depth, next);
                for (spos, &v) in parts.iter().enumerate() {
                    if spos == rpos {
                        continue;
                    }
                    if spos > 0 && parts[spos - 1] == v && spos - 1 != rpos {
                        continue;
                    }
                    build_with_two(parts, rpos, receiver_before, Some(spos), v + m as u8, pred);
                    self.visit(pred, sum, depth, next);
                }
            }
            m <<= 1;
        }
    }
}

/// Copies `parts` into `out`, dropping position `drop`, inserting
/// `insert`, keeping descending order and skipping zeros.
fn build_with_replaced(parts: &[u8], drop: Option<usize>, insert: Option<u8>, out: &mut Vec<u8>) {
    out.clear();
    let mut pending = insert.filter(|&v| v > 0);
    for (pos, &v) in parts.iter().enumerate() {
        if Some(pos) == drop {
            continue;
        }
        if let Some(p) = pending {
            if p >= v {
                out.push(p);
                pending = None;
            }
        }
        out.push(v);
    }
    if let Some(p) = pending {
        out.push(p);
    }
}

/// Copies `parts` with position `rpos` becoming `rval`, position `spos`
/// (or a fresh slot) becoming `sval`, descending, zeros dropped.
fn build_with_two(
    parts: &[u8],
    rpos: usize,
    rval: u8,
    spos: Option<usize>,
    sval: u8,
    out: &mut Vec<u8>,
) {
    out.clear();
    let mut pending = [Some(sval), (rval > 0).then_some(rval)];
    if pending[0] < pending[1] {
        pending.swap(0, 1);
    }
    let mut pi = 0;
    for (pos, &v) in parts.iter().enumerate() {
        if pos == rpos || Some(pos) == spos {
            continue;
        }
        while pi < 2 {
            match pending[pi] {
                Some(p) if p >= v => {
                    out.push(p);
                    pi += 1;
                }
                _ => break,
            }
        }
        out.push(v);
    }
    while pi < 2 {
        if let Some(p) = pending[pi] {
            out.push(p);
        }
        pi += 1;
    }
}
