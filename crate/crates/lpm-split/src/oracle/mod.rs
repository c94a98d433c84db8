//! Independent brute-force ground truth: shortest zeroing sequences by
//! state-space search and minimum-conflict colorings by dynamic
//! programming. Everything here is deliberately unrelated to the
//! production algorithms so the test suite can catch drift.

mod batch;

pub use batch::{ZeroingDistanceTable, BATCH_MAX_SUM};

use num_bigint::BigUint;
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{LeafColoring, Partition, Transaction, TransactionSequence};

/// Default guard for [`brute_lambda`]: weights must sum to at most 2^9.
pub const BRUTE_LAMBDA_MAX_SUM: u64 = 512;
/// Default guard for [`enumerate_shortest_sequences`]: sum at most 2^7.
pub const ENUMERATE_MAX_SUM: u64 = 128;
/// Visited-state budget for the searches.
const STATE_BUDGET: usize = 30_000_000;
/// Cap on the number of distinct shortest sequences collected.
const SEQUENCE_BUDGET: usize = 1_000_000;

fn guarded_weights(p: &Partition, max_sum: u64, what: &str) -> Result<Vec<u64>> {
    let total = p.total();
    if total > BigUint::from(max_sum) {
        return Err(Error::StateSpaceTooLarge {
            reason: format!("{what}: sum {total} exceeds guard {max_sum}"),
        });
    }
    Ok(p.weights_u64().expect("weights fit u64 under guard"))
}

fn sorted_desc(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Exact minimum length of a zeroing transaction sequence, by breadth-first
/// search over weight-vector states. States are canonicalized as sorted
/// multisets of the k slots; transactions explored are every
/// `i -(2^d)-> j` with `j` in `0..=k`, `j != i`, and `2^d` at most the
/// sender's weight.
pub fn brute_lambda(p: &Partition) -> Result<u64> {
    brute_lambda_with_limit(p, BRUTE_LAMBDA_MAX_SUM)
}

pub fn brute_lambda_with_limit(p: &Partition, max_sum: u64) -> Result<u64> {
    let start = sorted_desc(guarded_weights(p, max_sum, "brute_lambda")?);
    let k = start.len();
    let zero = vec![0u64; k];
    if start == zero {
        return Ok(0);
    }
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    seen.insert(start.clone(), ());
    let mut frontier = vec![start];
    let mut depth = 0u64;
    while !frontier.is_empty() {
        depth += 1;
        let mut next_frontier = Vec::new();
        for state in &frontier {
            let mut found = false;
            for_each_successor(state, |next| {
                if found || seen.contains_key(&next) {
                    return;
                }
                if next == zero {
                    found = true;
                    return;
                }
                seen.insert(next.clone(), ());
                next_frontier.push(next);
            });
            if found {
                return Ok(depth);
            }
            if seen.len() > STATE_BUDGET {
                return Err(Error::StateSpaceTooLarge {
                    reason: format!("brute_lambda visited more than {STATE_BUDGET} states"),
                });
            }
        }
        frontier = next_frontier;
    }
    unreachable!("every partition can be zeroed")
}

/// Calls `f` with every successor (one transaction applied) of a sorted
/// state, deduplicated by (sender value, size, receiver value).
fn for_each_successor(state: &[u64], mut f: impl FnMut(Vec<u64>)) {
    let n = state.len();
    for si in 0..n {
        if state[si] == 0 || (si > 0 && state[si] == state[si - 1]) {
            continue;
        }
        let mut d = 0u32;
        while (1u64 << d) <= state[si] {
            let m = 1u64 << d;
            // Receiver 0 discards.
            let mut discard = state.to_vec();
            discard[si] -= m;
            f(sorted_desc(discard));
            for ri in 0..n {
                if ri == si {
                    continue;
                }
                // Skip a receiver slot that repeats an already-tried value.
                if ri > 0 && state[ri] == state[ri - 1] && ri - 1 != si {
                    continue;
                }
                let mut next = state.to_vec();
                next[si] -= m;
                next[ri] += m;
                f(sorted_desc(next));
            }
            d += 1;
        }
    }
}

/// All shortest zeroing sequences of `p`, deduplicated by transaction
/// multiset. Each returned sequence is the lexicographically smallest
/// valid ordering of its multiset, so it still zeroes `p` with no
/// intermediate shortfall; sequences are sorted for determinism.
pub fn enumerate_shortest_sequences(p: &Partition) -> Result<Vec<TransactionSequence>> {
    enumerate_shortest_sequences_with_limit(p, ENUMERATE_MAX_SUM)
}

pub fn enumerate_shortest_sequences_with_limit(
    p: &Partition,
    max_sum: u64,
) -> Result<Vec<TransactionSequence>> {
    let weights = guarded_weights(p, max_sum, "enumerate_shortest_sequences")?;
    let lambda = brute_lambda_with_limit(p, max_sum)? as u32;
    let distances = distances_to_zero(weights.len(), weights.iter().sum(), lambda)?;

    let mut best: BTreeMap<Vec<Transaction>, Vec<Transaction>> = BTreeMap::new();
    let mut path: Vec<Transaction> = Vec::new();
    let mut state = weights;
    dfs_shortest(&mut state, 0, lambda, &distances, &mut path, &mut best)?;
    Ok(best
        .into_values()
        .map(TransactionSequence::new)
        .collect())
}

fn dfs_shortest(
    state: &mut Vec<u64>,
    depth: u32,
    lambda: u32,
    distances: &HashMap<Vec<u64>, u32>,
    path: &mut Vec<Transaction>,
    best: &mut BTreeMap<Vec<Transaction>, Vec<Transaction>>,
) -> Result<()> {
    if depth == lambda {
        let mut key = path.clone();
        key.sort();
        match best.get_mut(&key) {
            Some(existing) => {
                if path.as_slice() < existing.as_slice() {
                    existing.clone_from(path);
                }
            }
            None => {
                if best.len() >= SEQUENCE_BUDGET {
                    return Err(Error::StateSpaceTooLarge {
                        reason: format!("more than {SEQUENCE_BUDGET} shortest sequences"),
                    });
                }
                best.insert(key, path.clone());
            }
        }
        return Ok(());
    }
    let k = state.len() as u32;
    let remaining = lambda - depth - 1;
    for sender in 1..=k {
        let available = state[(sender - 1) as usize];
        if available == 0 {
            continue;
        }
        let mut d = 0u32;
        while (1u64 << d) <= available {
            let m = 1u64 << d;
            for receiver in 0..=k {
                if receiver == sender {
                    continue;
                }
                state[(sender - 1) as usize] -= m;
                if receiver != 0 {
                    state[(receiver - 1) as usize] += m;
                }
                let reachable = distances
                    .get(&sorted_desc(state.clone()))
                    .is_some_and(|&dist| dist <= remaining);
                if reachable {
                    path.push(Transaction::from_level(sender, d, receiver).expect("valid move"));
                    dfs_shortest(state, depth + 1, lambda, distances, path, best)?;
                    path.pop();
                }
                if receiver != 0 {
                    state[(receiver - 1) as usize] -= m;
                }
                state[(sender - 1) as usize] += m;
            }
            d += 1;
        }
    }
    Ok(())
}

/// Distances to the all-zero state for every sorted k-slot state within
/// `max_depth` transactions and total weight at most `max_sum`, by
/// backward search from zero.
fn distances_to_zero(k: usize, max_sum: u64, max_depth: u32) -> Result<HashMap<Vec<u64>, u32>> {
    let zero = vec![0u64; k];
    let mut dist: HashMap<Vec<u64>, u32> = HashMap::new();
    dist.insert(zero.clone(), 0);
    let mut frontier = vec![zero];
    for depth in 1..=max_depth {
        let mut next_frontier = Vec::new();
        for state in &frontier {
            let sum: u64 = state.iter().sum();
            let mut visit = |pred: Vec<u64>| {
                if !dist.contains_key(&pred) {
                    dist.insert(pred.clone(), depth);
                    next_frontier.push(pred);
                }
            };
            // Undo a discard: some slot held m more.
            let mut d = 0u32;
            while sum + (1u64 << d) <= max_sum {
                let m = 1u64 << d;
                for i in 0..k {
                    if i > 0 && state[i] == state[i - 1] {
                        continue;
                    }
                    let mut pred = state.clone();
                    pred[i] += m;
                    visit(sorted_desc(pred));
                }
                d += 1;
            }
            // Undo an inner move: receiver i had m less, sender j had m more.
            for i in 0..k {
                if state[i] == 0 || (i > 0 && state[i] == state[i - 1]) {
                    continue;
                }
                let mut d = 0u32;
                while (1u64 << d) <= state[i] {
                    let m = 1u64 << d;
                    for j in 0..k {
                        if j == i || (j > 0 && state[j] == state[j - 1] && j - 1 != i) {
                            continue;
                        }
                        let mut pred = state.clone();
                        pred[i] -= m;
                        pred[j] += m;
                        visit(sorted_desc(pred));
                    }
                    d += 1;
                }
            }
            if dist.len() > STATE_BUDGET {
                return Err(Error::StateSpaceTooLarge {
                    reason: format!("distance table exceeded {STATE_BUDGET} states"),
                });
            }
        }
        frontier = next_frontier;
    }
    Ok(dist)
}

/// Minimum conflicts over all trie colorings extending the given leaf
/// coloring, by per-subtree dynamic programming over candidate colors.
/// Guarded to widths at most 12 and at most 16 distinct colors.
pub fn dp_min_conflicts(lc: &LeafColoring) -> Result<u64> {
    const MAX_WIDTH: u32 = 12;
    const MAX_COLORS: usize = 16;
    const INF: u32 = u32::MAX / 2;
    if lc.width() > MAX_WIDTH {
        return Err(Error::StateSpaceTooLarge {
            reason: format!("dp_min_conflicts width {} exceeds {MAX_WIDTH}", lc.width()),
        });
    }
    let cells = lc.to_cells()?;
    let mut palette: Vec<u32> = cells.clone();
    palette.sort_unstable();
    palette.dedup();
    let colors = palette.len();
    if colors > MAX_COLORS {
        return Err(Error::StateSpaceTooLarge {
            reason: format!("dp_min_conflicts has {colors} colors, guard is {MAX_COLORS}"),
        });
    }
    let index_of = |c: u32| palette.binary_search(&c).expect("color in palette");

    // cost[v][c]: minimum conflicts strictly inside v's subtree when v is
    // colored c (edges from v's children down).
    let mut level: Vec<Vec<u32>> = cells
        .iter()
        .map(|&cell| {
            let mut row = vec![INF; colors];
            row[index_of(cell)] = 0;
            row
        })
        .collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let (left, right) = (&pair[0], &pair[1]);
                let left_best = *left.iter().min().expect("nonempty");
                let right_best = *right.iter().min().expect("nonempty");
                (0..colors)
                    .map(|c| {
                        left[c].min(left_best + 1) + right[c].min(right_best + 1)
                    })
                    .collect()
            })
            .collect();
    }
    let root_best = *level[0].iter().min().expect("root row");
    Ok(u64::from(root_best) + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn part(w: &[u64]) -> Partition {
        Partition::from_u64s(w, None).unwrap()
    }

    fn tx(sender: u32, size: u64, receiver: u32) -> Transaction {
        Transaction::new(sender, &BigUint::from(size), receiver).unwrap()
    }

    #[test]
    fn lambda_golden_values() {
        assert_eq!(brute_lambda(&part(&[13, 13, 6])).unwrap(), 5);
        assert_eq!(brute_lambda(&part(&[5, 3])).unwrap(), 3);
        assert_eq!(brute_lambda(&part(&[16])).unwrap(), 1);
        assert_eq!(brute_lambda(&part(&[1])).unwrap(), 1);
    }

    #[test]
    fn lambda_guard_is_hard() {
        let p = Partition::from_u64s(&[1024], None).unwrap();
        assert!(matches!(
            brute_lambda(&p),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn enumerates_five_three() {
        let seqs = enumerate_shortest_sequences(&part(&[5, 3])).unwrap();
        assert!(seqs.iter().all(|s| s.len() == 3));
        assert!(seqs.iter().all(|s| s.zeroes(&part(&[5, 3]))));
        let a = TransactionSequence::new(vec![tx(2, 1, 1), tx(2, 2, 1), tx(1, 8, 0)]);
        let b = TransactionSequence::new(vec![tx(1, 1, 2), tx(2, 4, 1), tx(1, 8, 0)]);
        let multisets: Vec<_> = seqs.iter().map(|s| s.multiset()).collect();
        assert!(multisets.contains(&a.multiset()));
        assert!(multisets.contains(&b.multiset()));
    }

    #[test]
    fn enumerates_singleton() {
        let seqs = enumerate_shortest_sequences(&part(&[8])).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(
            seqs[0].transactions(),
            [Transaction::from_level(1, 3, 0).unwrap()]
        );
    }

    #[test]
    fn forced_transaction_in_every_shortest_sequence() {
        let seqs = enumerate_shortest_sequences(&part(&[7, 9, 16])).unwrap();
        assert!(!seqs.is_empty());
        let forced = tx(2, 1, 1);
        assert!(seqs
            .iter()
            .all(|s| s.transactions().contains(&forced)));
    }

    #[test]
    fn dp_matches_hand_counts() {
        // Segmented [13,13,6] needs 6 conflicts.
        let p = part(&[13, 13, 6]);
        let lc = LeafColoring::identity(&p);
        assert_eq!(dp_min_conflicts(&lc).unwrap(), 6);

        // Leaves a,b,b,d: conflicts at a, d, and the root.
        let lc = LeafColoring::from_cells(2, &[1, 2, 2, 4]).unwrap();
        assert_eq!(dp_min_conflicts(&lc).unwrap(), 3);

        let lc = LeafColoring::from_cells(2, &[7, 7, 7, 7]).unwrap();
        assert_eq!(dp_min_conflicts(&lc).unwrap(), 1);
    }
}
