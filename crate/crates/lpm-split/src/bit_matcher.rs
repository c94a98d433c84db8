//! The Bit Matcher algorithm: shortest zeroing transaction sequences for
//! a partition, and their realization as concrete minimal rule tables.
//!
//! Bit Matcher clears one bit level per round. At level `d` the targets
//! whose weight has bit `d` set are split into halves by bit-lexicographic
//! order and paired low-to-high with transactions of size `2^d`; a final
//! transaction unallocates the whole address space. The sequence length
//! is the partition's complexity: no smaller rule table exists.

use num_bigint::BigUint;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{cmp_bitlex, Partition, Prefix, Transaction, TransactionSequence, TrieColoring};

/// The shortest zeroing sequence of `p`, one level at a time.
///
/// Pairing within a level is deterministic: candidates are sorted by
/// bit-lexicographic order with ties broken by ascending target id, the
/// lower half sends to the upper half positionally.
pub fn bit_matcher_sequence(p: &Partition) -> TransactionSequence {
    let mut weights = p.weights().to_vec();
    let mut out = Vec::new();
    for level in 0..p.width() {
        let mut active: Vec<u32> = (0..weights.len() as u32)
            .filter(|&i| weights[i as usize].bit(u64::from(level)))
            .map(|i| i + 1)
            .collect();
        active.sort_by(|&a, &b| {
            cmp_bitlex(&weights[(a - 1) as usize], &weights[(b - 1) as usize])
                .then(a.cmp(&b))
        });
        debug_assert!(active.len().is_multiple_of(2), "odd-count level violates parity");
        let half = active.len() / 2;
        let size = BigUint::from(1u32) << level;
        for t in 0..half {
            let (low, high) = (active[t], active[half + t]);
            weights[(low - 1) as usize] -= &size;
            weights[(high - 1) as usize] += &size;
            out.push(Transaction::from_level(low, level, high).expect("paired targets differ"));
        }
    }
    let owner = weights
        .iter()
        .position(|w| !w.is_zero())
        .expect("all weight gathers on one target");
    debug_assert_eq!(weights[owner], p.total());
    out.push(Transaction::from_level(owner as u32 + 1, p.width(), 0).expect("final move"));
    TransactionSequence::new(out)
}

/// The complexity of `p`: the minimum number of rules (equivalently,
/// transactions) realizing it.
pub fn complexity(p: &Partition) -> u64 {
    bit_matcher_sequence(p).len() as u64
}

/// Realizes a zeroing sequence as a trie coloring with exactly one rule
/// per transaction, inducing the sequence's source partition.
///
/// The sequence must be ordered by non-decreasing size with a single
/// final unallocating transaction, and when a size-`2^d` transaction is
/// applied both endpoint weights should be multiples of `2^d` (Bit
/// Matcher output satisfies this). The allocation policy is canonical:
/// the sequence is processed in reverse, starting from the whole trie
/// colored by the final sender, and each transaction `a -(2^d)-> b`
/// carves the lowest-addressed aligned block currently free under `b`.
pub fn realize_sequence(s: &TransactionSequence, width: u32) -> Result<TrieColoring> {
    if width > 63 {
        return Err(Error::WidthCapExceeded { width, cap: 63 });
    }
    let txs = s.transactions();
    let zeroing: Vec<_> = txs.iter().filter(|t| t.unallocates()).collect();
    if zeroing.len() != 1 {
        return Err(Error::MultipleZeroTargets {
            count: zeroing.len(),
        });
    }
    if !txs.windows(2).all(|w| w[0].level() <= w[1].level()) {
        return Err(Error::UnrealizableSequence {
            reason: "transactions are not ordered by non-decreasing size".into(),
        });
    }
    let last = *txs.last().expect("nonempty");
    if !last.unallocates() || last.level() != width {
        return Err(Error::UnrealizableSequence {
            reason: "the final transaction must unallocate the whole space".into(),
        });
    }
    let source = s.source_partition()?;
    if source.width() != width {
        return Err(Error::WidthMismatch {
            sum: source.total().to_string(),
            width,
        });
    }
    if !s.zeroes(&source) {
        return Err(Error::SequenceDoesNotZero {
            reason: "an intermediate weight would go negative".into(),
        });
    }

    let mut marks: BTreeMap<Prefix, u32> = BTreeMap::new();
    let mut free: BTreeMap<u32, BTreeSet<(u64, u32)>> = BTreeMap::new(); // color -> (start, size log)
    marks.insert(Prefix::ROOT, last.sender());
    free.entry(last.sender()).or_default().insert((0, width));

    for t in txs[..txs.len() - 1].iter().rev() {
        let d = t.level();
        let blocks = free.entry(t.receiver()).or_default();
        // Lowest-addressed block whose carve would not shadow an existing
        // rule. Only an exact-size block can be a mark itself; larger
        // blocks never contain marks.
        let chosen = blocks
            .iter()
            .find(|&&(start, _)| !marks.contains_key(&Prefix::new(start >> d, width - d)))
            .copied();
        let (start, log) = chosen.ok_or_else(|| Error::UnrealizableSequence {
            reason: format!("no free block colored {} can serve {t}", t.receiver()),
        })?;
        debug_assert!(log >= d, "reverse sizes are non-increasing");
        blocks.remove(&(start, log));
        // Split buddy-style, keeping the lowest 2^d piece.
        let mut upper_log = log;
        while upper_log > d {
            upper_log -= 1;
            blocks.insert((start + (1u64 << upper_log), upper_log));
        }
        let prefix = Prefix::new(start >> d, width - d);
        let shadowed = marks.insert(prefix, t.sender());
        debug_assert!(shadowed.is_none(), "shadow blocks were skipped");
        free.entry(t.sender()).or_default().insert((start, d));
    }
    TrieColoring::new(width, marks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LeafColoring;

    fn part(w: &[u64]) -> Partition {
        Partition::from_u64s(w, None).unwrap()
    }

    fn seq(text: &str) -> TransactionSequence {
        text.parse().unwrap()
    }

    #[test]
    fn reproduces_published_sequences() {
        assert_eq!(
            bit_matcher_sequence(&part(&[13, 13, 6])),
            seq("1-(1)->2\n3-(2)->2\n3-(4)->1\n1-(16)->2\n2-(32)->0")
        );
        assert_eq!(
            bit_matcher_sequence(&part(&[12, 49, 195])),
            seq("2-(1)->3\n3-(4)->1\n1-(16)->2\n2-(64)->3\n3-(256)->0")
        );
        assert_eq!(bit_matcher_sequence(&part(&[16])), seq("1-(16)->0"));
    }

    #[test]
    fn complexity_golden_values() {
        assert_eq!(complexity(&part(&[13, 13, 6])), 5);
        assert_eq!(complexity(&part(&[5, 3])), 3);
        assert_eq!(complexity(&part(&[32])), 1);
        assert_eq!(complexity(&part(&[1])), 1);
    }

    #[test]
    fn realizes_own_output() {
        for weights in [
            vec![13u64, 13, 6],
            vec![12, 49, 195],
            vec![5, 3],
            vec![1, 1, 2],
            vec![7, 9, 16],
        ] {
            let p = part(&weights);
            let s = bit_matcher_sequence(&p);
            let coloring = realize_sequence(&s, p.width()).unwrap();
            assert_eq!(coloring.conflict_count(), s.len() as u64, "{weights:?}");
            assert_eq!(coloring.induced_partition().unwrap(), p, "{weights:?}");
            assert_eq!(
                coloring.to_sequence().multiset(),
                s.multiset(),
                "{weights:?}"
            );
        }
    }

    #[test]
    fn realizes_trivial_sequence() {
        let coloring = realize_sequence(&seq("1-(8)->0"), 3).unwrap();
        assert_eq!(coloring, TrieColoring::root_only(3, 1).unwrap());
    }

    #[test]
    fn realized_optimum_for_13_13_6_is_fragmented() {
        let p = part(&[13, 13, 6]);
        let coloring = realize_sequence(&bit_matcher_sequence(&p), 5).unwrap();
        let runs = coloring.leaf_runs();
        let lc = LeafColoring::new(5, runs.iter().map(|&(c, l)| (c, l.into())).collect()).unwrap();
        assert!(lc.split_color().is_some(), "some target must be split");
    }

    #[test]
    fn rejects_malformed_sequences() {
        assert!(matches!(
            realize_sequence(&seq("1-(8)->0\n2-(8)->0"), 4),
            Err(Error::MultipleZeroTargets { count: 2 })
        ));
        assert!(matches!(
            realize_sequence(&seq("1-(2)->2\n2-(1)->1\n2-(4)->0"), 2),
            Err(Error::UnrealizableSequence { .. })
        ));
        assert!(matches!(
            realize_sequence(&seq("1-(1)->2\n1-(1)->2\n1-(4)->0"), 2),
            Err(Error::SequenceDoesNotZero { .. })
        ));
    }

    #[test]
    fn realizes_pass_through_weight() {
        // Target 2 forwards a received unit; the lowest-block policy must
        // skip the block that already carries a rule.
        let s = seq("1-(1)->2\n2-(1)->3\n3-(2)->2\n2-(4)->0");
        let p = s.source_partition().unwrap();
        assert_eq!(p, part(&[1, 2, 1]));
        let coloring = realize_sequence(&s, 2).unwrap();
        assert_eq!(coloring.conflict_count(), 4);
        assert_eq!(coloring.induced_partition().unwrap(), p);
        assert_eq!(coloring.to_sequence().multiset(), s.multiset());
    }
}
