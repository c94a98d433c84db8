use num_bigint::BigUint;
use num_traits::One;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::partition::Partition;
use crate::model::prefix::Prefix;
use crate::model::transaction::{Transaction, TransactionSequence};

/// A color is a 1-based target id; 0 is reserved for "unallocated" and is
/// never a color in a coloring.
pub type Color = u32;

/// A conflict: a marked node whose effective color differs from the color
/// above it. The root is always in conflict (`parent_color` is `None`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub prefix: Prefix,
    pub color: Color,
    pub parent_color: Option<Color>,
}

/// A sparse trie coloring: a map from prefixes to colors, with the root
/// always marked. Unmarked nodes take the color of their nearest marked
/// ancestor, so every leaf is colored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrieColoring {
    width: u32,
    marks: BTreeMap<Prefix, Color>,
}

impl TrieColoring {
    /// Builds a coloring from marks. The root must be marked and every
    /// mark must fit in the trie of depth `width`.
    pub fn new(width: u32, marks: BTreeMap<Prefix, Color>) -> Result<Self> {
        if width > 63 {
            return Err(Error::WidthCapExceeded { width, cap: 63 });
        }
        if !marks.contains_key(&Prefix::ROOT) {
            return Err(Error::UnmatchedAddress);
        }
        for (prefix, &color) in &marks {
            if prefix.len() > width || color == 0 {
                return Err(Error::BadTargetIds {
                    reason: format!("mark {prefix} with color {color}"),
                });
            }
        }
        Ok(TrieColoring { width, marks })
    }

    pub fn root_only(width: u32, color: Color) -> Result<Self> {
        let mut marks = BTreeMap::new();
        marks.insert(Prefix::ROOT, color);
        Self::new(width, marks)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn marks(&self) -> &BTreeMap<Prefix, Color> {
        &self.marks
    }

    pub fn mark_count(&self) -> usize {
        self.marks.len()
    }

    /// Color of the nearest marked proper ancestor of `prefix`.
    pub fn effective_parent_color(&self, prefix: &Prefix) -> Option<Color> {
        let mut cur = prefix.parent()?;
        loop {
            if let Some(&c) = self.marks.get(&cur) {
                return Some(c);
            }
            cur = cur.parent()?;
        }
    }

    /// Color shown at `prefix` itself (its own mark or the nearest ancestor's).
    pub fn effective_color(&self, prefix: &Prefix) -> Color {
        if let Some(&c) = self.marks.get(prefix) {
            return c;
        }
        self.effective_parent_color(prefix)
            .expect("root is always marked")
    }

    /// All conflicts, root first, then deeper marks in prefix order.
    /// A mark whose color equals its effective parent color is redundant
    /// and contributes no conflict.
    pub fn conflicts(&self) -> Vec<Conflict> {
        let mut out = vec![Conflict {
            prefix: Prefix::ROOT,
            color: self.marks[&Prefix::ROOT],
            parent_color: None,
        }];
        for (prefix, &color) in &self.marks {
            if prefix.is_root() {
                continue;
            }
            let parent = self
                .effective_parent_color(prefix)
                .expect("non-root mark has an effective parent");
            if parent != color {
                out.push(Conflict {
                    prefix: *prefix,
                    color,
                    parent_color: Some(parent),
                });
            }
        }
        out
    }

    pub fn conflict_count(&self) -> u64 {
        self.conflicts().len() as u64
    }

    /// Leaves owned by each color, indexed by color id (1-based).
    ///
    /// Counts each mark's block minus the blocks of marks nested inside it,
    /// so the result is exactly the partition the coloring induces.
    pub fn induced_weights(&self) -> Vec<BigUint> {
        let k = *self.marks.values().max().expect("root mark") as usize;
        let mut exclusive: BTreeMap<Prefix, BigUint> = self
            .marks
            .keys()
            .map(|p| (*p, BigUint::one() << (self.width - p.len())))
            .collect();
        for prefix in self.marks.keys() {
            if prefix.is_root() {
                continue;
            }
            let mut cur = prefix.parent().expect("non-root");
            let ancestor = loop {
                if self.marks.contains_key(&cur) {
                    break cur;
                }
                cur = cur.parent().expect("root is marked");
            };
            let block = BigUint::one() << (self.width - prefix.len());
            let owner = exclusive.get_mut(&ancestor).expect("ancestor present");
            *owner -= block;
        }
        let mut weights = vec![BigUint::default(); k];
        for (prefix, count) in exclusive {
            let color = self.marks[&prefix];
            weights[(color - 1) as usize] += count;
        }
        weights
    }

    /// The induced weights as a validated partition. Fails if some color
    /// in `1..=max` owns no leaves.
    pub fn induced_partition(&self) -> Result<Partition> {
        Partition::new(self.induced_weights(), Some(self.width))
    }

    /// The deletion sequence of this coloring: one transaction per
    /// conflict, deepest marks first, ending with the root's transaction
    /// into target 0. Redundant marks contribute nothing.
    pub fn to_sequence(&self) -> TransactionSequence {
        let mut marks: Vec<(Prefix, Color)> =
            self.marks.iter().map(|(p, &c)| (*p, c)).collect();
        marks.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then_with(|| a.0.bits().cmp(&b.0.bits()))
        });
        let mut out = Vec::new();
        for (prefix, color) in marks {
            if prefix.is_root() {
                out.push(
                    Transaction::from_level(color, self.width, 0).expect("root transaction"),
                );
            } else {
                let parent = self
                    .effective_parent_color(&prefix)
                    .expect("non-root mark has parent");
                if parent != color {
                    out.push(
                        Transaction::from_level(color, self.width - prefix.len(), parent)
                            .expect("conflict transaction"),
                    );
                }
            }
        }
        TransactionSequence::new(out)
    }

    /// Left-to-right maximal runs of leaf colors, run-length encoded.
    pub fn leaf_runs(&self) -> Vec<(Color, u64)> {
        let mut runs: Vec<(Color, u64)> = Vec::new();
        self.collect_runs(Prefix::ROOT, self.marks[&Prefix::ROOT], &mut runs);
        runs
    }

    fn collect_runs(&self, node: Prefix, inherited: Color, runs: &mut Vec<(Color, u64)>) {
        let color = *self.marks.get(&node).unwrap_or(&inherited);
        if !self.has_marks_below(&node) {
            let len = node.block_len(self.width);
            match runs.last_mut() {
                Some((c, l)) if *c == color => *l += len,
                _ => runs.push((color, len)),
            }
            return;
        }
        self.collect_runs(node.child(false), color, runs);
        self.collect_runs(node.child(true), color, runs);
    }

    fn has_marks_below(&self, node: &Prefix) -> bool {
        if node.len() >= self.width {
            return false;
        }
        self.marks.keys().any(|p| p != node && node.covers(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mark(list: &[(u64, u32, Color)], width: u32) -> TrieColoring {
        let marks = list
            .iter()
            .map(|&(bits, len, c)| (Prefix::new(bits, len), c))
            .collect();
        TrieColoring::new(width, marks).unwrap()
    }

    /// The four-rule example: 011 -> 1, 01* -> 2, 0** -> 3, *** -> 1.
    fn four_rule() -> TrieColoring {
        mark(&[(0b011, 3, 1), (0b01, 2, 2), (0, 1, 3), (0, 0, 1)], 3)
    }

    #[test]
    fn counts_conflicts() {
        assert_eq!(four_rule().conflict_count(), 4);
        assert_eq!(TrieColoring::root_only(4, 1).unwrap().conflict_count(), 1);
        // A mark matching its parent color is not a conflict.
        let redundant = mark(&[(0, 0, 1), (0, 1, 1)], 3);
        assert_eq!(redundant.conflict_count(), 1);
    }

    #[test]
    fn requires_root_mark() {
        let marks: BTreeMap<Prefix, Color> = [(Prefix::new(0, 1), 1)].into_iter().collect();
        assert!(matches!(
            TrieColoring::new(3, marks),
            Err(Error::UnmatchedAddress)
        ));
    }

    #[test]
    fn induces_partitions() {
        let w = four_rule().induced_weights();
        assert_eq!(w, [5u64, 1, 2].map(BigUint::from));
        let root = TrieColoring::root_only(3, 1).unwrap();
        assert_eq!(root.induced_weights(), [BigUint::from(8u64)]);
    }

    #[test]
    fn builds_deletion_sequence() {
        let seq = four_rule().to_sequence();
        let expected: Vec<Transaction> = [
            Transaction::new(1, &BigUint::from(1u32), 2),
            Transaction::new(2, &BigUint::from(2u32), 3),
            Transaction::new(3, &BigUint::from(4u32), 1),
            Transaction::new(1, &BigUint::from(8u32), 0),
        ]
        .map(Result::unwrap)
        .to_vec();
        assert_eq!(seq.transactions(), expected);

        let root = TrieColoring::root_only(3, 1).unwrap();
        assert_eq!(
            root.to_sequence().transactions(),
            [Transaction::from_level(1, 3, 0).unwrap()]
        );
        assert!(seq.zeroes(&four_rule().induced_partition().unwrap()));
    }

    #[test]
    fn extracts_leaf_runs() {
        // Leaves: 000,001 -> 3; 010 -> 2; 011..111 -> 1.
        assert_eq!(four_rule().leaf_runs(), vec![(3, 2), (2, 1), (1, 5)]);
    }
}
