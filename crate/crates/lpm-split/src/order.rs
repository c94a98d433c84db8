//! Searching for segment orders that minimize the rule count when every
//! target must own a single consecutive address range.

use num_bigint::BigUint;
use std::collections::BTreeMap;
use std::collections::VecDeque;

use crate::bit_matcher::{bit_matcher_sequence, complexity};
use crate::error::{Error, Result};
use crate::model::{Color, LeafColoring, Partition, Prefix, TrieColoring, EXPLICIT_TRIE_CAP};
use crate::segmented::{color_segments_fast, order_conflicts};

/// Distinct orderings an exhaustive search will evaluate before refusing.
pub const EXHAUSTIVE_BUDGET: u64 = 10_000_000;

/// One evaluated ordering and its conflict count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentOrderCost {
    pub order: Vec<u32>,
    pub conflicts: u64,
}

/// Outcome of an order search over a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSearchReport {
    pub best: SegmentOrderCost,
    /// The unconstrained minimum rule count of the partition.
    pub complexity: u64,
    /// Extra rules the best segmented layout costs over the minimum.
    pub gap: u64,
    /// Distinct orderings evaluated (reversals and equal weights deduped).
    pub evaluated: u64,
    pub table: Option<Vec<SegmentOrderCost>>,
}

/// Exact minimum of the segmented conflict count over all orders.
///
/// Orderings that permute equal weights are evaluated once, and each
/// ordering is folded with its left-right mirror, so at most half of the
/// distinct arrangements are visited.
pub fn exhaustive_best_order(p: &Partition, collect_table: bool) -> Result<OrderSearchReport> {
    let weights = p.weights();
    let k = p.k() as usize;

    // Dense ranks make permutation steps cheap; equal weights share a rank.
    let mut sorted: Vec<&BigUint> = weights.iter().collect();
    sorted.sort();
    sorted.dedup();
    let rank_of = |w: &BigUint| sorted.binary_search(&w).expect("weight present") as u32;
    let mut multiplicity: BTreeMap<u32, u64> = BTreeMap::new();
    for w in weights {
        *multiplicity.entry(rank_of(w)).or_insert(0) += 1;
    }
    let arrangements = multinomial(k as u64, multiplicity.values().copied())?;
    if arrangements.div_ceil(2) > EXHAUSTIVE_BUDGET {
        return Err(Error::TooManyPermutations {
            count: arrangements.to_string(),
            budget: EXHAUSTIVE_BUDGET,
        });
    }

    // Queues of original target ids per rank, ascending.
    let index_queues: BTreeMap<u32, Vec<u32>> = {
        let mut q: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (i, w) in weights.iter().enumerate() {
            q.entry(rank_of(w)).or_default().push(i as u32 + 1);
        }
        q
    };
    let order_for = |ranks: &[u32]| -> Vec<u32> {
        let mut queues: BTreeMap<u32, VecDeque<u32>> = index_queues
            .iter()
            .map(|(r, ids)| (*r, ids.iter().copied().collect()))
            .collect();
        ranks
            .iter()
            .map(|r| queues.get_mut(r).expect("rank").pop_front().expect("id"))
            .collect()
    };

    let mut ranks: Vec<u32> = weights.iter().map(rank_of).collect();
    ranks.sort_unstable();
    let lambda = complexity(p);
    let mut best: Option<SegmentOrderCost> = None;
    let mut table = collect_table.then(Vec::new);
    let mut evaluated = 0u64;
    loop {
        let reversed: Vec<u32> = ranks.iter().rev().copied().collect();
        // Visit each mirror pair once, from its lexicographically smaller side.
        if ranks <= reversed {
            evaluated += 1;
            let order = order_for(&ranks);
            let conflicts = order_conflicts(p, &order)?;
            let mirror = order_for(&reversed);
            let candidate_order = order.clone().min(mirror);
            let candidate = SegmentOrderCost {
                order: candidate_order,
                conflicts,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    (conflicts, &candidate.order) < (b.conflicts, &b.order)
                }
            };
            if better {
                best = Some(candidate);
            }
            if let Some(t) = table.as_mut() {
                t.push(SegmentOrderCost { order, conflicts });
            }
        }
        if !next_permutation(&mut ranks) {
            break;
        }
    }
    let best = best.expect("at least one ordering");
    Ok(OrderSearchReport {
        gap: best.conflicts - lambda,
        best,
        complexity: lambda,
        evaluated,
        table,
    })
}

fn multinomial(total: u64, multiplicities: impl Iterator<Item = u64>) -> Result<u64> {
    let mut result: u128 = 1;
    let mut seen = 0u64;
    let mut divisor: u128 = 1;
    for m in multiplicities {
        for i in 1..=m {
            seen += 1;
            result = result.saturating_mul(seen as u128);
            divisor = divisor.saturating_mul(i as u128);
            if result / divisor > u128::from(EXHAUSTIVE_BUDGET) * 4 {
                result = u128::MAX;
            }
        }
    }
    debug_assert_eq!(seen, total);
    Ok(u64::try_from((result / divisor).min(u128::from(u64::MAX))).unwrap_or(u64::MAX))
}

/// Standard lexicographic next-permutation; distinct arrangements only.
fn next_permutation(seq: &mut [u32]) -> bool {
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

/// Finds a segment order by derandomizing the random-order bound.
///
/// The conflicts of a minimum coloring are read off the Bit Matcher
/// sequence as (child color, parent color) pairs. Positions are fixed
/// left to right; each step places the color minimizing the summed
/// conditional expectation of the subtree-shift costs, where a conflict
/// with both endpoint positions known contributes exactly
/// `|i - j| - 1`, one known endpoint averages over the free suffix, and
/// unknown endpoints average over free pairs.
pub fn derandomized_order(p: &Partition) -> Vec<u32> {
    let k = p.k();
    if k == 1 {
        return vec![1];
    }
    let conflict_pairs: Vec<(Color, Color)> = bit_matcher_sequence(p)
        .iter()
        .filter(|t| !t.unallocates())
        .map(|t| (t.sender(), t.receiver()))
        .collect();

    let mut position_of: BTreeMap<Color, i64> = BTreeMap::new();
    let mut order: Vec<u32> = Vec::with_capacity(k as usize);
    for j in 1..=i64::from(k) {
        let free = i64::from(k) - j; // positions j+1..=k stay open
        let scale = if free >= 2 { free * (free - 1) } else { 1 };
        let mut best: Option<(i64, u32)> = None;
        for candidate in 1..=k {
            if position_of.contains_key(&candidate) {
                continue;
            }
            let mut total = 0i64;
            for &(child, parent) in &conflict_pairs {
                let child_pos = if child == candidate {
                    Some(j)
                } else {
                    position_of.get(&child).copied()
                };
                let parent_pos = if parent == candidate {
                    Some(j)
                } else {
                    position_of.get(&parent).copied()
                };
                total += match (child_pos, parent_pos) {
                    (Some(a), Some(b)) => ((a - b).abs() - 1) * scale,
                    (Some(q), None) | (None, Some(q)) => {
                        // Sum of |q - f| over the free suffix f = j+1..=k.
                        let sum = (j + 1 + i64::from(k)) * free / 2 - free * q;
                        sum * (scale / free.max(1)) - scale
                    }
                    (None, None) => {
                        // Ordered free pairs: sum |f - f'| = (u-1)u(u+1)/3.
                        (free - 1) * free * (free + 1) / 3 - scale
                    }
                };
            }
            if best.is_none_or(|(b, _)| total < b) {
                best = Some((total, candidate));
            }
        }
        let (_, chosen) = best.expect("an unplaced color remains");
        position_of.insert(chosen, j);
        order.push(chosen);
    }
    order
}

/// Tie-breaking for the greedy placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyTie {
    /// Prefer the smallest weight on ties (worst-case reproducible).
    #[default]
    Adversarial,
    /// Prefer the largest weight on ties.
    BestCase,
}

/// Left-to-right greedy order: each step fixes the next segment whose
/// weight minimizes the conflicts of the placed prefix plus one residual
/// segment holding everything else.
pub fn greedy_order(p: &Partition) -> Vec<u32> {
    greedy_order_with(p, GreedyTie::default())
}

pub fn greedy_order_with(p: &Partition, tie: GreedyTie) -> Vec<u32> {
    let width = p.width();
    let mut remaining: BTreeMap<BigUint, VecDeque<u32>> = BTreeMap::new();
    for (i, w) in p.weights().iter().enumerate() {
        remaining.entry(w.clone()).or_default().push_back(i as u32 + 1);
    }
    let mut placed: Vec<BigUint> = Vec::new();
    let mut order: Vec<u32> = Vec::new();
    let mut rest: BigUint = p.total();
    for _ in 0..p.k() {
        let mut best: Option<(u64, BigUint)> = None;
        for value in remaining.keys() {
            let residual = &rest - value;
            let mut runs: Vec<(Color, BigUint)> = placed
                .iter()
                .chain(std::iter::once(value))
                .enumerate()
                .map(|(i, w)| (i as u32 + 1, w.clone()))
                .collect();
            if residual > BigUint::default() {
                runs.push((runs.len() as u32 + 1, residual));
            }
            let lc = LeafColoring::new(width, runs).expect("weights tile the space");
            let conflicts = color_segments_fast(&lc)
                .expect("distinct colors per run")
                .conflicts;
            let better = match &best {
                None => true,
                Some((c, v)) => match conflicts.cmp(c) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => match tie {
                        GreedyTie::Adversarial => value < v,
                        GreedyTie::BestCase => value > v,
                    },
                },
            };
            if better {
                best = Some((conflicts, value.clone()));
            }
        }
        let (_, value) = best.expect("values remain");
        let ids = remaining.get_mut(&value).expect("value present");
        order.push(ids.pop_front().expect("id available"));
        if ids.is_empty() {
            remaining.remove(&value);
        }
        rest -= &value;
        placed.push(value);
    }
    order
}

/// Rearranges an optimal (minimum-conflict) coloring into the exact
/// segment layout of `order`, moving whole subtrees level by level.
///
/// Expanding one level at a time, children that conflict with their
/// parent are shifted to the boundary of their own color's block, in
/// block order; everything else stays put. Conflicts inside a moved
/// subtree are unaffected, so the result stays within the shift bound.
pub fn shift_to_segments(c: &TrieColoring, order: &[u32]) -> Result<TrieColoring> {
    let width = c.width();
    if width > EXPLICIT_TRIE_CAP {
        return Err(Error::WidthCapExceeded {
            width,
            cap: EXPLICIT_TRIE_CAP,
        });
    }
    let induced = c.induced_partition()?;
    let lambda = complexity(&induced);
    let found = c.conflict_count();
    if found != lambda {
        return Err(Error::NotOptimalInput {
            found,
            minimum: lambda,
        });
    }
    let k = induced.k();
    LeafColoring::from_order(&induced, order)?; // validates the permutation
    let mut rank_of = vec![0u32; k as usize + 1];
    for (pos, &id) in order.iter().enumerate() {
        rank_of[id as usize] = pos as u32;
    }

    // Effective colors of the original trie, one array per level.
    let mut original: Vec<Vec<Color>> = vec![vec![c.effective_color(&Prefix::ROOT)]];
    for depth in 1..=width {
        let prev = &original[(depth - 1) as usize];
        let level = (0..1u64 << depth)
            .map(|bits| {
                c.marks()
                    .get(&Prefix::new(bits, depth))
                    .copied()
                    .unwrap_or(prev[(bits >> 1) as usize])
            })
            .collect();
        original.push(level);
    }

    // arranged[depth] lists original node ids left to right after moves.
    let mut arranged: Vec<Vec<u64>> = vec![vec![0]];
    for depth in 1..=width {
        let parents = &arranged[(depth - 1) as usize];
        let expanded: Vec<u64> = parents
            .iter()
            .flat_map(|&id| [id << 1, (id << 1) | 1])
            .collect();
        let mut by_rank: Vec<(Vec<u64>, Vec<u64>)> = vec![(Vec::new(), Vec::new()); k as usize];
        for (pos, &id) in expanded.iter().enumerate() {
            let color = original[depth as usize][id as usize];
            let parent_color = original[(depth - 1) as usize][parents[pos / 2] as usize];
            let bucket = &mut by_rank[rank_of[color as usize] as usize];
            if color == parent_color {
                bucket.0.push(id);
            } else {
                bucket.1.push(id);
            }
        }
        arranged.push(
            by_rank
                .into_iter()
                .flat_map(|(settled, strays)| settled.into_iter().chain(strays))
                .collect(),
        );
    }

    let mut marks: BTreeMap<Prefix, Color> = BTreeMap::new();
    marks.insert(Prefix::ROOT, original[0][0]);
    for depth in 1..=width as usize {
        for (pos, &id) in arranged[depth].iter().enumerate() {
            let color = original[depth][id as usize];
            let parent_id = arranged[depth - 1][pos / 2];
            if color != original[depth - 1][parent_id as usize] {
                marks.insert(Prefix::new(pos as u64, depth as u32), color);
            }
        }
    }
    TrieColoring::new(width, marks)
}

/// Shift-construction conflict bound: `lambda (k-1) - (k-2)(k+1)/2`.
pub fn shift_bound(lambda: u64, k: u32) -> u64 {
    let k = u64::from(k);
    if k < 2 {
        return 1;
    }
    lambda * (k - 1) - (k - 2) * (k + 1) / 2
}

/// An adversarial instance whose bad order provably costs close to the
/// order-approximation upper bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundInstance {
    pub partition: Partition,
    /// The expensive order: first part, then the aligned parts, then the
    /// second part.
    pub bad_order: Vec<u32>,
    /// The identity order, with the two interleaved parts adjacent.
    pub good_order: Vec<u32>,
}

/// Builds the adversarial instance: two parts with interleaved bit
/// patterns fill the left half of the space, and `k - 2` power-of-two
/// parts tile the right half.
pub fn lower_bound_instance(k: u32, width: u32) -> Result<LowerBoundInstance> {
    if k < 3 || !(2..=62).contains(&width) || u64::from(k - 2) > 1u64 << (width - 1) {
        return Err(Error::InvalidKw { k, width });
    }
    let half = 1u64 << (width - 1);
    let (p1, p2) = if width % 2 == 1 {
        let p1 = half / 3;
        (p1, 2 * p1 + 1)
    } else {
        let p1 = half.div_ceil(3);
        (p1, 2 * p1 - 1)
    };
    debug_assert_eq!(p1 + p2, half);

    // Right half: k - 2 powers of two, greedily largest-first, laid out
    // ascending so every segment starts at a multiple of its size.
    let mut rest = Vec::with_capacity((k - 2) as usize);
    let mut remaining = half;
    for parts_left in (1..=k - 2).rev() {
        if parts_left == 1 {
            if remaining.count_ones() != 1 {
                return Err(Error::InvalidKw { k, width });
            }
            rest.push(remaining);
            break;
        }
        let budget = remaining - u64::from(parts_left - 1);
        let mut piece = 1u64 << budget.ilog2();
        while (remaining - piece).count_ones() > parts_left - 1 {
            piece >>= 1;
        }
        rest.push(piece);
        remaining -= piece;
    }
    rest.sort_unstable();

    let mut weights = vec![p1, p2];
    weights.extend(&rest);
    let partition = Partition::from_u64s(&weights, Some(width))?;
    let mut bad_order = vec![1u32];
    bad_order.extend(3..=k);
    bad_order.push(2);
    Ok(LowerBoundInstance {
        partition,
        bad_order,
        good_order: (1..=k).collect(),
    })
}

/// The guaranteed bad/good ratio of [`lower_bound_instance`], as a
/// (numerator, denominator) pair.
pub fn lower_bound_ratio(k: u32, width: u32) -> (u64, u64) {
    let k = u64::from(k);
    let w = u64::from(width);
    let floor_lg_k = 63 - k.leading_zeros() as u64;
    ((w - floor_lg_k) / 2 * (k - 1) + 1, w / 2 + (k - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmented::conflict_size_bound;

    fn part(w: &[u64]) -> Partition {
        Partition::from_u64s(w, None).unwrap()
    }

    #[test]
    fn exhaustive_finds_the_gap() {
        let report = exhaustive_best_order(&part(&[13, 13, 6]), true).unwrap();
        assert_eq!(report.best.conflicts, 6);
        assert_eq!(report.complexity, 5);
        assert_eq!(report.gap, 1);
        // Three distinct arrangements, halved by mirroring, palindrome kept.
        assert_eq!(report.evaluated, 2);

        let report = exhaustive_best_order(&part(&[12, 49, 195]), false).unwrap();
        assert_eq!(report.best.conflicts, 6);
        assert_eq!(report.gap, 1);
    }

    #[test]
    fn exhaustive_two_parts_have_no_gap() {
        for p in [part(&[5, 3]), part(&[19, 13]), part(&[1, 127])] {
            let report = exhaustive_best_order(&p, false).unwrap();
            assert_eq!(report.gap, 0, "{p}");
        }
    }

    #[test]
    fn exhaustive_budget_guard() {
        // 1 + (1 + 2 + ... + 2^17) = 2^18; nineteen parts, two equal.
        let mut weights: Vec<u64> = (0..18).map(|i| 1u64 << i).collect();
        weights.push(1);
        assert!(matches!(
            exhaustive_best_order(&part(&weights), false),
            Err(Error::TooManyPermutations { .. })
        ));
    }

    #[test]
    fn derandomized_meets_published_bounds() {
        let p = part(&[13, 13, 6]);
        let order = derandomized_order(&p);
        let n = order_conflicts(&p, &order).unwrap();
        // lambda (k+1)/3 - (k-2)(k+1)/6 with lambda 5, k 3 gives 6.
        assert!(n <= 6, "got {n}");

        for p in [part(&[5, 3]), part(&[19, 13]), part(&[100, 28])] {
            let order = derandomized_order(&p);
            let n = order_conflicts(&p, &order).unwrap();
            assert_eq!(n, complexity(&p), "{p}");
        }
        assert_eq!(derandomized_order(&part(&[16])), vec![1]);
    }

    #[test]
    fn greedy_picks_a_loser_adversarially() {
        let p = part(&[1, 1, 7, 7]);
        let adversarial = greedy_order_with(&p, GreedyTie::Adversarial);
        assert_eq!(adversarial, vec![1, 2, 3, 4]);
        let n_adversarial = order_conflicts(&p, &adversarial).unwrap();

        let best_case = greedy_order_with(&p, GreedyTie::BestCase);
        let n_best = order_conflicts(&p, &best_case).unwrap();
        assert!(n_adversarial > n_best, "{n_adversarial} vs {n_best}");

        let report = exhaustive_best_order(&p, false).unwrap();
        assert_eq!(n_best, report.best.conflicts);
    }

    #[test]
    fn greedy_is_optimal_for_two_parts() {
        for p in [part(&[5, 3]), part(&[100, 28]), part(&[1, 31])] {
            let order = greedy_order(&p);
            assert_eq!(
                order_conflicts(&p, &order).unwrap(),
                complexity(&p),
                "{p}"
            );
        }
        assert_eq!(greedy_order(&part(&[32])), vec![1]);
    }

    #[test]
    fn shift_produces_exact_segments_within_bound() {
        use crate::bit_matcher::realize_sequence;
        let p = part(&[13, 13, 6]);
        let optimal = realize_sequence(&bit_matcher_sequence(&p), p.width()).unwrap();
        let shifted = shift_to_segments(&optimal, &[1, 2, 3]).unwrap();
        let runs = shifted.leaf_runs();
        assert_eq!(runs, vec![(1, 13), (2, 13), (3, 6)]);
        let bound = shift_bound(5, 3);
        assert_eq!(bound, 8);
        assert!(shifted.conflict_count() <= bound);
        // Algorithm-2 on the same order can only do better or equal.
        assert!(order_conflicts(&p, &[1, 2, 3]).unwrap() <= shifted.conflict_count());
    }

    #[test]
    fn shift_rejects_suboptimal_input() {
        let p = part(&[13, 13, 6]);
        let lc = LeafColoring::identity(&p);
        let six_rules = crate::segmented::color_segments_full(&lc).unwrap();
        assert!(matches!(
            shift_to_segments(&six_rules, &[1, 2, 3]),
            Err(Error::NotOptimalInput {
                found: 6,
                minimum: 5
            })
        ));
    }

    #[test]
    fn shift_keeps_monochromatic_trie() {
        let c = TrieColoring::root_only(4, 1).unwrap();
        let shifted = shift_to_segments(&c, &[1]).unwrap();
        assert_eq!(shifted.conflict_count(), 1);
        assert_eq!(shifted.leaf_runs(), vec![(1, 16)]);
    }

    #[test]
    fn lower_bound_instance_matches_published_example() {
        let inst = lower_bound_instance(5, 9).unwrap();
        assert_eq!(inst.partition, part(&[85, 171, 64, 64, 128]));
        assert_eq!(inst.bad_order, vec![1, 3, 4, 5, 2]);
        assert_eq!(order_conflicts(&inst.partition, &inst.good_order).unwrap(), 8);
        let bad = order_conflicts(&inst.partition, &inst.bad_order).unwrap();
        let (num, den) = lower_bound_ratio(5, 9);
        assert!(bad * den >= num * 8, "{bad}/8 below {num}/{den}");
    }

    #[test]
    fn lower_bound_instance_small_case() {
        let inst = lower_bound_instance(3, 5).unwrap();
        assert_eq!(inst.partition, part(&[5, 11, 16]));
        let good = order_conflicts(&inst.partition, &inst.good_order).unwrap();
        let bad = order_conflicts(&inst.partition, &inst.bad_order).unwrap();
        let (num, den) = lower_bound_ratio(3, 5);
        assert_eq!((num, den), (5, 4));
        assert!(bad * den >= num * good);
        assert!(matches!(
            lower_bound_instance(2, 5),
            Err(Error::InvalidKw { .. })
        ));
        assert!(matches!(
            lower_bound_instance(6, 2),
            Err(Error::InvalidKw { .. })
        ));
    }

    #[test]
    fn every_order_respects_size_bound() {
        let p = part(&[13, 13, 6]);
        let report = exhaustive_best_order(&p, true).unwrap();
        let bound = conflict_size_bound(p.width(), p.k());
        for row in report.table.unwrap() {
            assert!(row.conflicts <= bound);
        }
    }
}
