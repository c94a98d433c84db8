//! Minimum-conflict trie colorings for a fixed leaf coloring.
//!
//! When the leaves are colored in consecutive segments, a single
//! bottom-up pass over 4-cousin windows colors every inner node with the
//! fewest possible conflicts. The general case (arbitrary leaf colorings)
//! is handled by the ORTC algorithm of Draves et al.: candidate color
//! sets flow up (intersection when siblings agree, union otherwise) and
//! the actual colors flow back down.

use num_bigint::BigUint;
use num_traits::Zero;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Color, LeafColoring, Partition, Prefix, TrieColoring};

/// A conflict located by depth only, as produced by the run-length pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConflictRecord {
    pub depth: u32,
    pub color: Color,
    pub parent_color: Option<Color>,
}

/// Result of the run-length pass: the conflict count and multiset, plus
/// the widest per-level run state seen (segmented inputs stay within
/// `2k - 1` runs per level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastColoring {
    pub conflicts: u64,
    pub records: Vec<ConflictRecord>,
    pub max_runs: usize,
}

fn require_segmented(lc: &LeafColoring) -> Result<()> {
    match lc.split_color() {
        Some(color) => Err(Error::NonSegmentedInput { color }),
        None => Ok(()),
    }
}

/// Minimum-conflict extension of a segmented leaf coloring, on an
/// explicit trie. Each level is colored from 4-cousin windows: when the
/// middle cousins agree both parents take their color, otherwise each
/// parent takes its outer child; the root takes its right child.
pub fn color_segments_full(lc: &LeafColoring) -> Result<TrieColoring> {
    require_segmented(lc)?;
    let width = lc.width();
    let mut levels: Vec<Vec<Color>> = vec![lc.to_cells()?];
    while levels.last().expect("nonempty").len() > 2 {
        let child = levels.last().expect("nonempty");
        let parent = child
            .chunks(4)
            .flat_map(|w| {
                let (a, b, c, d) = (w[0], w[1], w[2], w[3]);
                if b == c {
                    [b, b]
                } else {
                    [a, d]
                }
            })
            .collect();
        levels.push(parent);
    }
    let root = *levels.last().expect("nonempty").last().expect("right child");
    if width > 0 {
        levels.push(vec![root]);
    }
    levels.reverse();

    let mut marks: BTreeMap<Prefix, Color> = BTreeMap::new();
    marks.insert(Prefix::ROOT, root);
    for (depth, level) in levels.iter().enumerate().skip(1) {
        for (pos, &color) in level.iter().enumerate() {
            if color != levels[depth - 1][pos / 2] {
                marks.insert(Prefix::new(pos as u64, depth as u32), color);
            }
        }
    }
    TrieColoring::new(width, marks)
}

/// One level of the run-length pass: child runs to parent runs plus the
/// conflicts the level produced. Only windows containing a run boundary
/// are expanded; monochromatic stretches are bulk-halved.
fn advance_level(
    runs: &[(Color, BigUint)],
    child_depth: u32,
    records: &mut Vec<ConflictRecord>,
) -> Vec<(Color, BigUint)> {
    let mut parent: Vec<(Color, BigUint)> = Vec::new();
    let mut window = [0u32; 4];
    let mut filled = 0usize;
    for (color, len) in runs {
        let mut rem = len.clone();
        while !rem.is_zero() {
            if filled == 0 {
                let windows: BigUint = &rem >> 2;
                if !windows.is_zero() {
                    push_run(&mut parent, *color, &windows << 1);
                    rem -= windows << 2;
                    continue;
                }
            }
            let gap = (4 - filled) as u64;
            let take = if rem > BigUint::from(gap) {
                gap
            } else {
                u64::try_from(&rem).expect("small remainder")
            };
            for _ in 0..take {
                window[filled] = *color;
                filled += 1;
            }
            rem -= take;
            if filled == 4 {
                flush_window(&window, child_depth, &mut parent, records);
                filled = 0;
            }
        }
    }
    debug_assert_eq!(filled, 0, "level size is a multiple of four");
    parent
}

fn push_run(runs: &mut Vec<(Color, BigUint)>, color: Color, count: BigUint) {
    if count.is_zero() {
        return;
    }
    match runs.last_mut() {
        Some((c, l)) if *c == color => *l += count,
        _ => runs.push((color, count)),
    }
}

fn flush_window(
    w: &[u32; 4],
    child_depth: u32,
    parent: &mut Vec<(Color, BigUint)>,
    records: &mut Vec<ConflictRecord>,
) {
    let (a, b, c, d) = (w[0], w[1], w[2], w[3]);
    let mut conflict = |color: Color, parent_color: Color| {
        if color != parent_color {
            records.push(ConflictRecord {
                depth: child_depth,
                color,
                parent_color: Some(parent_color),
            });
        }
    };
    if b == c {
        conflict(a, b);
        conflict(d, b);
        push_run(parent, b, BigUint::from(2u32));
    } else {
        conflict(b, a);
        conflict(c, d);
        push_run(parent, a, BigUint::from(1u32));
        push_run(parent, d, BigUint::from(1u32));
    }
}

/// Conflict count and multiset for a segmented leaf coloring, tracking
/// only run boundaries per level. Works at any width; time is linear in
/// width times segment count.
pub fn color_segments_fast(lc: &LeafColoring) -> Result<FastColoring> {
    require_segmented(lc)?;
    let mut records = Vec::new();
    let mut runs: Vec<(Color, BigUint)> = lc.runs().to_vec();
    let mut max_runs = runs.len();
    let mut depth = lc.width();
    while depth >= 2 {
        runs = advance_level(&runs, depth, &mut records);
        max_runs = max_runs.max(runs.len());
        depth -= 1;
    }
    let root = runs.last().expect("nonempty").0;
    if depth == 1 {
        let left = runs.first().expect("nonempty").0;
        if left != root {
            records.push(ConflictRecord {
                depth: 1,
                color: left,
                parent_color: Some(root),
            });
        }
    }
    records.push(ConflictRecord {
        depth: 0,
        color: root,
        parent_color: None,
    });
    records.sort();
    Ok(FastColoring {
        conflicts: records.len() as u64,
        records,
        max_runs,
    })
}

/// Conflicts of Algorithm-2 coloring for the segments of `p` laid out in
/// `order`.
pub fn order_conflicts(p: &Partition, order: &[u32]) -> Result<u64> {
    let lc = LeafColoring::from_order(p, order)?;
    Ok(color_segments_fast(&lc)?.conflicts)
}

/// Worst-case conflicts of the segmented coloring:
/// `(width - floor(lg k) + 1)(k - 1) + 1`.
pub fn conflict_size_bound(width: u32, k: u32) -> u64 {
    let floor_lg_k = u64::from(31 - k.leading_zeros());
    (u64::from(width) - floor_lg_k + 1) * u64::from(k - 1) + 1
}

/// Minimum-conflict extension of an arbitrary leaf coloring (ORTC).
/// With `segmented` set the input must color each target contiguously.
///
/// Tie-breaking is deterministic: on the way down a node keeps its
/// parent's color when the candidate set allows it, otherwise it takes
/// the smallest candidate color id.
pub fn ortc(lc: &LeafColoring, segmented: bool) -> Result<TrieColoring> {
    const MAX_COLORS: usize = 128;
    if segmented {
        require_segmented(lc)?;
    }
    let cells = lc.to_cells()?;
    let width = lc.width();
    let mut palette: Vec<Color> = cells.clone();
    palette.sort_unstable();
    palette.dedup();
    if palette.len() > MAX_COLORS {
        return Err(Error::StateSpaceTooLarge {
            reason: format!("ortc supports at most {MAX_COLORS} colors"),
        });
    }
    let bit_of = |color: Color| -> u128 { 1u128 << palette.binary_search(&color).unwrap() };

    // Bottom-up: candidate color sets per node, leaves first.
    let mut sets: Vec<Vec<u128>> = vec![cells.iter().map(|&c| bit_of(c)).collect()];
    while sets.last().expect("nonempty").len() > 1 {
        let child = sets.last().expect("nonempty");
        let parent = child
            .chunks(2)
            .map(|pair| {
                if pair[0] & pair[1] != 0 {
                    pair[0] & pair[1]
                } else {
                    pair[0] | pair[1]
                }
            })
            .collect();
        sets.push(parent);
    }
    sets.reverse(); // sets[depth][pos]

    let smallest = |set: u128| -> Color { palette[set.trailing_zeros() as usize] };
    let mut colors: Vec<Vec<Color>> = Vec::with_capacity(sets.len());
    colors.push(vec![smallest(sets[0][0])]);
    for depth in 1..sets.len() {
        let level = sets[depth]
            .iter()
            .enumerate()
            .map(|(pos, &set)| {
                let parent = colors[depth - 1][pos / 2];
                if set & bit_of(parent) != 0 {
                    parent
                } else {
                    smallest(set)
                }
            })
            .collect();
        colors.push(level);
    }

    let mut marks: BTreeMap<Prefix, Color> = BTreeMap::new();
    marks.insert(Prefix::ROOT, colors[0][0]);
    for (depth, level) in colors.iter().enumerate().skip(1) {
        for (pos, &color) in level.iter().enumerate() {
            if color != colors[depth - 1][pos / 2] {
                marks.insert(Prefix::new(pos as u64, depth as u32), color);
            }
        }
    }
    TrieColoring::new(width, marks)
}
