use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::coloring::Color;
use crate::model::partition::Partition;

/// Width cap for operations that materialize one cell per leaf.
pub const EXPLICIT_TRIE_CAP: u32 = 22;

/// A coloring of the `2^width` leaves, run-length encoded left to right.
///
/// Run-length encoding keeps segmented instances with very large widths
/// representable; only explicit-trie operations require small widths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafColoring {
    width: u32,
    runs: Vec<(Color, BigUint)>,
}

impl LeafColoring {
    /// Builds from runs; adjacent runs of equal color are merged. Lengths
    /// must be positive and sum to `2^width`.
    pub fn new(width: u32, runs: Vec<(Color, BigUint)>) -> Result<Self> {
        let mut merged: Vec<(Color, BigUint)> = Vec::with_capacity(runs.len());
        for (color, len) in runs {
            if color == 0 {
                return Err(Error::BadTargetIds {
                    reason: "leaf color 0".into(),
                });
            }
            if len.is_zero() {
                return Err(Error::NonPositiveWeight {
                    index: merged.len(),
                });
            }
            match merged.last_mut() {
                Some((c, l)) if *c == color => *l += len,
                _ => merged.push((color, len)),
            }
        }
        let sum: BigUint = merged.iter().map(|(_, l)| l).sum();
        if sum != BigUint::one() << width {
            return Err(Error::WidthMismatch {
                sum: sum.to_string(),
                width,
            });
        }
        Ok(LeafColoring {
            width,
            runs: merged,
        })
    }

    /// The segments of `p` laid out in `order`: position `t` of the address
    /// space gets target `order[t]` with its full weight.
    pub fn from_order(p: &Partition, order: &[u32]) -> Result<Self> {
        let k = p.k();
        let mut seen = BTreeSet::new();
        if order.len() != k as usize {
            return Err(Error::BadTargetIds {
                reason: format!("order has {} entries for {k} targets", order.len()),
            });
        }
        for &id in order {
            if id == 0 || id > k || !seen.insert(id) {
                return Err(Error::BadTargetIds {
                    reason: format!("order entry {id}"),
                });
            }
        }
        let runs = order
            .iter()
            .map(|&id| (id, p.weight(id).clone()))
            .collect();
        LeafColoring::new(p.width(), runs)
    }

    pub fn identity(p: &Partition) -> Self {
        let order: Vec<u32> = (1..=p.k()).collect();
        Self::from_order(p, &order).expect("identity order is valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn runs(&self) -> &[(Color, BigUint)] {
        &self.runs
    }

    /// Checks each color appears in exactly one run.
    pub fn is_segmented(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.runs.iter().all(|(c, _)| seen.insert(*c))
    }

    /// The first color whose segments are split, if any.
    pub fn split_color(&self) -> Option<Color> {
        let mut seen = BTreeSet::new();
        self.runs
            .iter()
            .find(|(c, _)| !seen.insert(*c))
            .map(|(c, _)| *c)
    }

    pub fn distinct_colors(&self) -> usize {
        self.runs
            .iter()
            .map(|(c, _)| *c)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// One cell per leaf. Guarded by the explicit-trie width cap.
    pub fn to_cells(&self) -> Result<Vec<Color>> {
        if self.width > EXPLICIT_TRIE_CAP {
            return Err(Error::WidthCapExceeded {
                width: self.width,
                cap: EXPLICIT_TRIE_CAP,
            });
        }
        let mut cells = Vec::with_capacity(1usize << self.width);
        for (color, len) in &self.runs {
            let len = u64::try_from(len).expect("length fits under width cap");
            cells.extend(std::iter::repeat_n(*color, len as usize));
        }
        Ok(cells)
    }

    pub fn from_cells(width: u32, cells: &[Color]) -> Result<Self> {
        let runs = cells
            .iter()
            .map(|&c| (c, BigUint::one()))
            .collect::<Vec<_>>();
        LeafColoring::new(width, runs)
    }
}
