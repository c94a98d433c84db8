use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A demand vector: `weights[i]` addresses must reach target `i + 1`.
///
/// Weights are positive and sum to `2^width`. Target ids are 1-based;
/// target 0 is reserved for unallocated addresses and never owns weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    weights: Vec<BigUint>,
    width: u32,
}

impl Partition {
    /// Validates `weights` as a partition of `2^width`. When `width` is
    /// `None` it is inferred from the sum, which must be a power of two.
    pub fn new(weights: Vec<BigUint>, width: Option<u32>) -> Result<Self> {
        for (index, w) in weights.iter().enumerate() {
            if w.is_zero() {
                return Err(Error::NonPositiveWeight { index });
            }
        }
        let sum: BigUint = weights.iter().sum();
        if sum.count_ones() != 1 {
            return Err(Error::SumNotPowerOfTwo {
                sum: sum.to_string(),
            });
        }
        let inferred = sum.trailing_zeros().unwrap_or(0) as u32;
        let width = match width {
            Some(w) if w != inferred => {
                return Err(Error::WidthMismatch {
                    sum: sum.to_string(),
                    width: w,
                })
            }
            Some(w) => w,
            None => inferred,
        };
        Ok(Partition { weights, width })
    }

    pub fn from_u64s(weights: &[u64], width: Option<u32>) -> Result<Self> {
        Self::new(weights.iter().map(|&w| BigUint::from(w)).collect(), width)
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    /// Weight of 1-based target `id`.
    pub fn weight(&self, id: u32) -> &BigUint {
        &self.weights[(id - 1) as usize]
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of targets.
    pub fn k(&self) -> u32 {
        self.weights.len() as u32
    }

    pub fn total(&self) -> BigUint {
        BigUint::one() << self.width
    }

    /// Weights as `u64`, if they all fit.
    pub fn weights_u64(&self) -> Option<Vec<u64>> {
        self.weights.iter().map(|w| u64::try_from(w).ok()).collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses the comma-separated decimal form, e.g. `13,13,6`.
    fn from_str(s: &str) -> Result<Self> {
        let weights = parse_weights(s)?;
        Partition::new(weights, None)
    }
}

/// Parses a comma-separated list of decimal weights without validating sums.
pub fn parse_weights(s: &str) -> Result<Vec<BigUint>> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<BigUint>().map_err(|_| Error::Parse {
                reason: format!("invalid weight `{part}`"),
            })
        })
        .collect()
}

/// Compares `a` and `b` by their bit-reversed value at word size `width`.
///
/// Equivalently: at the lowest bit position where they differ, the larger
/// value is the one with that bit set.
pub fn bitlex_less(a: u64, b: u64, width: u32) -> Result<bool> {
    for (name, v) in [("a", a), ("b", b)] {
        if width < 64 && v >> width != 0 {
            let _ = name;
            return Err(Error::OutOfRange {
                value: v.to_string(),
                width,
            });
        }
    }
    Ok(cmp_bitlex(&BigUint::from(a), &BigUint::from(b)) == Ordering::Less)
}

/// Bit-lexicographic comparison on arbitrary-precision weights.
pub fn cmp_bitlex(a: &BigUint, b: &BigUint) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let diff = a ^ b;
    let t = diff.trailing_zeros().expect("nonzero xor");
    if a.bit(t) {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Applies `sender -(size)-> receiver` to a raw weight vector.
/// Receiver 0 discards the moved weight.
pub fn apply_move(
    weights: &mut [BigUint],
    sender: u32,
    receiver: u32,
    size: &BigUint,
) -> Result<()> {
    let si = (sender - 1) as usize;
    if si >= weights.len() || (receiver != 0 && (receiver as usize) > weights.len()) {
        return Err(Error::BadEndpoints { sender, receiver });
    }
    if &weights[si] < size {
        return Err(Error::InsufficientWeight {
            size: size.to_string(),
            weight: weights[si].to_string(),
        });
    }
    weights[si] -= size;
    if receiver != 0 {
        weights[(receiver - 1) as usize] += size;
    }
    Ok(())
}
