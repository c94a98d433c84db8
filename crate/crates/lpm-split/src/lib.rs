//! Synthesis and analysis of minimal longest-prefix-match rule tables for
//! weighted traffic splitting.
//!
//! A traffic split assigns `p_i` of the `2^W` addresses to each target
//! `i`. This crate computes smallest prefix rule tables realizing a split
//! (via the Bit Matcher algorithm), smallest tables when each target must
//! own one consecutive address range, and the machinery connecting the
//! two: transaction sequences, trie colorings, transactions-graphs,
//! segment-order search, and constructions forcing fragmentation.

pub mod analysis;
pub mod bit_matcher;
pub mod error;
pub mod forced;
pub mod model;
pub mod oracle;
pub mod order;
pub mod segmented;
pub mod survey;

pub use error::{Error, Result};
