//! Domain types and lossless conversions among rule tables, trie
//! colorings, transaction sequences, and the partitions they induce.

mod coloring;
mod leaf;
mod partition;
mod prefix;
mod table;
mod transaction;

pub use coloring::{Color, Conflict, TrieColoring};
pub use leaf::{LeafColoring, EXPLICIT_TRIE_CAP};
pub use partition::{apply_move, bitlex_less, cmp_bitlex, parse_weights, Partition};
pub use prefix::Prefix;
pub use table::{Rule, TcamTable};
pub use transaction::{Transaction, TransactionSequence};
