use thiserror::Error;

/// Errors surfaced by partition validation, conversions and searches.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("weight at index {index} is not positive")]
    NonPositiveWeight { index: usize },

    #[error("weights sum to {sum}, which is not a power of two")]
    SumNotPowerOfTwo { sum: String },

    #[error("weights sum to {sum} but width {width} implies 2^{width}")]
    WidthMismatch { sum: String, width: u32 },

    #[error("transaction of size {size} exceeds sender weight {weight}")]
    InsufficientWeight { size: String, weight: String },

    #[error("value {value} is out of range for width {width}")]
    OutOfRange { value: String, width: u32 },

    #[error("transaction size {size} is not a power of two")]
    SizeNotPowerOfTwo { size: String },

    #[error("invalid transaction endpoints: sender {sender}, receiver {receiver}")]
    BadEndpoints { sender: u32, receiver: u32 },

    #[error("table has no match-all rule; some addresses are unmatched")]
    UnmatchedAddress,

    #[error("sequence cannot be realized as a prefix table: {reason}")]
    UnrealizableSequence { reason: String },

    #[error("sequence does not zero its source partition: {reason}")]
    SequenceDoesNotZero { reason: String },

    #[error("leaf coloring is not segmented: color {color} appears in more than one run")]
    NonSegmentedInput { color: u32 },

    #[error("width {width} exceeds the explicit-trie cap of {cap}")]
    WidthCapExceeded { width: u32, cap: u32 },

    #[error("{count} orderings exceed the search budget of {budget}")]
    TooManyPermutations { count: String, budget: u64 },

    #[error("coloring has {found} conflicts but the minimum is {minimum}")]
    NotOptimalInput { found: u64, minimum: u64 },

    #[error("coloring is not a minimum-conflict extension of its leaves")]
    NotMinimalColoring,

    #[error("sequence must contain exactly one unallocating transaction, found {count}")]
    MultipleZeroTargets { count: usize },

    #[error("invalid target ids: {reason}")]
    BadTargetIds { reason: String },

    #[error("invalid part count {k}")]
    BadK { k: u32 },

    #[error("invalid instance parameters k={k}, width={width}")]
    InvalidKw { k: u32, width: u32 },

    #[error("state space guard exceeded: {reason}")]
    StateSpaceTooLarge { reason: String },

    #[error("enumeration budget exceeded: {count} partitions > {budget}")]
    BudgetExceeded { count: String, budget: u64 },

    #[error("parse error: {reason}")]
    Parse { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
