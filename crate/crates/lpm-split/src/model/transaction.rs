use num_bigint::BigUint;
use num_traits::One;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::partition::{apply_move, Partition};

/// A move of `2^level` addresses from `sender` to `receiver`.
///
/// Deleting one prefix rule remaps a power-of-two block of addresses to the
/// rule below it; a transaction is the algebraic view of that remapping.
/// Receiver 0 means the addresses become unallocated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transaction {
    level: u32,
    sender: u32,
    receiver: u32,
}

impl Transaction {
    pub fn new(sender: u32, size: &BigUint, receiver: u32) -> Result<Self> {
        if size.count_ones() != 1 {
            return Err(Error::SizeNotPowerOfTwo {
                size: size.to_string(),
            });
        }
        let level = size.trailing_zeros().unwrap_or(0) as u32;
        Self::from_level(sender, level, receiver)
    }

    pub fn from_level(sender: u32, level: u32, receiver: u32) -> Result<Self> {
        if sender == 0 || sender == receiver {
            return Err(Error::BadEndpoints { sender, receiver });
        }
        Ok(Transaction {
            level,
            sender,
            receiver,
        })
    }

    pub fn sender(&self) -> u32 {
        self.sender
    }

    pub fn receiver(&self) -> u32 {
        self.receiver
    }

    /// log2 of the transaction size.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn size(&self) -> BigUint {
        BigUint::one() << self.level
    }

    pub fn unallocates(&self) -> bool {
        self.receiver == 0
    }
}

impl fmt::Display for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -({})-> {}", self.sender, self.size(), self.receiver)
    }
}

impl FromStr for Transaction {
    type Err = Error;

    /// Parses `i -(m)-> j`, tolerating missing spaces around the arrow.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            reason: format!("invalid transaction `{s}`"),
        };
        let (lhs, rest) = s.split_once("-(").ok_or_else(bad)?;
        let (size, rhs) = rest.split_once(")->").ok_or_else(bad)?;
        let sender: u32 = lhs.trim().parse().map_err(|_| bad())?;
        let receiver: u32 = rhs.trim().parse().map_err(|_| bad())?;
        let size: BigUint = size.trim().parse().map_err(|_| bad())?;
        Transaction::new(sender, &size, receiver)
    }
}

/// An ordered list of transactions, usually one that zeroes a partition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransactionSequence {
    transactions: Vec<Transaction>,
}

impl TransactionSequence {
    pub fn new(transactions: Vec<Transaction>) -> Self {
        TransactionSequence { transactions }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transaction> {
        self.transactions.iter()
    }

    pub fn push(&mut self, t: Transaction) {
        self.transactions.push(t);
    }

    /// Applies the sequence to `weights` in order, failing if any sender
    /// lacks the required weight.
    pub fn apply_to(&self, weights: &mut [BigUint]) -> Result<()> {
        for t in &self.transactions {
            apply_move(weights, t.sender, t.receiver, &t.size())?;
        }
        Ok(())
    }

    /// True if applying the sequence to `p` reaches the all-zero vector
    /// without any intermediate shortfall.
    pub fn zeroes(&self, p: &Partition) -> bool {
        let mut w = p.weights().to_vec();
        if self.apply_to(&mut w).is_err() {
            return false;
        }
        w.iter().all(num_traits::Zero::is_zero)
    }

    /// The partition this sequence zeroes: each target's net outflow.
    /// Fails if any net is non-positive or the result is not a valid partition.
    pub fn source_partition(&self) -> Result<Partition> {
        let k = self
            .transactions
            .iter()
            .map(|t| t.sender.max(t.receiver))
            .max()
            .unwrap_or(0) as usize;
        let mut outgoing = vec![BigUint::default(); k];
        let mut incoming = vec![BigUint::default(); k];
        for t in &self.transactions {
            outgoing[(t.sender - 1) as usize] += t.size();
            if t.receiver != 0 {
                incoming[(t.receiver - 1) as usize] += t.size();
            }
        }
        let weights: Vec<BigUint> = outgoing
            .into_iter()
            .zip(incoming)
            .enumerate()
            .map(|(i, (out, inn))| {
                if out > inn {
                    Ok(out - inn)
                } else {
                    Err(Error::SequenceDoesNotZero {
                        reason: format!("target {} has non-positive net outflow", i + 1),
                    })
                }
            })
            .collect::<Result<_>>()?;
        Partition::new(weights, None)
    }

    /// Transactions as a sorted multiset key.
    pub fn multiset(&self) -> Vec<Transaction> {
        let mut m = self.transactions.clone();
        m.sort();
        m
    }
}

impl fmt::Display for TransactionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.transactions.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for TransactionSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let transactions = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(Transaction::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(TransactionSequence::new(transactions))
    }
}

impl FromIterator<Transaction> for TransactionSequence {
    fn from_iter<I: IntoIterator<Item = Transaction>>(iter: I) -> Self {
        TransactionSequence::new(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(sender: u32, size: u64, receiver: u32) -> Transaction {
        Transaction::new(sender, &BigUint::from(size), receiver).unwrap()
    }

    #[test]
    fn rejects_invalid_transactions() {
        assert!(matches!(
            Transaction::new(1, &BigUint::from(3u32), 2),
            Err(Error::SizeNotPowerOfTwo { .. })
        ));
        assert!(matches!(
            Transaction::new(2, &BigUint::from(4u32), 2),
            Err(Error::BadEndpoints { .. })
        ));
        assert!(matches!(
            Transaction::new(0, &BigUint::from(4u32), 1),
            Err(Error::BadEndpoints { .. })
        ));
    }

    #[test]
    fn round_trips_text() {
        let t = tx(1, 16, 2);
        assert_eq!(t.to_string(), "1 -(16)-> 2");
        assert_eq!("1 -(16)-> 2".parse::<Transaction>().unwrap(), t);
        assert_eq!("1-(16)->2".parse::<Transaction>().unwrap(), t);

        let s = TransactionSequence::new(vec![tx(1, 1, 2), tx(2, 32, 0)]);
        let text = s.to_string();
        assert_eq!(text.parse::<TransactionSequence>().unwrap(), s);
    }

    #[test]
    fn derives_source_partition() {
        let s = TransactionSequence::new(vec![
            tx(1, 1, 2),
            tx(3, 2, 2),
            tx(3, 4, 1),
            tx(1, 16, 2),
            tx(2, 32, 0),
        ]);
        let p = s.source_partition().unwrap();
        assert_eq!(p, Partition::from_u64s(&[13, 13, 6], None).unwrap());
        assert!(s.zeroes(&p));
    }
}
