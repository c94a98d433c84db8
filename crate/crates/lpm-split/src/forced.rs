//! Adversarial partitions whose every shortest zeroing sequence must
//! contain prescribed transactions.
//!
//! Scaling a partition by eight and nudging two parts by one unit pins a
//! unit transaction between them into every shortest sequence; iterating
//! the construction pins a whole set of pairs, three bit levels per
//! pair. With all pairs pinned the transactions-graph of every shortest
//! sequence is a clique, which forces fragmentation on any minimal
//! table.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::model::Partition;

fn validate_pair(k: u32, sender: u32, receiver: u32) -> Result<()> {
    if sender == 0 || receiver == 0 || sender > k || receiver > k || sender == receiver {
        return Err(Error::BadTargetIds {
            reason: format!("pair ({sender}, {receiver}) for {k} targets"),
        });
    }
    Ok(())
}

/// Scales `p` so that every shortest sequence inducing the result
/// contains `sender -(1)-> receiver`: the sender's part becomes
/// `8 p + 1`, the receiver's `8 p - 1`, everything else `8 p`.
pub fn force_transaction(p: &Partition, sender: u32, receiver: u32) -> Result<Partition> {
    validate_pair(p.k(), sender, receiver)?;
    let one = BigUint::from(1u32);
    let weights = p
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let id = i as u32 + 1;
            let scaled = w << 3;
            if id == sender {
                scaled + &one
            } else if id == receiver {
                scaled - &one
            } else {
                scaled
            }
        })
        .collect();
    Partition::new(weights, Some(p.width() + 3))
}

/// Pins the transactions `pairs[m] -(2^{3m})-> ...` into every shortest
/// sequence: the last pair is applied innermost, so the first pair owns
/// the unit transaction. Applying the pinned transactions to the result
/// leaves `p0` scaled by `8^pairs.len()`.
pub fn force_sequence(p0: &Partition, pairs: &[(u32, u32)]) -> Result<Partition> {
    let mut current = p0.clone();
    for &(sender, receiver) in pairs.iter().rev() {
        current = force_transaction(&current, sender, receiver)?;
    }
    Ok(current)
}

/// A partition whose every shortest sequence has a clique
/// transactions-graph: every unordered target pair is pinned, in
/// lexicographic order.
pub fn clique_partition(k: u32, p0: &Partition) -> Result<Partition> {
    if k < 2 || p0.k() != k {
        return Err(Error::BadK { k });
    }
    let pairs: Vec<(u32, u32)> = (2..=k)
        .flat_map(|i| (1..i).map(move |j| (i, j)))
        .collect();
    force_sequence(p0, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bit_matcher::complexity;
    use crate::model::{Transaction, TransactionSequence};
    use crate::oracle::enumerate_shortest_sequences;

    fn part(w: &[u64]) -> Partition {
        Partition::from_u64s(w, None).unwrap()
    }

    #[test]
    fn forces_single_transactions() {
        assert_eq!(
            force_transaction(&part(&[1, 1, 2]), 2, 1).unwrap(),
            part(&[7, 9, 16])
        );
        assert_eq!(
            force_transaction(&part(&[5, 3]), 2, 1).unwrap(),
            part(&[39, 25])
        );
        assert!(matches!(
            force_transaction(&part(&[1, 1, 2]), 2, 2),
            Err(Error::BadTargetIds { .. })
        ));
        assert!(matches!(
            force_transaction(&part(&[1, 1, 2]), 4, 1),
            Err(Error::BadTargetIds { .. })
        ));
    }

    #[test]
    fn forced_transaction_survives_enumeration() {
        let q = force_transaction(&part(&[1, 1, 2]), 2, 1).unwrap();
        let forced = Transaction::from_level(2, 0, 1).unwrap();
        let seqs = enumerate_shortest_sequences(&q).unwrap();
        assert!(!seqs.is_empty());
        assert!(seqs.iter().all(|s| s.transactions().contains(&forced)));
    }

    #[test]
    fn forces_whole_sequences() {
        assert_eq!(
            force_sequence(&part(&[1, 1, 2]), &[]).unwrap(),
            part(&[1, 1, 2])
        );
        assert_eq!(
            force_sequence(&part(&[1, 1, 2]), &[(2, 1)]).unwrap(),
            part(&[7, 9, 16])
        );
        let forced = force_sequence(&part(&[1, 1, 2]), &[(2, 1), (3, 2)]).unwrap();
        assert_eq!(forced, part(&[63, 57, 136]));

        // Applying the pinned transactions leaves the base scaled by 8^2.
        let mut weights = forced.weights().to_vec();
        let s: TransactionSequence = "2-(1)->1\n3-(8)->2".parse().unwrap();
        s.apply_to(&mut weights).unwrap();
        assert_eq!(
            weights,
            [64u64, 64, 128].map(BigUint::from)
        );
    }

    #[test]
    fn clique_partition_golden() {
        let p = clique_partition(3, &part(&[1, 1, 2])).unwrap();
        assert_eq!(p, part(&[503, 449, 1096]));
        assert_eq!(p.width(), 11);
        assert_eq!(complexity(&p), 3 + complexity(&part(&[1, 1, 2])));

        assert_eq!(
            clique_partition(2, &part(&[1, 1])).unwrap(),
            part(&[7, 9])
        );
        assert!(matches!(
            clique_partition(3, &part(&[1, 1])),
            Err(Error::BadK { k: 3 })
        ));
    }

    #[test]
    fn constructions_stay_positive_for_all_small_k() {
        for k in 2..=8u32 {
            // k - 1 unit parts plus whatever fills the next power of two.
            let mut weights = vec![1u64; (k - 1) as usize];
            weights.push(u64::from(k.next_power_of_two()) - u64::from(k - 1));
            let base = part(&weights);
            let clique = clique_partition(k, &base).unwrap();
            assert_eq!(clique.k(), k);
            assert_eq!(
                clique.width(),
                base.width() + 3 * k * (k - 1) / 2,
                "width grows three levels per pair"
            );
        }
    }
}
