use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{Interaction, InteractionLog, SplitPair};
use crate::error::{Error, Result};
use crate::rng;

/// Number of held-out interactions for a profile of `n` items:
/// `max(1, round(ratio * n))`, capped so at least one item stays in train.
pub fn test_size(n: usize, ratio: f64) -> usize {
    let raw = (ratio * n as f64).round() as usize;
    raw.max(1).min(n.saturating_sub(1))
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    Ok(())
}

/// Per-user random holdout. Each user's items are shuffled with a stream
/// keyed by `(seed, user)` and the first `test_size` go to test. Both sides
/// keep the source log order.
pub fn split_holdout(log: &InteractionLog, ratio: f64, seed: u64) -> Result<SplitPair> {
    check_ratio(ratio)?;
    let held_out = holdout_pairs(log, ratio, seed, false)?;
    Ok(partition(log, &held_out, seed, ratio))
}

/// Carves a validation split out of a training log for tuning. Users with a
/// single interaction stay entirely in train.
pub fn carve_validation(train: &InteractionLog, ratio: f64, seed: u64) -> Result<SplitPair> {
    check_ratio(ratio)?;
    let held_out = holdout_pairs(train, ratio, seed, true)?;
    Ok(partition(train, &held_out, seed, ratio))
}

fn holdout_pairs(log: &InteractionLog, ratio: f64, seed: u64, lenient: bool) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for (user, items) in log.profiles() {
        if items.len() < 2 {
            if lenient {
                continue;
            }
            return Err(Error::SingleInteractionUser(user.to_string()));
        }
        let mut sorted: Vec<&str> = items.clone();
        sorted.sort_unstable();
        let mut rng = rng::stream(seed, user);
        sorted.shuffle(&mut rng);
        let n_test = test_size(sorted.len(), ratio);
        out.insert(
            user.to_string(),
            sorted[..n_test].iter().map(|s| s.to_string()).collect(),
        );
    }
    Ok(out)
}

fn partition(log: &InteractionLog, held_out: &BTreeMap<String, Vec<String>>, seed: u64, ratio: f64) -> SplitPair {
    let (mut train, mut test): (Vec<Interaction>, Vec<Interaction>) = (Vec::new(), Vec::new());
    for r in log.records() {
        let is_test = held_out
            .get(&r.user)
            .is_some_and(|items| items.contains(&r.item));
        if is_test {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    SplitPair {
        train: InteractionLog::from_unique(train),
        test: InteractionLog::from_unique(test),
        seed,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn user_log(n: usize) -> InteractionLog {
        InteractionLog::from_records((0..n).map(|i| Interaction::new("u", format!("i{i}"), 1.0)))
    }

    #[test]
    fn ten_items_split_eight_two() {
        let s = split_holdout(&user_log(10), 0.2, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
    }

    #[test]
    fn seven_items_round_down_to_one() {
        assert_eq!(test_size(7, 0.2), 1);
        let s = split_holdout(&user_log(7), 0.2, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (6, 1));
    }

    #[test]
    fn same_seed_same_split() {
        let log = user_log(30);
        assert_eq!(
            split_holdout(&log, 0.2, 3).unwrap(),
            split_holdout(&log, 0.2, 3).unwrap()
        );
        assert_ne!(
            split_holdout(&log, 0.2, 3).unwrap().test,
            split_holdout(&log, 0.2, 4).unwrap().test
        );
    }

    #[test]
    fn singleton_user_is_rejected() {
        let log = InteractionLog::from_records(vec![
            Interaction::new("u1", "i1", 1.0),
            Interaction::new("u1", "i2", 1.0),
            Interaction::new("u2", "i1", 1.0),
        ]);
        assert!(matches!(
            split_holdout(&log, 0.2, 0),
            Err(Error::SingleInteractionUser(u)) if u == "u2"
        ));
        let carved = carve_validation(&log, 0.2, 0).unwrap();
        assert_eq!(carved.test.users().into_iter().collect::<Vec<_>>(), ["u1"]);
    }

    #[test]
    fn ratio_must_be_open_unit_interval() {
        assert!(split_holdout(&user_log(4), 0.0, 0).is_err());
        assert!(split_holdout(&user_log(4), 1.0, 0).is_err());
    }

    #[test]
    fn two_item_profile_keeps_one_in_train() {
        assert_eq!(test_size(2, 0.9), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn split_partitions_the_source(
            edges in proptest::collection::vec((0usize..15, 0usize..25), 1..120),
            seed in any::<u64>(),
        ) {
            let raw = InteractionLog::from_records(
                edges.iter().map(|(u, i)| Interaction::new(format!("u{u}"), format!("i{i}"), 1.0)),
            );
            let counts = raw.user_counts();
            let log = raw.filter(|r| counts[r.user.as_str()] >= 2);
            prop_assume!(!log.is_empty());
            let split = split_holdout(&log, 0.2, seed).unwrap();
            prop_assert!(split.validate(&log).is_ok());
        }
    }
}
