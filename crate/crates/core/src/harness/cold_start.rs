use std::collections::{BTreeSet, HashMap};

use crate::corpus::{InteractionLog, SplitPair};
use crate::error::{Error, Result};

/// Restricts both sides of `split` to users with at most `max_interactions`
/// train items.
pub fn cold_start_filter(split: &SplitPair, max_interactions: usize) -> Result<SplitPair> {
    let keep = cold_start_users(&split.train, max_interactions);
    if keep.is_empty() {
        return Err(Error::NoQualifyingUsers);
    }
    Ok(SplitPair {
        train: split.train.restrict_users(&keep),
        test: split.test.restrict_users(&keep),
        seed: split.seed,
        ratio: split.ratio,
    })
}

/// Cuts every train profile to its last `max_interactions` items in log
/// order. Test sides are untouched.
pub fn truncate_histories(split: &SplitPair, max_interactions: usize) -> Result<SplitPair> {
    if max_interactions == 0 {
        return Err(Error::NoQualifyingUsers);
    }
    let sizes: HashMap<&str, usize> = split.train.user_counts();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let train = split.train.filter(|r| {
        let pos = seen.entry(r.user.clone()).or_insert(0);
        *pos += 1;
        *pos + max_interactions > sizes[r.user.as_str()]
    });
    Ok(SplitPair {
        train,
        test: split.test.clone(),
        seed: split.seed,
        ratio: split.ratio,
    })
}

/// Users kept by [`cold_start_filter`], without building the split.
pub fn cold_start_users(train: &InteractionLog, max_interactions: usize) -> BTreeSet<String> {
    train
        .profiles()
        .into_iter()
        .filter(|(_, items)| items.len() <= max_interactions)
        .map(|(u, _)| u.to_string())
        .collect()
}
