//! Interaction logs, item catalogs, k-core filtering and train/test splits.

mod catalog;
mod io;
mod kcore;
mod parse;
mod split;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{parse_attributes, parse_item_names, parse_movielens_items, CatalogEntry, ItemCatalog};
pub(crate) use io::write_file;
pub use io::{file_sha256, read_split, write_log_tsv, write_split, SplitManifest};
pub use kcore::apply_kcore;
pub use parse::{parse_interactions, DatasetFormat};
pub use split::{carve_validation, split_holdout, test_size};

/// One user-item event. `weight` is non-negative; recommenders treat any
/// positive weight as a binary interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub weight: f64,
}

impl Interaction {
    pub fn new(user: impl Into<String>, item: impl Into<String>, weight: f64) -> Self {
        Self {
            user: user.into(),
            item: item.into(),
            weight,
        }
    }
}

/// A deduplicated list of interactions.
///
/// Duplicate `(user, item)` pairs are merged on construction, keeping the
/// maximum weight at the position of the first occurrence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionLog {
    records: Vec<Interaction>,
}

impl InteractionLog {
    pub fn from_records(records: impl IntoIterator<Item = Interaction>) -> Self {
        let mut position: HashMap<(String, String), usize> = HashMap::new();
        let mut merged: Vec<Interaction> = Vec::new();
        for rec in records {
            match position.get(&(rec.user.clone(), rec.item.clone())) {
                Some(&idx) => {
                    if rec.weight > merged[idx].weight {
                        merged[idx].weight = rec.weight;
                    }
                }
                None => {
                    position.insert((rec.user.clone(), rec.item.clone()), merged.len());
                    merged.push(rec);
                }
            }
        }
        Self { records: merged }
    }

    /// Builds a log from records already known to be free of duplicates.
    pub(crate) fn from_unique(records: Vec<Interaction>) -> Self {
        debug_assert!({
            let mut seen = std::collections::HashSet::new();
            records.iter().all(|r| seen.insert((r.user.as_str(), r.item.as_str())))
        });
        Self { records }
    }

    pub fn records(&self) -> &[Interaction] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.user.as_str()).collect()
    }

    pub fn items(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.item.as_str()).collect()
    }

    /// Items of each user, in log order.
    pub fn profiles(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.user.as_str()).or_default().push(r.item.as_str());
        }
        out
    }

    pub fn user_counts(&self) -> HashMap<&str, usize> {
        let mut out = HashMap::new();
        for r in &self.records {
            *out.entry(r.user.as_str()).or_insert(0) += 1;
        }
        out
    }

    pub fn item_counts(&self) -> HashMap<&str, usize> {
        let mut out = HashMap::new();
        for r in &self.records {
            *out.entry(r.item.as_str()).or_insert(0) += 1;
        }
        out
    }

    pub fn contains(&self, user: &str, item: &str) -> bool {
        self.records.iter().any(|r| r.user == user && r.item == item)
    }

    /// Keeps the records matching `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&Interaction) -> bool) -> Self {
        Self {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    pub fn restrict_users(&self, users: &BTreeSet<String>) -> Self {
        self.filter(|r| users.contains(&r.user))
    }

    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        self.records.iter().map(|r| (r.user.clone(), r.item.clone())).collect()
    }
}

/// Disjoint per-user train/test partition of a source log.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: InteractionLog,
    pub test: InteractionLog,
    pub seed: u64,
    pub ratio: f64,
}

impl SplitPair {
    /// Checks the partition invariants against `source`.
    pub fn validate(&self, source: &InteractionLog) -> Result<()> {
        let train = self.train.pairs();
        let test = self.test.pairs();
        if !train.is_disjoint(&test) {
            return Err(Error::InvalidArgument("train and test overlap".into()));
        }
        let union: BTreeSet<_> = train.union(&test).cloned().collect();
        if union != source.pairs() {
            return Err(Error::InvalidArgument(
                "train and test do not cover the source log".into(),
            ));
        }
        let train_users = self.train.users();
        if let Some(u) = self.test.users().iter().find(|u| !train_users.contains(*u)) {
            return Err(Error::InvalidArgument(format!(
                "user {u:?} is in test but not in train"
            )));
        }
        Ok(())
    }

    /// Source log reassembled from both sides.
    pub fn union(&self) -> InteractionLog {
        InteractionLog::from_records(self.train.records().iter().chain(self.test.records()).cloned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_interactions: usize,
    pub sparsity: f64,
}

impl DatasetStats {
    pub fn from_counts(n_users: usize, n_items: usize, n_interactions: usize) -> Result<Self> {
        if n_users == 0 || n_items == 0 || n_interactions == 0 {
            return Err(Error::EmptyResult("dataset statistics of an empty log".into()));
        }
        let cells = n_users as f64 * n_items as f64;
        Ok(Self {
            n_users,
            n_items,
            n_interactions,
            sparsity: 1.0 - n_interactions as f64 / cells,
        })
    }

    /// Sparsity as a percentage rounded to two decimals.
    pub fn sparsity_percent(&self) -> f64 {
        (self.sparsity * 10_000.0).round() / 100.0
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "interactions={} users={} items={} sparsity={:.2}%",
            self.n_interactions,
            self.n_users,
            self.n_items,
            self.sparsity * 100.0
        )
    }
}

pub fn dataset_stats(log: &InteractionLog) -> Result<DatasetStats> {
    DatasetStats::from_counts(log.users().len(), log.items().len(), log.len())
}
