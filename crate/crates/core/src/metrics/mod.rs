//! Accuracy, diversity, novelty and popularity-bias metrics at a cutoff,
//! plus paired significance tests over per-user values.
//!
//! Per-user metrics take a ranked slice of item ids and only look at the
//! first `k` entries; scores never enter any formula.

mod accuracy;
mod beyond;
mod significance;
mod suite;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::InteractionLog;
use crate::error::{Error, Result};

pub use accuracy::{ndcg_at_k, precision_recall_at_k};
pub use beyond::{aplt, arp, efd_at_k, epc_at_k, gini_concentration, item_coverage};
pub use significance::{paired_t_test, TTest};
pub use suite::{evaluate_lists, metric_csv, per_user_csv, ModelEvaluation};

pub const DEFAULT_CUTOFF: usize = 10;
pub const DEFAULT_HEAD_FRACTION: f64 = 0.2;

/// `1 / log2(rank + 1)` for a 1-based rank.
pub(crate) fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// Relevant (test) items per user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelevanceJudgments {
    relevant: BTreeMap<String, BTreeSet<String>>,
}

impl RelevanceJudgments {
    pub fn new(relevant: BTreeMap<String, BTreeSet<String>>) -> Self {
        Self { relevant }
    }

    pub fn from_test(test: &InteractionLog) -> Self {
        let mut relevant: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in test.records() {
            if r.weight > 0.0 {
                relevant.entry(r.user.clone()).or_default().insert(r.item.clone());
            }
        }
        Self { relevant }
    }

    pub fn get(&self, user: &str) -> Option<&BTreeSet<String>> {
        self.relevant.get(user)
    }

    /// Users with at least one relevant item; the only users metrics score.
    pub fn evaluable_users(&self) -> impl Iterator<Item = &str> {
        self.relevant
            .iter()
            .filter(|(_, r)| !r.is_empty())
            .map(|(u, _)| u.as_str())
    }

    pub fn users_without_relevance(&self) -> usize {
        self.relevant.values().filter(|r| r.is_empty()).count()
    }

    pub fn restrict(&self, users: &BTreeSet<String>) -> Self {
        Self {
            relevant: self
                .relevant
                .iter()
                .filter(|(u, _)| users.contains(*u))
                .map(|(u, r)| (u.clone(), r.clone()))
                .collect(),
        }
    }

    /// Fails if any relevant item is also one of the user's train items.
    pub fn check_disjoint(&self, train: &InteractionLog) -> Result<()> {
        for r in train.records() {
            if self.relevant.get(&r.user).is_some_and(|s| s.contains(&r.item)) {
                return Err(Error::InvalidArgument(format!(
                    "user {} has train item {} among its relevant items",
                    r.user, r.item
                )));
            }
        }
        Ok(())
    }
}

/// Train popularity of every catalog item with a head / long-tail split.
#[derive(Debug, Clone)]
pub struct PopularityProfile {
    counts: HashMap<String, usize>,
    catalog: Vec<String>,
    head: HashSet<String>,
    n_users: usize,
    total: usize,
}

impl PopularityProfile {
    /// The catalog is the union of the train items and `catalog`. The head
    /// holds the `ceil(head_fraction * n)` most interacted items, ties going
    /// to the smaller item id.
    pub fn new<'a>(
        train: &InteractionLog,
        catalog: impl IntoIterator<Item = &'a str>,
        head_fraction: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&head_fraction) {
            return Err(Error::InvalidArgument(format!(
                "head fraction must lie in [0, 1], got {head_fraction}"
            )));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut total = 0;
        for r in train.records().iter().filter(|r| r.weight > 0.0) {
            *counts.entry(r.item.clone()).or_insert(0) += 1;
            total += 1;
        }
        let mut items: BTreeSet<&str> = catalog.into_iter().collect();
        items.extend(counts.keys().map(String::as_str));
        let catalog: Vec<String> = items.into_iter().map(str::to_string).collect();
        let mut ranked: Vec<&String> = catalog.iter().collect();
        ranked.sort_by(|a, b| {
            let (ca, cb) = (counts.get(*a).unwrap_or(&0), counts.get(*b).unwrap_or(&0));
            cb.cmp(ca).then(a.cmp(b))
        });
        let head_size = (head_fraction * catalog.len() as f64).ceil() as usize;
        let head = ranked.into_iter().take(head_size).cloned().collect();
        Ok(Self {
            counts,
            catalog,
            head,
            n_users: train.users().len(),
            total,
        })
    }

    pub fn count(&self, item: &str) -> usize {
        self.counts.get(item).copied().unwrap_or(0)
    }

    /// Fraction of train users who interacted with `item`.
    pub fn p_seen(&self, item: &str) -> f64 {
        if self.n_users == 0 {
            0.0
        } else {
            self.count(item) as f64 / self.n_users as f64
        }
    }

    /// Share of all train interactions that involve `item`; zero counts are
    /// replaced by one half.
    pub fn interaction_probability(&self, item: &str) -> f64 {
        let c = match self.count(item) {
            0 => 0.5,
            c => c as f64,
        };
        c / self.total.max(1) as f64
    }

    pub fn is_head(&self, item: &str) -> bool {
        self.head.contains(item)
    }

    pub fn head_size(&self) -> usize {
        self.head.len()
    }

    pub fn catalog(&self) -> &[String] {
        &self.catalog
    }

    pub fn catalog_size(&self) -> usize {
        self.catalog.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }
}

/// The reported metrics, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "nDCG")]
    Ndcg,
    Recall,
    Precision,
    Gini,
    #[serde(rename = "ItemCV")]
    ItemCv,
    #[serde(rename = "EPC")]
    Epc,
    #[serde(rename = "EFD")]
    Efd,
    #[serde(rename = "APLT")]
    Aplt,
    #[serde(rename = "ARP")]
    Arp,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Ndcg,
        Metric::Recall,
        Metric::Precision,
        Metric::Gini,
        Metric::ItemCv,
        Metric::Epc,
        Metric::Efd,
        Metric::Aplt,
        Metric::Arp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ndcg => "nDCG",
            Metric::Recall => "Recall",
            Metric::Precision => "Precision",
            Metric::Gini => "Gini",
            Metric::ItemCv => "ItemCV",
            Metric::Epc => "EPC",
            Metric::Efd => "EFD",
            Metric::Aplt => "APLT",
            Metric::Arp => "ARP",
        }
    }

    /// Gini and ItemCV describe the whole set of lists, not single users.
    pub fn is_per_user(self) -> bool {
        !matches!(self, Metric::Gini | Metric::ItemCv)
    }

    pub fn higher_is_better(self) -> bool {
        self != Metric::Arp
    }

    pub fn group(self) -> &'static str {
        match self {
            Metric::Ndcg | Metric::Recall | Metric::Precision => "Accuracy",
            Metric::Gini | Metric::ItemCv => "Diversity",
            Metric::Epc | Metric::Efd => "Novelty",
            Metric::Aplt | Metric::Arp => "Popularity Bias",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

/// Per-user values of one metric for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub metric: String,
    pub model: String,
    pub values: BTreeMap<String, f64>,
}

impl MetricVector {
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.values().sum::<f64>() / self.values.len() as f64
        }
    }
}
