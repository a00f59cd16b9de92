use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::similarity::ratio;
use crate::corpus::{write_file, ItemCatalog};
use crate::error::{Error, Result};
use crate::llm_bridge::RawRecommendationList;
use crate::metrics::PopularityProfile;
use crate::text::{normalize_name, tsv_cell};

pub const DEFAULT_THRESHOLD: f64 = 0.90;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum MatchOutcome {
    Matched { item: String, similarity: f64 },
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub raw: String,
    /// 1-based position in the raw list.
    pub rank: usize,
    pub outcome: MatchOutcome,
}

impl MatchResult {
    pub fn item(&self) -> Option<&str> {
        match &self.outcome {
            MatchOutcome::Matched { item, .. } => Some(item),
            MatchOutcome::External => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedList {
    pub user: String,
    /// Matched items, first occurrence only, in raw order.
    pub items: Vec<String>,
    pub matches: Vec<MatchResult>,
    pub external_count: usize,
    pub first_external_rank: Option<usize>,
    pub raw_len: usize,
}

struct Candidate {
    item: String,
    name: Vec<char>,
    /// Sorted characters, for the multiset bound.
    sorted: Vec<char>,
    popularity: usize,
}

/// Best catalog item for a normalized string, if any clears the threshold.
type Best = Option<(usize, f64)>;

/// Maps raw strings to catalog items by Gestalt similarity.
pub struct Resolver {
    candidates: Vec<Candidate>,
    threshold: f64,
    prefilter: bool,
    memo: Mutex<HashMap<String, Best>>,
}

fn sorted_chars(s: &[char]) -> Vec<char> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v
}

/// Size of the multiset intersection of two sorted sequences.
fn common_chars(a: &[char], b: &[char]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl Resolver {
    /// Candidates are every catalog item, named by its normalized display
    /// name; popularity breaks similarity ties.
    pub fn new(catalog: &ItemCatalog, popularity: &PopularityProfile, threshold: f64) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::InvalidArgument("cannot resolve against an empty catalog".into()));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        let candidates = catalog
            .iter()
            .map(|(item, entry)| {
                let name: Vec<char> = normalize_name(&entry.name).chars().collect();
                Candidate {
                    item: item.to_string(),
                    sorted: sorted_chars(&name),
                    name,
                    popularity: popularity.count(item),
                }
            })
            .collect();
        Ok(Self {
            candidates,
            threshold,
            prefilter: true,
            memo: Mutex::new(HashMap::new()),
        })
    }

    /// Compares against every candidate; results are identical either way.
    pub fn without_prefilter(mut self) -> Self {
        self.prefilter = false;
        self
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Highest-similarity candidate under the tie rule, skipping only those
    /// that provably cannot reach the threshold or the running best.
    fn best_candidate(&self, raw: &[char]) -> Best {
        let sorted = sorted_chars(raw);
        let mut best: Option<(usize, f64)> = None;
        for (idx, c) in self.candidates.iter().enumerate() {
            let total = raw.len() + c.name.len();
            if self.prefilter && total > 0 {
                let bound = 2.0 * common_chars(&sorted, &c.sorted) as f64 / total as f64;
                let floor = best.map_or(self.threshold, |(_, s)| s);
                if bound <= self.threshold || bound < floor {
                    continue;
                }
            }
            let s = ratio(raw, &c.name);
            let better = match best {
                None => true,
                Some((b, bs)) => {
                    let other = &self.candidates[b];
                    s > bs
                        || (s == bs
                            && (c.popularity, std::cmp::Reverse(&c.item))
                                > (other.popularity, std::cmp::Reverse(&other.item)))
                }
            };
            if better {
                best = Some((idx, s));
            }
        }
        best.filter(|&(_, s)| s > self.threshold)
    }

    /// Exact best similarity over the whole catalog, for audits.
    pub fn best_similarity(&self, raw: &str) -> f64 {
        let raw: Vec<char> = normalize_name(raw).chars().collect();
        self.candidates.iter().map(|c| ratio(&raw, &c.name)).fold(0.0, f64::max)
    }

    fn lookup(&self, raw: &str) -> Best {
        let key = normalize_name(raw);
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return *hit;
        }
        let chars: Vec<char> = key.chars().collect();
        let best = self.best_candidate(&chars);
        self.memo.lock().expect("memo lock").insert(key, best);
        best
    }

    pub fn resolve_item(&self, raw: &str, rank: usize) -> MatchResult {
        let outcome = match self.lookup(raw) {
            Some((idx, similarity)) => MatchOutcome::Matched {
                item: self.candidates[idx].item.clone(),
                similarity,
            },
            None => MatchOutcome::External,
        };
        MatchResult {
            raw: raw.to_string(),
            rank,
            outcome,
        }
    }

    pub fn resolve_list(&self, raw: &RawRecommendationList) -> ResolvedList {
        let matches: Vec<MatchResult> = raw
            .items
            .iter()
            .enumerate()
            .map(|(i, s)| self.resolve_item(s, i + 1))
            .collect();
        let mut seen = HashSet::new();
        let items = matches
            .iter()
            .filter_map(MatchResult::item)
            .filter(|item| seen.insert(*item))
            .map(str::to_string)
            .collect();
        let externals = matches.iter().filter(|m| m.item().is_none());
        ResolvedList {
            user: raw.user.clone(),
            items,
            external_count: externals.clone().count(),
            first_external_rank: externals.map(|m| m.rank).next(),
            raw_len: raw.items.len(),
            matches,
        }
    }
}

/// Audit TSV with one row per raw string.
pub fn resolution_audit_tsv(lists: &[ResolvedList]) -> String {
    let mut out = String::from("user_id\traw_rank\traw_string\toutcome\titem_id\tsimilarity\n");
    for list in lists {
        for m in &list.matches {
            let (outcome, item, sim) = match &m.outcome {
                MatchOutcome::Matched { item, similarity } => ("matched", item.as_str(), format!("{similarity:.6}")),
                MatchOutcome::External => ("external", "", String::new()),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{outcome}\t{item}\t{sim}",
                tsv_cell(&list.user),
                m.rank,
                tsv_cell(&m.raw)
            );
        }
    }
    out
}

pub fn write_resolution_audit(lists: &[ResolvedList], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), resolution_audit_tsv(lists))
}

/// External-item statistics over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalStats {
    pub lists: usize,
    pub raw_items: usize,
    pub external_items: usize,
    pub lists_with_external: usize,
    /// Lists whose first external item sits within the metric cutoff.
    pub first_external_within_cutoff: usize,
    /// first-external rank -> number of lists
    pub first_external_ranks: BTreeMap<usize, usize>,
}

impl ExternalStats {
    pub fn from_lists(lists: &[ResolvedList], cutoff: usize) -> Self {
        let mut s = ExternalStats {
            lists: lists.len(),
            ..Default::default()
        };
        for l in lists {
            s.raw_items += l.raw_len;
            s.external_items += l.external_count;
            if let Some(r) = l.first_external_rank {
                s.lists_with_external += 1;
                *s.first_external_ranks.entry(r).or_default() += 1;
                if r <= cutoff {
                    s.first_external_within_cutoff += 1;
                }
            }
        }
        s
    }

    pub fn external_rate(&self) -> f64 {
        if self.raw_items == 0 {
            0.0
        } else {
            self.external_items as f64 / self.raw_items as f64
        }
    }

    pub fn median_first_external_rank(&self) -> Option<usize> {
        let n = self.lists_with_external;
        let mut seen = 0;
        for (&rank, &count) in &self.first_external_ranks {
            seen += count;
            if 2 * seen >= n && n > 0 {
                return Some(rank);
            }
        }
        None
    }
}
