use std::collections::{BTreeSet, HashMap};

use crate::corpus::InteractionLog;
use crate::error::{Error, Result};

/// Binary user x item matrix of a training log.
///
/// Ordinals follow ascending id order on both axes, so comparing item
/// ordinals is the same as comparing item ids.
#[derive(Debug, Clone)]
pub struct SparseInteractionMatrix {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseInteractionMatrix {
    /// Matrix over the train users and the union of train items and
    /// `extra_items` (items that only occur in test are still candidates).
    pub fn new<'a>(train: &InteractionLog, extra_items: impl IntoIterator<Item = &'a str>) -> Self {
        let users: Vec<String> = train.users().into_iter().map(str::to_string).collect();
        let mut item_set: BTreeSet<String> = train.items().into_iter().map(str::to_string).collect();
        item_set.extend(extra_items.into_iter().map(str::to_string));
        let items: Vec<String> = item_set.into_iter().collect();
        let user_index: HashMap<String, usize> = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let item_index: HashMap<String, usize> = items.iter().enumerate().map(|(i, it)| (it.clone(), i)).collect();
        let mut rows = vec![Vec::new(); users.len()];
        let mut cols = vec![Vec::new(); items.len()];
        for r in train.records() {
            if r.weight <= 0.0 {
                continue;
            }
            let (u, i) = (user_index[&r.user], item_index[&r.item]);
            rows[u].push(i);
            cols[i].push(u);
        }
        for v in rows.iter_mut().chain(cols.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        Self {
            users,
            items,
            user_index,
            item_index,
            rows,
            cols,
        }
    }

    pub fn from_train(train: &InteractionLog) -> Self {
        Self::new(train, std::iter::empty())
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn user_id(&self, ordinal: usize) -> &str {
        &self.users[ordinal]
    }

    pub fn item_id(&self, ordinal: usize) -> &str {
        &self.items[ordinal]
    }

    pub fn user_ids(&self) -> &[String] {
        &self.users
    }

    pub fn item_ids(&self) -> &[String] {
        &self.items
    }

    pub fn user_ordinal(&self, user: &str) -> Result<usize> {
        self.user_index
            .get(user)
            .copied()
            .ok_or_else(|| Error::UnknownUser(user.to_string()))
    }

    pub fn item_ordinal(&self, item: &str) -> Option<usize> {
        self.item_index.get(item).copied()
    }

    /// Items of a user, ascending ordinals.
    pub fn row(&self, user: usize) -> &[usize] {
        &self.rows[user]
    }

    /// Users of an item, ascending ordinals.
    pub fn col(&self, item: usize) -> &[usize] {
        &self.cols[item]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.rows[user].binary_search(&item).is_ok()
    }

    pub fn item_popularity(&self) -> Vec<usize> {
        self.cols.iter().map(Vec::len).collect()
    }

    /// Membership mask of a user's items.
    pub fn seen_mask(&self, user: usize) -> Vec<bool> {
        let mut mask = vec![false; self.n_items()];
        for &i in &self.rows[user] {
            mask[i] = true;
        }
        mask
    }
}
