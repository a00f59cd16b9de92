//! Non-neural baseline recommenders behind a common scoring interface.
//!
//! Every model scores all items for a user; [`recommend_top_n`] removes the
//! user's training items and keeps the `n` best, breaking score ties by
//! ascending item id.

mod config;
mod content;
mod ease;
mod io;
mod knn;
mod matrix;
mod mf;
mod popularity;
mod rp3beta;
mod tuning;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ItemCatalog;
use crate::error::{Error, Result};

pub use config::{default_grid, MfConfig, ModelConfig, ModelKind};
pub use content::{tfidf_vectors, TfIdf, Vsm};
pub use ease::{fit_ease, Ease};
pub use io::{read_ranked_lists, write_ranked_lists, RankedListFile};
pub use knn::{cosine, knn_similarity, ItemKnn, NeighborIndex, SparseVector, UserKnn};
pub use matrix::SparseInteractionMatrix;
pub use mf::{train_mf, MatrixFactorization};
pub use popularity::{most_popular_ranking, random_ranking, MostPopular, RandomModel};
pub use rp3beta::{fit_rp3beta, Rp3Beta};
pub use tuning::{tune_hyperparameters, validation_ndcg, TuningOutcome};

/// A fitted model. Scores are indexed by the item ordinals of the matrix
/// passed to `score_user`, which must be the matrix the model was fitted on.
pub trait Recommender: Send + Sync {
    fn name(&self) -> &str;

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub item: String,
    pub score: f64,
}

/// Ordered Top-N list for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub user: String,
    pub items: Vec<RankedItem>,
    /// The `n` that was requested.
    pub cutoff: usize,
}

impl RankedList {
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|r| r.item.as_str())
    }

    /// Checks ordering, uniqueness and exclusion of `seen` items.
    pub fn check_invariants(&self, seen: &HashSet<&str>) -> Result<()> {
        let mut ids = HashSet::new();
        for (idx, entry) in self.items.iter().enumerate() {
            if !ids.insert(entry.item.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "{}: duplicate item {}",
                    self.user, entry.item
                )));
            }
            if seen.contains(entry.item.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "{}: training item {} recommended",
                    self.user, entry.item
                )));
            }
            if idx > 0 && self.items[idx - 1].score < entry.score {
                return Err(Error::InvalidArgument(format!(
                    "{}: scores increase at rank {}",
                    self.user,
                    idx + 1
                )));
            }
        }
        Ok(())
    }
}

fn by_score_then_ordinal(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    let sa = if a.1.is_nan() { f64::NEG_INFINITY } else { a.1 };
    let sb = if b.1.is_nan() { f64::NEG_INFINITY } else { b.1 };
    sb.partial_cmp(&sa).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
}

/// The `n` best `(ordinal, score)` pairs among items not in `exclude`.
pub fn top_n(scores: &[f64], exclude: &[usize], n: usize) -> Vec<(usize, f64)> {
    let mut excluded = vec![false; scores.len()];
    for &i in exclude {
        excluded[i] = true;
    }
    let mut candidates: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded[*i])
        .map(|(i, &s)| (i, s))
        .collect();
    let n = n.min(candidates.len());
    if n == 0 {
        return Vec::new();
    }
    if n < candidates.len() {
        candidates.select_nth_unstable_by(n - 1, by_score_then_ordinal);
        candidates.truncate(n);
    }
    candidates.sort_unstable_by(by_score_then_ordinal);
    candidates
}

/// Top-`n` unseen items for `user`.
pub fn recommend_top_n(
    model: &dyn Recommender,
    matrix: &SparseInteractionMatrix,
    user: &str,
    n: usize,
) -> Result<RankedList> {
    let u = matrix.user_ordinal(user)?;
    let scores = model.score_user(matrix, u);
    debug_assert_eq!(scores.len(), matrix.n_items());
    let items = top_n(&scores, matrix.row(u), n)
        .into_iter()
        .map(|(i, score)| RankedItem {
            item: matrix.item_id(i).to_string(),
            score,
        })
        .collect();
    Ok(RankedList {
        user: user.to_string(),
        items,
        cutoff: n,
    })
}

/// Lists for many users, computed in parallel and returned in user order.
pub fn recommend_all<'a>(
    model: &dyn Recommender,
    matrix: &SparseInteractionMatrix,
    users: impl IntoIterator<Item = &'a str>,
    n: usize,
) -> Result<BTreeMap<String, RankedList>> {
    let users: Vec<&str> = users.into_iter().collect();
    let lists: Result<Vec<RankedList>> = users.par_iter().map(|u| recommend_top_n(model, matrix, u, n)).collect();
    Ok(lists?.into_iter().map(|l| (l.user.clone(), l)).collect())
}

/// Fits the model described by `config` on `matrix`. Content-based models
/// read item attributes from `catalog`.
pub fn fit(
    config: &ModelConfig,
    matrix: &SparseInteractionMatrix,
    catalog: Option<&ItemCatalog>,
) -> Result<Box<dyn Recommender>> {
    config.validate()?;
    let need_catalog = || {
        catalog
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs an item catalog with attributes", config.name())))
    };
    Ok(match config {
        ModelConfig::Random { seed } => Box::new(RandomModel::new(*seed)),
        ModelConfig::MostPop => Box::new(MostPopular::fit(matrix)),
        ModelConfig::ItemKnn { neighbors } => Box::new(ItemKnn::fit(matrix, *neighbors)),
        ModelConfig::UserKnn { neighbors } => Box::new(UserKnn::fit(matrix, *neighbors)),
        ModelConfig::AttributeItemKnn { neighbors } => {
            Box::new(ItemKnn::fit_attributes(matrix, need_catalog()?, *neighbors))
        }
        ModelConfig::AttributeUserKnn { neighbors } => {
            Box::new(UserKnn::fit_attributes(matrix, need_catalog()?, *neighbors))
        }
        ModelConfig::Vsm => Box::new(Vsm::fit(matrix, need_catalog()?)),
        ModelConfig::Rp3Beta { alpha, beta } => Box::new(fit_rp3beta(matrix, *alpha, *beta)?),
        ModelConfig::Ease { lambda } => Box::new(fit_ease(matrix, *lambda)?),
        ModelConfig::Mf(cfg) => Box::new(train_mf(matrix, cfg)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Interaction, InteractionLog};
    use proptest::prelude::*;

    struct Fixed(Vec<f64>);

    impl Recommender for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn score_user(&self, _: &SparseInteractionMatrix, _: usize) -> Vec<f64> {
            self.0.clone()
        }
    }

    fn matrix() -> SparseInteractionMatrix {
        let log = InteractionLog::from_records(vec![
            Interaction::new("u1", "a", 1.0),
            Interaction::new("u2", "b", 1.0),
            Interaction::new("u2", "c", 1.0),
            Interaction::new("u2", "d", 1.0),
        ]);
        SparseInteractionMatrix::from_train(&log)
    }

    #[test]
    fn n_beyond_unseen_returns_all_unseen() {
        let m = matrix();
        let list = recommend_top_n(&Fixed(vec![0.1, 0.4, 0.3, 0.2]), &m, "u1", 10).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), ["b", "c", "d"]);
        assert_eq!(list.cutoff, 10);
    }

    #[test]
    fn ties_break_by_item_id() {
        let m = matrix();
        let list = recommend_top_n(&Fixed(vec![1.0; 4]), &m, "u1", 2).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), ["b", "c"]);
    }

    #[test]
    fn nan_scores_sink() {
        let m = matrix();
        let list = recommend_top_n(&Fixed(vec![0.0, f64::NAN, -1.0, 0.5]), &m, "u1", 3).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), ["d", "c", "b"]);
    }

    #[test]
    fn unknown_user_is_an_error() {
        let m = matrix();
        assert!(matches!(
            recommend_top_n(&Fixed(vec![0.0; 4]), &m, "zz", 2),
            Err(Error::UnknownUser(_))
        ));
    }

    proptest! {
        #[test]
        fn positive_scaling_keeps_order(scores in proptest::collection::vec(-5.0f64..5.0, 4), c in 0.01f64..100.0) {
            let m = matrix();
            let a = recommend_top_n(&Fixed(scores.clone()), &m, "u1", 3).unwrap();
            let b = recommend_top_n(&Fixed(scores.iter().map(|s| s * c).collect()), &m, "u1", 3).unwrap();
            prop_assert_eq!(a.item_ids().collect::<Vec<_>>(), b.item_ids().collect::<Vec<_>>());
        }
    }
}
