use rand::seq::SliceRandom;

use super::{recommend_top_n, RankedItem, RankedList, Recommender, SparseInteractionMatrix};
use crate::error::Result;
use crate::rng;

/// Scores every item by its number of training interactions.
#[derive(Debug, Clone)]
pub struct MostPopular {
    counts: Vec<f64>,
}

impl MostPopular {
    pub fn fit(matrix: &SparseInteractionMatrix) -> Self {
        Self {
            counts: matrix.item_popularity().into_iter().map(|c| c as f64).collect(),
        }
    }
}

impl Recommender for MostPopular {
    fn name(&self) -> &str {
        "MostPop"
    }

    fn score_user(&self, _: &SparseInteractionMatrix, _: usize) -> Vec<f64> {
        self.counts.clone()
    }
}

pub fn most_popular_ranking(matrix: &SparseInteractionMatrix, user: &str, n: usize) -> Result<RankedList> {
    recommend_top_n(&MostPopular::fit(matrix), matrix, user, n)
}

/// Uniform random order over unseen items, fixed per `(seed, user)`.
#[derive(Debug, Clone, Copy)]
pub struct RandomModel {
    seed: u64,
}

impl RandomModel {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn permutation(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<usize> {
        let seen = matrix.seen_mask(user);
        let mut unseen: Vec<usize> = (0..matrix.n_items()).filter(|&i| !seen[i]).collect();
        let mut rng = rng::stream(self.seed, matrix.user_id(user));
        unseen.shuffle(&mut rng);
        unseen
    }
}

impl Recommender for RandomModel {
    fn name(&self) -> &str {
        "Random"
    }

    /// Position in the shuffled order becomes a strictly decreasing score;
    /// seen items score -inf.
    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        let order = self.permutation(matrix, user);
        let mut scores = vec![f64::NEG_INFINITY; matrix.n_items()];
        let len = order.len();
        for (pos, item) in order.into_iter().enumerate() {
            scores[item] = (len - pos) as f64;
        }
        scores
    }
}

pub fn random_ranking(matrix: &SparseInteractionMatrix, user: &str, n: usize, seed: u64) -> Result<RankedList> {
    let u = matrix.user_ordinal(user)?;
    let model = RandomModel::new(seed);
    let order = model.permutation(matrix, u);
    let len = order.len();
    let items = order
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(pos, i)| RankedItem {
            item: matrix.item_id(i).to_string(),
            score: (len - pos) as f64,
        })
        .collect();
    Ok(RankedList {
        user: user.to_string(),
        items,
        cutoff: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Interaction, InteractionLog};
    use crate::error::Error;

    fn popularity_log() -> SparseInteractionMatrix {
        // i1 seen by 5 users, i2 by 3, i3 by 1
        let mut recs = Vec::new();
        for u in 0..5 {
            recs.push(Interaction::new(format!("u{u}"), "i1", 1.0));
        }
        for u in 0..3 {
            recs.push(Interaction::new(format!("u{u}"), "i2", 1.0));
        }
        recs.push(Interaction::new("u9", "i3", 1.0));
        recs.push(Interaction::new("me", "i2", 1.0));
        SparseInteractionMatrix::from_train(&InteractionLog::from_records(recs))
    }

    #[test]
    fn most_popular_excludes_seen() {
        let m = popularity_log();
        let list = most_popular_ranking(&m, "me", 10).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), ["i1", "i3"]);
        assert_eq!(list.items[0].score, 5.0);
    }

    #[test]
    fn equal_counts_fall_back_to_item_id() {
        let log = InteractionLog::from_records(
            ["c", "a", "b"]
                .map(|i| Interaction::new("u", i, 1.0))
                .into_iter()
                .chain([Interaction::new("v", "z", 1.0)]),
        );
        let m = SparseInteractionMatrix::from_train(&log);
        let list = most_popular_ranking(&m, "v", 3).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), ["a", "b", "c"]);
    }

    #[test]
    fn random_is_a_permutation_of_unseen() {
        let log = InteractionLog::from_records(
            ["a", "b", "c"]
                .map(|i| Interaction::new("u", i, 1.0))
                .into_iter()
                .chain([Interaction::new("v", "a", 1.0)]),
        );
        let m = SparseInteractionMatrix::from_train(&log);
        let list = random_ranking(&m, "v", 3, 42).unwrap();
        let mut ids: Vec<_> = list.item_ids().collect();
        assert_eq!(ids.len(), 2);
        ids.sort();
        assert_eq!(ids, ["b", "c"]);

        let m2 = SparseInteractionMatrix::from_train(&InteractionLog::from_records(
            ["a", "b", "c"]
                .map(|i| Interaction::new("u", i, 1.0))
                .into_iter()
                .chain([Interaction::new("w", "z", 1.0)]),
        ));
        let all = random_ranking(&m2, "w", 3, 1).unwrap();
        let mut got: Vec<_> = all.item_ids().collect();
        got.sort();
        assert_eq!(got, ["a", "b", "c"]);
    }

    #[test]
    fn random_is_deterministic_and_matches_the_model_path() {
        let m = popularity_log();
        let a = random_ranking(&m, "me", 2, 7).unwrap();
        let b = random_ranking(&m, "me", 2, 7).unwrap();
        assert_eq!(a, b);
        let via_model = recommend_top_n(&RandomModel::new(7), &m, "me", 2).unwrap();
        assert_eq!(a, via_model);
    }

    #[test]
    fn unknown_user() {
        let m = popularity_log();
        assert!(matches!(random_ranking(&m, "nobody", 2, 0), Err(Error::UnknownUser(_))));
        assert!(matches!(
            most_popular_ranking(&m, "nobody", 2),
            Err(Error::UnknownUser(_))
        ));
    }

    #[test]
    fn model_path_matches_direct_most_popular() {
        let m = popularity_log();
        let direct = most_popular_ranking(&m, "u9", 5).unwrap();
        let via = recommend_top_n(&MostPopular::fit(&m), &m, "u9", 5).unwrap();
        assert_eq!(direct, via);
    }
}
