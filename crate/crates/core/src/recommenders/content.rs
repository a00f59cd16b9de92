use std::collections::{BTreeMap, BTreeSet};

use super::knn::SparseVector;
use super::{Recommender, SparseInteractionMatrix};
use crate::corpus::ItemCatalog;

/// TF-IDF attribute vectors over a fixed item set.
///
/// `weight(a, i) = tf(a, i) * ln(N / df(a))` with `tf = 1` for set-valued
/// attributes, `N` the number of items and `df(a)` the items carrying `a`.
#[derive(Debug, Clone, Default)]
pub struct TfIdf {
    /// `kind:value` tokens; position is the vector dimension
    pub vocabulary: Vec<String>,
    pub vectors: BTreeMap<String, SparseVector>,
    /// Items without attributes (zero vectors).
    pub without_attributes: Vec<String>,
}

impl TfIdf {
    /// Vectors aligned with `items`; unknown items get zero vectors.
    pub fn ordered_vectors(&self, items: &[String]) -> Vec<SparseVector> {
        items
            .iter()
            .map(|i| self.vectors.get(i).cloned().unwrap_or_default())
            .collect()
    }
}

pub fn tfidf_vectors<'a>(catalog: &ItemCatalog, items: impl IntoIterator<Item = &'a str>) -> TfIdf {
    let items: BTreeSet<&str> = items.into_iter().collect();
    let n = items.len() as f64;
    let tokens: BTreeMap<&str, BTreeSet<String>> = items
        .iter()
        .map(|&i| {
            let toks = catalog
                .get(i)
                .map(|e| e.attribute_tokens().collect())
                .unwrap_or_default();
            (i, toks)
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for toks in tokens.values() {
        for t in toks {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let vocabulary: Vec<String> = df.keys().map(|t| t.to_string()).collect();
    let dim: BTreeMap<&str, usize> = df.keys().enumerate().map(|(d, t)| (*t, d)).collect();

    let mut vectors = BTreeMap::new();
    let mut without_attributes = Vec::new();
    for (item, toks) in &tokens {
        if toks.is_empty() {
            without_attributes.push(item.to_string());
        }
        let entries = toks
            .iter()
            .map(|t| (dim[t.as_str()], (n / df[t.as_str()] as f64).ln()))
            .collect();
        vectors.insert(item.to_string(), SparseVector::new(entries));
    }
    if !without_attributes.is_empty() {
        log::warn!(
            "{} of {} items have no attributes and get zero TF-IDF vectors",
            without_attributes.len(),
            items.len()
        );
    }
    TfIdf {
        vocabulary,
        vectors,
        without_attributes,
    }
}

/// Vector space model: the user profile is the sum of the TF-IDF vectors of
/// the user's training items; items score by cosine with that profile.
#[derive(Debug, Clone)]
pub struct Vsm {
    item_vectors: Vec<SparseVector>,
    item_norms: Vec<f64>,
    /// inverted[d] = (item, weight) for attribute dimension d
    inverted: Vec<Vec<(usize, f64)>>,
}

impl Vsm {
    pub fn fit(matrix: &SparseInteractionMatrix, catalog: &ItemCatalog) -> Self {
        let tfidf = tfidf_vectors(catalog, matrix.item_ids().iter().map(String::as_str));
        let item_vectors = tfidf.ordered_vectors(matrix.item_ids());
        let mut inverted = vec![Vec::new(); tfidf.vocabulary.len()];
        for (i, v) in item_vectors.iter().enumerate() {
            for &(d, w) in v.entries() {
                inverted[d].push((i, w));
            }
        }
        let item_norms = item_vectors.iter().map(SparseVector::norm).collect();
        Self {
            item_vectors,
            item_norms,
            inverted,
        }
    }

    pub fn profile(&self, matrix: &SparseInteractionMatrix, user: usize) -> SparseVector {
        let mut acc = Vec::new();
        for &i in matrix.row(user) {
            acc.extend_from_slice(self.item_vectors[i].entries());
        }
        SparseVector::new(acc)
    }
}

impl Recommender for Vsm {
    fn name(&self) -> &str {
        "VSM"
    }

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        let profile = self.profile(matrix, user);
        let mut scores = vec![0.0; matrix.n_items()];
        let pnorm = profile.norm();
        if pnorm == 0.0 {
            return scores;
        }
        for &(d, w) in profile.entries() {
            for &(i, wi) in &self.inverted[d] {
                scores[i] += w * wi;
            }
        }
        for (s, n) in scores.iter_mut().zip(&self.item_norms) {
            *s = if *n == 0.0 {
                0.0
            } else {
                (*s / (pnorm * n)).clamp(-1.0, 1.0)
            };
        }
        scores
    }
}
