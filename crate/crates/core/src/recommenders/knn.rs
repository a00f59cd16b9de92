use std::cmp::Ordering;

use rayon::prelude::*;

use super::content::tfidf_vectors;
use super::{Recommender, SparseInteractionMatrix};
use crate::corpus::ItemCatalog;
use crate::error::{Error, Result};

/// Sparse real vector; entries sorted by dimension, no duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Self { entries }
    }

    pub fn binary(dims: &[usize]) -> Self {
        Self::new(dims.iter().map(|&d| (d, 1.0)).collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.1 == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(x), Some(y)) = (a.peek(), b.peek()) {
            match x.0.cmp(&y.0) {
                Ordering::Less => {
                    a.next();
                }
                Ordering::Greater => {
                    b.next();
                }
                Ordering::Equal => {
                    acc += x.1 * y.1;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &SparseVector, scale: f64) {
        let mut merged = self.entries.clone();
        merged.extend(other.entries.iter().map(|&(d, w)| (d, w * scale)));
        *self = SparseVector::new(merged);
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.squared_norm(), b.squared_norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

fn by_similarity(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `k` vectors most cosine-similar to `vectors[target]`, excluding the
/// target itself, ordered by similarity then ordinal.
pub fn knn_similarity(vectors: &[SparseVector], target: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let t = vectors
        .get(target)
        .ok_or_else(|| Error::InvalidArgument(format!("target {target} out of range 0..{}", vectors.len())))?;
    let mut sims: Vec<(usize, f64)> = vectors
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(i, v)| (i, cosine(t, v)))
        .collect();
    sims.sort_by(by_similarity);
    sims.truncate(k);
    Ok(sims)
}

/// Top-k positive-similarity neighbors of every vector.
///
/// Dot products are accumulated through an inverted index over dimensions,
/// so the cost follows co-occurrence rather than the number of pairs.
/// Vectors with zero similarity are omitted since they add nothing to any
/// neighborhood score.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl NeighborIndex {
    pub fn build(vectors: &[SparseVector], k: usize) -> Self {
        let n_dims = vectors
            .iter()
            .flat_map(|v| v.entries.last().map(|e| e.0 + 1))
            .max()
            .unwrap_or(0);
        let mut inverted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_dims];
        for (idx, v) in vectors.iter().enumerate() {
            for &(d, w) in &v.entries {
                inverted[d].push((idx, w));
            }
        }
        let norms: Vec<f64> = vectors.iter().map(SparseVector::squared_norm).collect();
        let neighbors = (0..vectors.len())
            .into_par_iter()
            .map(|i| {
                if norms[i] == 0.0 {
                    return Vec::new();
                }
                let mut dots = vec![0.0; vectors.len()];
                let mut touched = Vec::new();
                for &(d, w) in &vectors[i].entries {
                    for &(j, wj) in &inverted[d] {
                        if j == i {
                            continue;
                        }
                        if dots[j] == 0.0 {
                            touched.push(j);
                        }
                        dots[j] += w * wj;
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                let mut sims: Vec<(usize, f64)> = touched
                    .into_iter()
                    .filter(|&j| norms[j] > 0.0)
                    .map(|j| (j, (dots[j] / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0)))
                    .filter(|&(_, s)| s > 0.0)
                    .collect();
                if sims.len() > k {
                    sims.select_nth_unstable_by(k - 1, by_similarity);
                    sims.truncate(k);
                }
                sims.sort_by(by_similarity);
                sims
            })
            .collect();
        Self { neighbors }
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.neighbors[idx]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Item-based neighborhood model:
/// `score(u, i) = sum over j in topk(i) of sim(i, j) * R(u, j)`.
#[derive(Debug, Clone)]
pub struct ItemKnn {
    name: &'static str,
    /// reverse[j] = items i with j among their neighbors, with sim(i, j)
    reverse: Vec<Vec<(usize, f64)>>,
}

impl ItemKnn {
    pub fn fit(matrix: &SparseInteractionMatrix, k: usize) -> Self {
        let vectors: Vec<SparseVector> = matrix.cols().iter().map(|c| SparseVector::binary(c)).collect();
        Self::from_vectors("ItemKNN", &vectors, k)
    }

    /// Neighborhoods from TF-IDF attribute vectors instead of interactions.
    pub fn fit_attributes(matrix: &SparseInteractionMatrix, catalog: &ItemCatalog, k: usize) -> Self {
        let tfidf = tfidf_vectors(catalog, matrix.item_ids().iter().map(String::as_str));
        let vectors = tfidf.ordered_vectors(matrix.item_ids());
        Self::from_vectors("AttributeItemKNN", &vectors, k)
    }

    fn from_vectors(name: &'static str, vectors: &[SparseVector], k: usize) -> Self {
        let index = NeighborIndex::build(vectors, k);
        let mut reverse = vec![Vec::new(); vectors.len()];
        for i in 0..index.len() {
            for &(j, s) in index.neighbors(i) {
                reverse[j].push((i, s));
            }
        }
        Self { name, reverse }
    }
}

impl Recommender for ItemKnn {
    fn name(&self) -> &str {
        self.name
    }

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        let mut scores = vec![0.0; matrix.n_items()];
        for &j in matrix.row(user) {
            for &(i, s) in &self.reverse[j] {
                scores[i] += s;
            }
        }
        scores
    }
}

/// User-based neighborhood model:
/// `score(u, i) = sum over v in topk(u) of sim(u, v) * R(v, i)`.
#[derive(Debug, Clone)]
pub struct UserKnn {
    name: &'static str,
    index: NeighborIndex,
}

impl UserKnn {
    pub fn fit(matrix: &SparseInteractionMatrix, k: usize) -> Self {
        let vectors: Vec<SparseVector> = matrix.rows().iter().map(|r| SparseVector::binary(r)).collect();
        Self {
            name: "UserKNN",
            index: NeighborIndex::build(&vectors, k),
        }
    }

    /// User profiles are the sums of the TF-IDF vectors of their items.
    pub fn fit_attributes(matrix: &SparseInteractionMatrix, catalog: &ItemCatalog, k: usize) -> Self {
        let tfidf = tfidf_vectors(catalog, matrix.item_ids().iter().map(String::as_str));
        let items = tfidf.ordered_vectors(matrix.item_ids());
        let profiles: Vec<SparseVector> = matrix
            .rows()
            .iter()
            .map(|row| {
                let mut acc = Vec::new();
                for &i in row {
                    acc.extend_from_slice(items[i].entries());
                }
                SparseVector::new(acc)
            })
            .collect();
        Self {
            name: "AttributeUserKNN",
            index: NeighborIndex::build(&profiles, k),
        }
    }
}

impl Recommender for UserKnn {
    fn name(&self) -> &str {
        self.name
    }

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        let mut scores = vec![0.0; matrix.n_items()];
        for &(v, s) in self.index.neighbors(user) {
            for &i in matrix.row(v) {
                scores[i] += s;
            }
        }
        scores
    }
}
