use super::{fit, recommend_all, ModelConfig, SparseInteractionMatrix};
use crate::corpus::ItemCatalog;
use crate::error::{Error, Result};
use crate::metrics::{ndcg_at_k, RelevanceJudgments};

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOutcome {
    pub best: ModelConfig,
    pub best_score: f64,
    /// Validation nDCG of every grid point, in grid order.
    pub scores: Vec<(ModelConfig, f64)>,
}

/// Mean validation nDCG@k of a fitted config over the validation users
/// present in `matrix`.
pub fn validation_ndcg(
    config: &ModelConfig,
    matrix: &SparseInteractionMatrix,
    validation: &RelevanceJudgments,
    catalog: Option<&ItemCatalog>,
    k: usize,
) -> Result<f64> {
    let model = fit(config, matrix, catalog)?;
    let users: Vec<&str> = validation
        .evaluable_users()
        .filter(|u| matrix.user_ordinal(u).is_ok())
        .collect();
    if users.is_empty() {
        return Err(Error::EmptyResult(
            "no validation user appears in the training matrix".into(),
        ));
    }
    let lists = recommend_all(model.as_ref(), matrix, users.iter().copied(), k)?;
    let total: f64 = users
        .iter()
        .map(|u| {
            let ids: Vec<&str> = lists[*u].item_ids().collect();
            ndcg_at_k(&ids, validation.get(u).expect("evaluable"), k).unwrap_or(0.0)
        })
        .sum();
    Ok(total / users.len() as f64)
}

/// Grid search maximizing validation nDCG@k; the first grid point wins ties.
pub fn tune_hyperparameters(
    grid: &[ModelConfig],
    matrix: &SparseInteractionMatrix,
    validation: &RelevanceJudgments,
    catalog: Option<&ItemCatalog>,
    k: usize,
) -> Result<TuningOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (idx, config) in grid.iter().enumerate() {
        let score = validation_ndcg(config, matrix, validation, catalog, k)?;
        log::info!(
            "{} {}: validation nDCG@{k} = {score:.4}",
            config.name(),
            config.config_hash()
        );
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((idx, score));
        }
        scores.push((config.clone(), score));
    }
    let (idx, best_score) = best.expect("grid is non-empty");
    Ok(TuningOutcome {
        best: grid[idx].clone(),
        best_score,
        scores,
    })
}
