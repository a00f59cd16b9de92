use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::beyond::{aplt_user, arp_user};
use super::{
    efd_at_k, epc_at_k, gini_concentration, item_coverage, ndcg_at_k, precision_recall_at_k, Metric, MetricVector,
    PopularityProfile, RelevanceJudgments,
};
use crate::error::Result;

/// Every metric for one model's lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvaluation {
    pub model: String,
    pub cutoff: usize,
    /// Users scored: those with at least one relevant item.
    pub n_users: usize,
    /// Users dropped for having no relevant items.
    pub excluded_users: usize,
    /// Scored users with no list at all (scored as an empty list).
    pub missing_lists: usize,
    /// Relevant recommended items whose zero train count was smoothed.
    pub efd_smoothed: usize,
    pub per_user: BTreeMap<Metric, MetricVector>,
    pub aggregates: BTreeMap<Metric, f64>,
}

impl ModelEvaluation {
    pub fn aggregate(&self, metric: Metric) -> f64 {
        self.aggregates[&metric]
    }
}

/// Scores `lists` (user -> ranked item ids) against `rel` at cutoff `k`.
pub fn evaluate_lists(
    model: &str,
    lists: &BTreeMap<String, Vec<String>>,
    rel: &RelevanceJudgments,
    pop: &PopularityProfile,
    k: usize,
) -> Result<ModelEvaluation> {
    let empty = Vec::new();
    let mut per_user: BTreeMap<Metric, MetricVector> = Metric::ALL
        .into_iter()
        .filter(|m| m.is_per_user())
        .map(|m| {
            let v = MetricVector {
                metric: m.name().to_string(),
                model: model.to_string(),
                values: BTreeMap::new(),
            };
            (m, v)
        })
        .collect();
    let mut scored_lists: Vec<&[String]> = Vec::new();
    let (mut missing_lists, mut efd_smoothed) = (0, 0);

    for user in rel.evaluable_users() {
        let relevant = rel.get(user).expect("evaluable users have judgments");
        let list = match lists.get(user) {
            Some(l) => l,
            None => {
                missing_lists += 1;
                &empty
            }
        };
        efd_smoothed += list
            .iter()
            .take(k)
            .filter(|i| relevant.contains(*i) && pop.count(i) == 0)
            .count();
        let ndcg = ndcg_at_k(list, relevant, k).expect("relevant set is non-empty");
        let (precision, recall) = precision_recall_at_k(list, relevant, k).unwrap_or((0.0, 0.0));
        let values = [
            (Metric::Ndcg, ndcg),
            (Metric::Recall, recall),
            (Metric::Precision, precision),
            (Metric::Epc, epc_at_k(list, relevant, pop, k).expect("non-empty")),
            (Metric::Efd, efd_at_k(list, relevant, pop, k).expect("non-empty")),
            (Metric::Aplt, aplt_user(list, pop, k)),
            (Metric::Arp, arp_user(list, pop, k)),
        ];
        for (m, v) in values {
            per_user
                .get_mut(&m)
                .expect("per-user metric")
                .values
                .insert(user.to_string(), v);
        }
        scored_lists.push(list);
    }

    let mut aggregates: BTreeMap<Metric, f64> = per_user.iter().map(|(m, v)| (*m, v.mean())).collect();
    aggregates.insert(Metric::Gini, gini_concentration(&scored_lists, pop, k)?);
    aggregates.insert(Metric::ItemCv, item_coverage(&scored_lists, k) as f64);
    if efd_smoothed > 0 {
        log::warn!("{model}: EFD smoothed {efd_smoothed} relevant items with zero train count");
    }
    Ok(ModelEvaluation {
        model: model.to_string(),
        cutoff: k,
        n_users: scored_lists.len(),
        excluded_users: rel.users_without_relevance(),
        missing_lists,
        efd_smoothed,
        per_user,
        aggregates,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `model,metric,aggregate,n_users` rows, metrics in report order.
pub fn metric_csv(evaluations: &[ModelEvaluation]) -> String {
    let mut out = String::from("model,metric,aggregate,n_users\n");
    for e in evaluations {
        for m in Metric::ALL {
            writeln!(out, "{},{},{},{}", csv_field(&e.model), m, e.aggregate(m), e.n_users).unwrap();
        }
    }
    out
}

/// `model,metric,user_id,value` rows of every per-user metric.
pub fn per_user_csv(evaluations: &[ModelEvaluation]) -> String {
    let mut out = String::from("model,metric,user_id,value\n");
    for e in evaluations {
        for (m, v) in &e.per_user {
            for (u, x) in &v.values {
                writeln!(out, "{},{},{},{}", csv_field(&e.model), m, csv_field(u), x).unwrap();
            }
        }
    }
    out
}
