use std::collections::BTreeSet;

use super::discount;

/// Binary-relevance nDCG of the first `k` entries. `None` when the user
/// has no relevant items.
pub fn ndcg_at_k<S: AsRef<str>>(list: &[S], relevant: &BTreeSet<String>, k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let dcg: f64 = list
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.contains(i.as_ref()))
        .map(|(r, _)| discount(r + 1))
        .sum();
    let idcg: f64 = (1..=relevant.len().min(k)).map(discount).sum();
    if idcg == 0.0 {
        return Some(0.0);
    }
    Some(dcg / idcg)
}

/// `(hits / k, hits / |relevant|)` over the first `k` entries.
pub fn precision_recall_at_k<S: AsRef<str>>(list: &[S], relevant: &BTreeSet<String>, k: usize) -> Option<(f64, f64)> {
    if relevant.is_empty() || k == 0 {
        return None;
    }
    let hits = list.iter().take(k).filter(|i| relevant.contains(i.as_ref())).count() as f64;
    Some((hits / k as f64, hits / relevant.len() as f64))
}
