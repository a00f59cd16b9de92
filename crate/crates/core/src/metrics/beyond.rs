use std::collections::{BTreeSet, HashMap, HashSet};

use super::{discount, PopularityProfile};
use crate::error::{Error, Result};

/// Number of distinct items across the first `k` entries of every list.
pub fn item_coverage<L, S>(lists: impl IntoIterator<Item = L>, k: usize) -> usize
where
    L: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut seen: HashSet<String> = HashSet::new();
    for l in lists {
        for i in l.as_ref().iter().take(k) {
            if !seen.contains(i.as_ref()) {
                seen.insert(i.as_ref().to_string());
            }
        }
    }
    seen.len()
}

/// `1 - Gini` of per-item recommendation counts over the whole catalog,
/// zero counts included, with an `n - 1` denominator. Items outside the
/// catalog are ignored.
pub fn gini_concentration<L, S>(lists: impl IntoIterator<Item = L>, pop: &PopularityProfile, k: usize) -> Result<f64>
where
    L: AsRef<[S]>,
    S: AsRef<str>,
{
    let n = pop.catalog_size();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Gini needs at least 2 catalog items, got {n}"
        )));
    }
    let index: HashMap<&str, usize> = pop.catalog().iter().enumerate().map(|(o, i)| (i.as_str(), o)).collect();
    let mut counts = vec![0u64; n];
    for l in lists {
        for i in l.as_ref().iter().take(k) {
            if let Some(&o) = index.get(i.as_ref()) {
                counts[o] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyResult(
            "no recommendations to measure concentration on".into(),
        ));
    }
    counts.sort_unstable();
    let nf = n as f64;
    let numer: f64 = counts
        .iter()
        .enumerate()
        .map(|(j, &c)| (2.0 * (j + 1) as f64 - nf - 1.0) * c as f64)
        .sum();
    let gini = numer / ((nf - 1.0) * total as f64);
    Ok((1.0 - gini).clamp(0.0, 1.0))
}

/// Discount-weighted mean of `gain` over relevant entries, normalized by
/// the discount mass of the (cut) list.
fn relevance_weighted<S: AsRef<str>>(
    list: &[S],
    relevant: &BTreeSet<String>,
    k: usize,
    gain: impl Fn(&str) -> f64,
) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let cut = &list[..list.len().min(k)];
    let norm: f64 = (1..=cut.len()).map(discount).sum();
    if norm == 0.0 {
        return Some(0.0);
    }
    let num: f64 = cut
        .iter()
        .enumerate()
        .filter(|(_, i)| relevant.contains(i.as_ref()))
        .map(|(r, i)| discount(r + 1) * gain(i.as_ref()))
        .sum();
    Some(num / norm)
}

/// Expected popularity complement: relevant hits weighted by `1 - p_seen`.
pub fn epc_at_k<S: AsRef<str>>(
    list: &[S],
    relevant: &BTreeSet<String>,
    pop: &PopularityProfile,
    k: usize,
) -> Option<f64> {
    relevance_weighted(list, relevant, k, |i| 1.0 - pop.p_seen(i))
}

/// Expected free discovery: relevant hits weighted by `-log2 p(i)`.
pub fn efd_at_k<S: AsRef<str>>(
    list: &[S],
    relevant: &BTreeSet<String>,
    pop: &PopularityProfile,
    k: usize,
) -> Option<f64> {
    relevance_weighted(list, relevant, k, |i| -pop.interaction_probability(i).log2())
}

/// Share of the `k` slots filled with long-tail items.
pub fn aplt_user<S: AsRef<str>>(list: &[S], pop: &PopularityProfile, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let tail = list.iter().take(k).filter(|i| !pop.is_head(i.as_ref())).count();
    tail as f64 / k as f64
}

/// Mean train count of the recommended items; 0 for an empty list.
pub fn arp_user<S: AsRef<str>>(list: &[S], pop: &PopularityProfile, k: usize) -> f64 {
    let cut = &list[..list.len().min(k)];
    if cut.is_empty() {
        return 0.0;
    }
    cut.iter().map(|i| pop.count(i.as_ref()) as f64).sum::<f64>() / cut.len() as f64
}

fn mean_over<L, S>(lists: impl IntoIterator<Item = L>, f: impl Fn(&[S]) -> f64) -> f64
where
    L: AsRef<[S]>,
{
    let (mut sum, mut n) = (0.0, 0usize);
    for l in lists {
        sum += f(l.as_ref());
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn aplt<L, S>(lists: impl IntoIterator<Item = L>, pop: &PopularityProfile, k: usize) -> f64
where
    L: AsRef<[S]>,
    S: AsRef<str>,
{
    mean_over(lists, |l| aplt_user(l, pop, k))
}

pub fn arp<L, S>(lists: impl IntoIterator<Item = L>, pop: &PopularityProfile, k: usize) -> f64
where
    L: AsRef<[S]>,
    S: AsRef<str>,
{
    mean_over(lists, |l| arp_user(l, pop, k))
}
