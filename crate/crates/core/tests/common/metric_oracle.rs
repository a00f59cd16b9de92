//! Naive reference loops for every metric on random instances.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use receval::corpus::{Interaction, InteractionLog};
use receval::metrics::{evaluate_lists, Metric, PopularityProfile, RelevanceJudgments};

pub const K: usize = 10;
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Instance {
    pub n_items: usize,
    pub train: Vec<(usize, usize)>,
    pub relevant: BTreeMap<usize, BTreeSet<usize>>,
    pub lists: BTreeMap<usize, Vec<usize>>,
}

pub fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=20, 10usize..=50).prop_flat_map(|(n_users, n_items)| {
        let profile = proptest::collection::btree_set(0..n_items, 1..=12);
        let test = proptest::collection::btree_set(0..n_items, 0..=6);
        let list = proptest::sample::subsequence((0..n_items).collect::<Vec<_>>(), 0..=n_items.min(15)).prop_shuffle();
        proptest::collection::vec((profile, test, list), n_users).prop_map(move |users| {
            let mut train = Vec::new();
            let mut relevant = BTreeMap::new();
            let mut lists = BTreeMap::new();
            for (u, (p, t, l)) in users.into_iter().enumerate() {
                train.extend(p.iter().map(|&i| (u, i)));
                relevant.insert(u, t.difference(&p).copied().collect());
                lists.insert(u, l);
            }
            Instance {
                n_items,
                train,
                relevant,
                lists,
            }
        })
    })
}

pub fn uid(u: usize) -> String {
    format!("u{u:02}")
}

pub fn iid(i: usize) -> String {
    format!("i{i:02}")
}

pub struct Reference {
    pub per_user: BTreeMap<&'static str, Vec<f64>>,
    pub gini: Option<f64>,
    pub coverage: f64,
}

pub fn log2(x: f64) -> f64 {
    x.ln() / 2f64.ln()
}

pub fn reference(inst: &Instance) -> Reference {
    let n = inst.n_items;
    let mut count = vec![0usize; n];
    let mut users = BTreeSet::new();
    for &(u, i) in &inst.train {
        count[i] += 1;
        users.insert(u);
    }
    let total = inst.train.len() as f64;
    let n_users = users.len() as f64;

    // head: ceil(0.2 n) items by count desc then id asc, via repeated max
    let head_size = (0.2 * n as f64).ceil() as usize;
    let mut head = vec![false; n];
    for _ in 0..head_size {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if head[i] {
                continue;
            }
            best = match best {
                Some(b) if count[b] >= count[i] => Some(b),
                _ => Some(i),
            };
        }
        head[best.unwrap()] = true;
    }

    let mut per_user: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut rec_count = vec![0usize; n];
    let mut covered = BTreeSet::new();
    for (u, rel) in &inst.relevant {
        if rel.is_empty() {
            continue;
        }
        let list: Vec<usize> = inst.lists[u].iter().copied().take(K).collect();
        for &i in &list {
            rec_count[i] += 1;
            covered.insert(i);
        }
        let mut dcg = 0.0;
        let mut hits = 0.0;
        let mut epc = 0.0;
        let mut efd = 0.0;
        let mut norm = 0.0;
        for (pos, &i) in list.iter().enumerate() {
            let d = 1.0 / log2(pos as f64 + 2.0);
            norm += d;
            if rel.contains(&i) {
                dcg += d;
                hits += 1.0;
                epc += d * (1.0 - count[i] as f64 / n_users);
                let c = if count[i] == 0 { 0.5 } else { count[i] as f64 };
                efd += d * -log2(c / total);
            }
        }
        let mut idcg = 0.0;
        for pos in 0..rel.len().min(K) {
            idcg += 1.0 / log2(pos as f64 + 2.0);
        }
        let tail = list.iter().filter(|&&i| !head[i]).count() as f64;
        let arp = if list.is_empty() {
            0.0
        } else {
            list.iter().map(|&i| count[i] as f64).sum::<f64>() / list.len() as f64
        };
        let mut push = |name: &'static str, v: f64| per_user.entry(name).or_default().push(v);
        push("nDCG", dcg / idcg);
        push("Recall", hits / rel.len() as f64);
        push("Precision", hits / K as f64);
        push("EPC", if norm == 0.0 { 0.0 } else { epc / norm });
        push("EFD", if norm == 0.0 { 0.0 } else { efd / norm });
        push("APLT", tail / K as f64);
        push("ARP", arp);
    }

    // Gini via mean absolute difference, rescaled to the n - 1 convention
    let sum: usize = rec_count.iter().sum();
    let gini = if sum == 0 {
        None
    } else {
        let mut mad = 0.0;
        for a in &rec_count {
            for b in &rec_count {
                mad += (*a as f64 - *b as f64).abs();
            }
        }
        let mean = sum as f64 / n as f64;
        let g = mad / (2.0 * (n * n) as f64 * mean) * n as f64 / (n as f64 - 1.0);
        Some(1.0 - g)
    };
    Reference {
        per_user,
        gini,
        coverage: covered.len() as f64,
    }
}

pub fn build(
    inst: &Instance,
) -> (
    InteractionLog,
    RelevanceJudgments,
    PopularityProfile,
    BTreeMap<String, Vec<String>>,
) {
    let train = InteractionLog::from_records(inst.train.iter().map(|&(u, i)| Interaction::new(uid(u), iid(i), 1.0)));
    let rel = RelevanceJudgments::new(
        inst.relevant
            .iter()
            .map(|(u, r)| (uid(*u), r.iter().map(|&i| iid(i)).collect()))
            .collect(),
    );
    let catalog: Vec<String> = (0..inst.n_items).map(iid).collect();
    let pop = PopularityProfile::new(&train, catalog.iter().map(String::as_str), 0.2).unwrap();
    let lists = inst
        .lists
        .iter()
        .map(|(u, l)| (uid(*u), l.iter().map(|&i| iid(i)).collect()))
        .collect();
    (train, rel, pop, lists)
}

/// Compares the suite against [`reference`] on one instance.
pub fn check(inst: &Instance) -> Result<(), String> {
    let (_, rel, pop, lists) = build(inst);
    let want = reference(inst);
    let got = evaluate_lists("m", &lists, &rel, &pop, K);
    let Some(gini) = want.gini else {
        return match got {
            Err(_) => Ok(()),
            Ok(_) => Err("expected an empty-result error".into()),
        };
    };
    let got = got.map_err(|e| e.to_string())?;
    for m in Metric::ALL.into_iter().filter(|m| m.is_per_user()) {
        let values: Vec<f64> = got.per_user[&m].values.values().copied().collect();
        let reference = &want.per_user[m.name()];
        if values.len() != reference.len() {
            return Err(format!("{m}: {} users vs {}", values.len(), reference.len()));
        }
        for (a, b) in values.iter().zip(reference) {
            if (a - b).abs() > TOL {
                return Err(format!("{m}: {a} vs {b}"));
            }
        }
        let mean = reference.iter().sum::<f64>() / reference.len() as f64;
        if (got.aggregate(m) - mean).abs() > TOL {
            return Err(format!("{m} mean: {} vs {mean}", got.aggregate(m)));
        }
    }
    if (got.aggregate(Metric::Gini) - gini).abs() > TOL {
        return Err(format!("Gini: {} vs {gini}", got.aggregate(Metric::Gini)));
    }
    if got.aggregate(Metric::ItemCv) != want.coverage {
        return Err(format!(
            "ItemCV: {} vs {}",
            got.aggregate(Metric::ItemCv),
            want.coverage
        ));
    }
    Ok(())
}
