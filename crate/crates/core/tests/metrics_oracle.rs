//! Every metric against naive reference loops on random instances.

mod common;

use common::metric_oracle::{build, check, iid, instance, uid, K};
use proptest::prelude::*;
use proptest::test_runner::Config;
use receval::corpus::{Interaction, InteractionLog};
use receval::metrics::{evaluate_lists, Metric, PopularityProfile};
use receval::recommenders::{fit, recommend_all, ModelConfig, SparseInteractionMatrix};

proptest! {
    #![proptest_config(Config::with_cases(1000))]

    #[test]
    fn suite_matches_reference(inst in instance()) {
        prop_assert!(check(&inst).is_ok(), "{:?}", check(&inst));
    }
    #[test]
    fn metric_ranges_hold(inst in instance()) {
        let (_, rel, pop, lists) = build(&inst);
        if let Ok(e) = evaluate_lists("m", &lists, &rel, &pop, K) {
            for m in [Metric::Ndcg, Metric::Recall, Metric::Precision, Metric::Epc, Metric::Aplt, Metric::Gini] {
                let v = e.aggregate(m);
                prop_assert!((0.0..=1.0).contains(&v), "{} = {}", m, v);
            }
            prop_assert!(e.aggregate(Metric::Efd) >= 0.0);
            prop_assert!(e.aggregate(Metric::Arp) >= 0.0);
            prop_assert!(e.aggregate(Metric::ItemCv) <= pop.catalog_size() as f64);
        }
    }
}

/// Random 15 users x 30 items with every user holding 3..10 items.
fn random_train(seed: u64) -> InteractionLog {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut recs = Vec::new();
    for u in 0..15 {
        let n = r.random_range(3..=10);
        for _ in 0..n {
            let i = (r.random::<f64>().powi(2) * 30.0) as usize;
            recs.push(Interaction::new(uid(u), iid(i), 1.0));
        }
    }
    InteractionLog::from_records(recs)
}

#[test]
fn most_pop_has_the_highest_arp() {
    for seed in 0..40 {
        let train = random_train(seed);
        let catalog: Vec<String> = (0..30).map(iid).collect();
        let m = SparseInteractionMatrix::new(&train, catalog.iter().map(String::as_str));
        let pop = PopularityProfile::new(&train, catalog.iter().map(String::as_str), 0.2).unwrap();
        let users: Vec<String> = m.user_ids().to_vec();
        let arp_of = |cfg: &ModelConfig| {
            let model = fit(cfg, &m, None).unwrap();
            let lists = recommend_all(model.as_ref(), &m, users.iter().map(String::as_str), K).unwrap();
            let ids: Vec<Vec<String>> = lists
                .values()
                .map(|l| l.item_ids().map(str::to_string).collect())
                .collect();
            receval::metrics::arp(&ids, &pop, K)
        };
        let most_pop = arp_of(&ModelConfig::MostPop);
        for cfg in [
            ModelConfig::Random { seed },
            ModelConfig::ItemKnn { neighbors: 5 },
            ModelConfig::UserKnn { neighbors: 5 },
            ModelConfig::Rp3Beta { alpha: 1.0, beta: 0.5 },
            ModelConfig::Ease { lambda: 10.0 },
        ] {
            let other = arp_of(&cfg);
            assert!(
                most_pop >= other - 1e-12,
                "seed {seed} {}: {most_pop} < {other}",
                cfg.name()
            );
        }
    }
}
