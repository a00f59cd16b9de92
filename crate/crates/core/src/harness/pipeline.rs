use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::cold_start::{cold_start_filter, truncate_histories};
use super::manifest::{ColdStartMode, ItemsFormat, LlmSpec, ModelSpec, RunManifest, Scenario};
use super::report::{EvaluationReport, ModelRow, PairTest};
use crate::corpus::{
    apply_kcore, carve_validation, dataset_stats, file_sha256, parse_attributes, parse_interactions, parse_item_names,
    parse_movielens_items, split_holdout, DatasetStats, InteractionLog, ItemCatalog, SplitPair,
};
use crate::error::{Error, Result, StageExt};
use crate::llm_bridge::{
    parse_recommendation_lines, render_prompt, ChatBackend, ChatMessage, ChatMode, ChatRequest, ChatSession,
    EndpointConfig, HttpBackend, RawRecommendationList, TranscriptCache,
};
use crate::matching::{ExternalStats, ResolvedList, Resolver};
use crate::metrics::{evaluate_lists, paired_t_test, Metric, ModelEvaluation, PopularityProfile, RelevanceJudgments};
use crate::recommenders::{
    default_grid, fit, recommend_all, tune_hyperparameters, ModelConfig, RankedItem, RankedList, RankedListFile,
    SparseInteractionMatrix, TuningOutcome,
};
use crate::rng;

/// Ingested, k-cored and split data.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub raw_stats: DatasetStats,
    pub stats: DatasetStats,
    pub log: InteractionLog,
    pub split: SplitPair,
    pub catalog: ItemCatalog,
    pub checksums: BTreeMap<String, String>,
}

fn path_key(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

/// sha256 of every input file, keyed by the path as written in the
/// manifest; fails on a mismatch with pinned checksums.
pub fn input_checksums(m: &RunManifest) -> Result<BTreeMap<String, String>> {
    let d = &m.dataset;
    let mut out = BTreeMap::new();
    for p in std::iter::once(&d.interactions).chain(&d.items).chain(&d.attributes) {
        let got = file_sha256(m.resolve(p))?;
        let key = path_key(p);
        if let Some(want) = d.checksums.get(&key) {
            if !want.eq_ignore_ascii_case(&got) {
                return Err(Error::InvalidArgument(format!(
                    "{key}: sha256 {got} does not match pinned {want}"
                )));
            }
        }
        out.insert(key, got);
    }
    Ok(out)
}

/// Item names and attributes from the manifest's item files.
pub fn load_catalog(m: &RunManifest) -> Result<ItemCatalog> {
    let d = &m.dataset;
    let mut catalog = match &d.items {
        Some(p) => match d.items_format {
            ItemsFormat::Movielens => parse_movielens_items(m.resolve(p))?,
            ItemsFormat::Names => parse_item_names(m.resolve(p))?,
        },
        None => ItemCatalog::new(),
    };
    if let Some(p) = &d.attributes {
        catalog.merge(parse_attributes(m.resolve(p))?);
    }
    Ok(catalog)
}

pub fn prepare(m: &RunManifest) -> Result<PreparedData> {
    let run = || -> Result<PreparedData> {
        let checksums = input_checksums(m)?;
        let raw = parse_interactions(m.resolve(&m.dataset.interactions), m.dataset.format)?;
        let raw_stats = dataset_stats(&raw)?;
        let log = apply_kcore(&raw, m.dataset.kcore);
        let stats = dataset_stats(&log)?;
        let split = split_holdout(&log, m.split.ratio, m.split.seed)?;
        let catalog = load_catalog(m)?.restrict(log.items());
        Ok(PreparedData {
            raw_stats,
            stats,
            log,
            split,
            catalog,
            checksums,
        })
    };
    run().stage("prep", || m.dataset.id.clone())
}

/// What every model is fitted on and scored against.
pub struct EvalContext {
    pub fit_train: InteractionLog,
    /// Train items per user in log order.
    pub histories: BTreeMap<String, Vec<String>>,
    pub matrix: SparseInteractionMatrix,
    pub relevance: RelevanceJudgments,
    pub popularity: PopularityProfile,
    /// Users that get recommendations, ascending.
    pub users: Vec<String>,
    pub catalog: ItemCatalog,
}

/// Applies the scenario to `split`. Under cold-start filtering, models still
/// fit on the full train side and only the evaluated users change.
pub fn build_context(m: &RunManifest, split: &SplitPair, catalog: ItemCatalog) -> Result<EvalContext> {
    let run = || -> Result<EvalContext> {
        let items: BTreeSet<String> = split.union().items().into_iter().map(str::to_string).collect();
        let e = &m.evaluation;
        let (fit_train, test) = match (e.scenario, e.cold_start_mode) {
            (Scenario::Full, _) => (split.train.clone(), split.test.clone()),
            (Scenario::ColdStart, ColdStartMode::Filter) => {
                (split.train.clone(), cold_start_filter(split, e.cold_start_max)?.test)
            }
            (Scenario::ColdStart, ColdStartMode::Truncate) => {
                let t = truncate_histories(split, e.cold_start_max)?;
                (t.train, t.test)
            }
        };
        let mut relevance = RelevanceJudgments::from_test(&test);
        relevance.check_disjoint(&fit_train)?;
        let mut users: Vec<String> = relevance.evaluable_users().map(str::to_string).collect();
        if let Some(n) = e.user_sample.filter(|&n| n < users.len()) {
            users.shuffle(&mut rng::stream(m.split.seed, "user-sample"));
            users.truncate(n);
            users.sort();
            relevance = relevance.restrict(&users.iter().cloned().collect());
        }
        if users.is_empty() {
            return Err(Error::NoQualifyingUsers);
        }
        let popularity = PopularityProfile::new(&fit_train, items.iter().map(String::as_str), e.head_fraction)?;
        let matrix = SparseInteractionMatrix::new(&fit_train, items.iter().map(String::as_str));
        let histories = fit_train
            .profiles()
            .into_iter()
            .map(|(u, items)| (u.to_string(), items.into_iter().map(str::to_string).collect()))
            .collect();
        Ok(EvalContext {
            histories,
            fit_train,
            matrix,
            relevance,
            popularity,
            users,
            catalog,
        })
    };
    run().stage("prep", || format!("{} scenario", m.evaluation.scenario))
}

/// Report labels of the baselines, in manifest order. Kinds listed more
/// than once get a `#n` suffix.
pub fn baseline_labels(m: &RunManifest) -> Vec<String> {
    let kinds: Vec<_> = m
        .models
        .iter()
        .map(|s| match s {
            ModelSpec::Tune { tune } => *tune,
            ModelSpec::Fixed(c) => c.kind(),
        })
        .collect();
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let total = kinds.iter().filter(|x| *x == k).count();
            if total == 1 {
                k.display_name().to_string()
            } else {
                let nth = kinds[..=i].iter().filter(|x| *x == k).count();
                format!("{} #{nth}", k.display_name())
            }
        })
        .collect()
}

/// Train matrix and judgments of a validation split carved from `train`.
fn validation_setup(
    train: &InteractionLog,
    items: &[String],
    ratio: f64,
    seed: u64,
) -> Result<(SparseInteractionMatrix, RelevanceJudgments)> {
    let v = carve_validation(train, ratio, seed)?;
    let matrix = SparseInteractionMatrix::new(&v.train, items.iter().map(String::as_str));
    Ok((matrix, RelevanceJudgments::from_test(&v.test)))
}

pub struct BaselineRun {
    pub label: String,
    pub config: ModelConfig,
    pub tuning: Option<TuningOutcome>,
    pub lists: RankedListFile,
}

pub fn run_baselines(m: &RunManifest, ctx: &EvalContext) -> Result<Vec<BaselineRun>> {
    let k = m.evaluation.cutoff;
    let labels = baseline_labels(m);
    let validation = match &m.tuning {
        Some(t) if m.models.iter().any(|s| matches!(s, ModelSpec::Tune { .. })) => Some(
            validation_setup(&ctx.fit_train, ctx.matrix.item_ids(), t.validation_ratio, t.seed)
                .stage("recommend", || "validation split".into())?,
        ),
        _ => None,
    };
    m.models
        .iter()
        .zip(labels)
        .map(|(spec, label)| {
            let run = || -> Result<BaselineRun> {
                let (config, tuning) = match spec {
                    ModelSpec::Fixed(c) => (c.clone(), None),
                    ModelSpec::Tune { tune } => {
                        let (vm, vrel) = validation.as_ref().expect("validation split built for tuning");
                        let grid = default_grid(*tune, m.split.seed);
                        let outcome = tune_hyperparameters(&grid, vm, vrel, Some(&ctx.catalog), k)?;
                        (outcome.best.clone(), Some(outcome))
                    }
                };
                let model = fit(&config, &ctx.matrix, Some(&ctx.catalog))?;
                let lists = recommend_all(model.as_ref(), &ctx.matrix, ctx.users.iter().map(String::as_str), k)?;
                Ok(BaselineRun {
                    lists: RankedListFile {
                        model: label.clone(),
                        config_hash: config.config_hash(),
                        cutoff: k,
                        lists,
                    },
                    label: label.clone(),
                    config,
                    tuning,
                })
            };
            run().stage("recommend", || label.clone())
        })
        .collect()
}

pub struct LlmRun {
    pub label: String,
    pub raw: Vec<RawRecommendationList>,
    pub resolved: Vec<ResolvedList>,
    /// Matched items dropped because the user already has them in train.
    pub seen_removed: usize,
    /// Prompts whose history was cut to fit the character budget.
    pub truncated_prompts: usize,
    pub stats: ExternalStats,
    pub lists: RankedListFile,
}

/// Chat session for the manifest's `[chat]` section. Without an explicit
/// backend, live and record modes talk to the endpoint named in the
/// environment.
pub fn open_session(m: &RunManifest, backend: Option<Box<dyn ChatBackend>>) -> Result<ChatSession> {
    let chat = m
        .chat
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("manifest has no [chat] section".into()))?;
    let cache = TranscriptCache::new(m.resolve(&chat.transcripts));
    let backend = match (chat.mode, backend) {
        (ChatMode::Replay, _) => None,
        (_, Some(b)) => Some(b),
        (_, None) => {
            let config = EndpointConfig {
                max_in_flight: chat.max_in_flight,
                ..EndpointConfig::from_env()?
            };
            Some(Box::new(HttpBackend::new(config)?) as Box<dyn ChatBackend>)
        }
    };
    let cache = (chat.mode != ChatMode::Live).then_some(cache);
    ChatSession::new(chat.mode, cache, backend)
}

fn spec_hash<T: Serialize>(v: &T) -> String {
    let json = serde_json::to_string(v).expect("manifest entries serialize");
    hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
}

/// The chat request for one user's train history.
pub fn llm_request(spec: &LlmSpec, ctx: &EvalContext, user: &str) -> Result<(ChatRequest, bool)> {
    let history: Vec<String> = ctx
        .histories
        .get(user)
        .ok_or_else(|| Error::UnknownUser(user.to_string()))?
        .iter()
        .map(|i| ctx.catalog.name(i).unwrap_or(i).to_string())
        .collect();
    let prompt = render_prompt(&spec.prompt, &history)?;
    let request = ChatRequest {
        model: spec.model.clone(),
        temperature: spec.temperature,
        max_tokens: spec.max_tokens,
        messages: vec![ChatMessage::user(prompt.text)],
    };
    Ok((request, prompt.truncated > 0))
}

/// Prompts, parses and resolves a list for every evaluated user.
pub fn run_llm(m: &RunManifest, spec: &LlmSpec, ctx: &EvalContext, session: &ChatSession) -> Result<LlmRun> {
    let resolver = Resolver::new(&ctx.catalog, &ctx.popularity, m.threshold)
        .stage("llm", || format!("{} resolver", spec.label))?;
    let per_user: Vec<(RawRecommendationList, ResolvedList, bool)> = ctx
        .users
        .par_iter()
        .map(|user| {
            let run = || -> Result<_> {
                let (request, truncated) = llm_request(spec, ctx, user)?;
                let response = session.chat_complete(&request)?;
                let raw = parse_recommendation_lines(&response).with_source(user.as_str(), request.replay_key());
                if raw.malformed {
                    log::warn!("{}: malformed response for user {user}", spec.label);
                }
                let resolved = resolver.resolve_list(&raw);
                Ok((raw, resolved, truncated))
            };
            run().stage("llm", || format!("{} user {user}", spec.label))
        })
        .collect::<Result<_>>()?;

    let mut seen_removed = 0;
    let mut lists = BTreeMap::new();
    for (_, resolved, _) in &per_user {
        let u = ctx.matrix.user_ordinal(&resolved.user)?;
        let seen = ctx.matrix.row(u);
        let items: Vec<RankedItem> = resolved
            .items
            .iter()
            .filter(|i| {
                let keep = ctx
                    .matrix
                    .item_ordinal(i)
                    .is_none_or(|o| seen.binary_search(&o).is_err());
                seen_removed += usize::from(!keep);
                keep
            })
            .enumerate()
            .map(|(pos, item)| RankedItem {
                item: item.clone(),
                score: 1.0 / (pos + 1) as f64,
            })
            .collect();
        lists.insert(
            resolved.user.clone(),
            RankedList {
                user: resolved.user.clone(),
                items,
                cutoff: spec.prompt.list_length,
            },
        );
    }
    let truncated_prompts = per_user.iter().filter(|(_, _, t)| *t).count();
    let (raw, resolved): (Vec<_>, Vec<_>) = per_user.into_iter().map(|(r, s, _)| (r, s)).unzip();
    Ok(LlmRun {
        label: spec.label.clone(),
        stats: ExternalStats::from_lists(&resolved, m.evaluation.cutoff),
        lists: RankedListFile {
            model: spec.label.clone(),
            config_hash: spec_hash(spec),
            cutoff: spec.prompt.list_length,
            lists,
        },
        raw,
        resolved,
        seen_removed,
        truncated_prompts,
    })
}

/// Item ids per user, as scored by the metric suite.
pub fn id_lists(file: &RankedListFile) -> BTreeMap<String, Vec<String>> {
    file.lists
        .iter()
        .map(|(u, l)| (u.clone(), l.item_ids().map(str::to_string).collect()))
        .collect()
}

/// Pairwise paired t-tests over every per-user metric, in model order.
pub fn significance_matrix(evaluations: &[ModelEvaluation]) -> Result<Vec<PairTest>> {
    let mut out = Vec::new();
    for (i, a) in evaluations.iter().enumerate() {
        for b in &evaluations[i + 1..] {
            for metric in Metric::ALL.into_iter().filter(|m| m.is_per_user()) {
                let (va, vb) = (&a.per_user[&metric], &b.per_user[&metric]);
                if va.values.len() < 2 {
                    log::warn!("{} vs {}: fewer than two users, no t-test", a.model, b.model);
                    continue;
                }
                let t = paired_t_test(va, vb)?;
                out.push(PairTest {
                    a: a.model.clone(),
                    b: b.model.clone(),
                    metric,
                    t: t.t,
                    df: t.df,
                    p: t.p,
                });
            }
        }
    }
    Ok(out)
}

/// Scores every model's lists and assembles the report.
pub fn evaluate_runs(
    m: &RunManifest,
    ctx: &EvalContext,
    stats: DatasetStats,
    checksums: BTreeMap<String, String>,
    lists: &[RankedListFile],
    external: BTreeMap<String, ExternalStats>,
) -> Result<(EvaluationReport, Vec<ModelEvaluation>)> {
    let k = m.evaluation.cutoff;
    let evaluations: Vec<ModelEvaluation> = lists
        .iter()
        .map(|f| {
            evaluate_lists(&f.model, &id_lists(f), &ctx.relevance, &ctx.popularity, k).stage("eval", || f.model.clone())
        })
        .collect::<Result<_>>()?;
    let significance = significance_matrix(&evaluations).stage("eval", || "significance".into())?;
    let rows = evaluations
        .iter()
        .map(|e| ModelRow {
            model: e.model.clone(),
            n_users: e.n_users,
            missing_lists: e.missing_lists,
            aggregates: e.aggregates.clone(),
        })
        .collect();
    let report = EvaluationReport {
        dataset: m.dataset.id.clone(),
        scenario: m.evaluation.scenario,
        cutoff: k,
        tool_version: m.tool_version.clone(),
        stats,
        checksums,
        n_users: ctx.relevance.evaluable_users().count(),
        excluded_users: ctx.relevance.users_without_relevance(),
        rows,
        significance,
        references: m.llm.iter().map(|l| l.label.clone()).collect(),
        significance_level: m.evaluation.significance_level,
        external,
    };
    report.validate().stage("eval", || "report".into())?;
    Ok((report, evaluations))
}

/// Everything one end-to-end run produced.
pub struct ScenarioRun {
    pub prepared: PreparedData,
    pub baselines: Vec<BaselineRun>,
    pub llm: Vec<LlmRun>,
    pub evaluations: Vec<ModelEvaluation>,
    pub report: EvaluationReport,
}

impl ScenarioRun {
    /// Item ids per user for `model`.
    pub fn lists(&self, model: &str) -> Option<BTreeMap<String, Vec<String>>> {
        self.baselines
            .iter()
            .map(|b| &b.lists)
            .chain(self.llm.iter().map(|l| &l.lists))
            .find(|f| f.model == model)
            .map(id_lists)
    }
}

/// prep, recommend, llm, eval in memory.
pub fn run_scenario(m: &RunManifest) -> Result<ScenarioRun> {
    run_scenario_with(m, None)
}

pub fn run_scenario_with(m: &RunManifest, backend: Option<Box<dyn ChatBackend>>) -> Result<ScenarioRun> {
    let prepared = prepare(m)?;
    let ctx = build_context(m, &prepared.split, prepared.catalog.clone())?;
    let baselines = run_baselines(m, &ctx)?;
    let llm = if m.llm.is_empty() {
        Vec::new()
    } else {
        let session = open_session(m, backend).stage("llm", || "chat session".into())?;
        m.llm
            .iter()
            .map(|spec| run_llm(m, spec, &ctx, &session))
            .collect::<Result<Vec<_>>>()?
    };
    let files: Vec<RankedListFile> = baselines
        .iter()
        .map(|b| b.lists.clone())
        .chain(llm.iter().map(|l| l.lists.clone()))
        .collect();
    let external = llm.iter().map(|l| (l.label.clone(), l.stats.clone())).collect();
    let (report, evaluations) = evaluate_runs(m, &ctx, prepared.stats, prepared.checksums.clone(), &files, external)?;
    Ok(ScenarioRun {
        prepared,
        baselines,
        llm,
        evaluations,
        report,
    })
}
