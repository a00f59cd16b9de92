//! Stage functions that persist their outputs under the run directory, so
//! the CLI can run prep, recommend, llm, eval and report separately.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::manifest::RunManifest;
use super::pipeline::{
    build_context, evaluate_runs, load_catalog, open_session, prepare, run_baselines, run_llm, BaselineRun,
    EvalContext, LlmRun,
};
use super::report::{emit_report, EvaluationReport, ReportFormat};
use crate::corpus::{read_split, write_file, write_split, DatasetStats};
use crate::error::{Error, Result, StageExt};
use crate::llm_bridge::ChatBackend;
use crate::matching::{write_resolution_audit, ExternalStats};
use crate::metrics::{metric_csv, per_user_csv};
use crate::recommenders::{read_ranked_lists, write_ranked_lists};

/// File locations inside a run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    root: PathBuf,
}

pub(crate) fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn split_dir(&self) -> PathBuf {
        self.root.join("split")
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join("stats.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.toml")
    }

    pub fn lists(&self, label: &str) -> PathBuf {
        self.root.join("lists").join(format!("{}.tsv", slug(label)))
    }

    pub fn tuning(&self) -> PathBuf {
        self.root.join("tuning.csv")
    }

    pub fn llm_dir(&self, label: &str) -> PathBuf {
        self.root.join("llm").join(slug(label))
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn report_json(&self) -> PathBuf {
        self.eval_dir().join("report.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StatsFile {
    raw: DatasetStats,
    kcore: DatasetStats,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    write_file(path, text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

/// Ingests, k-cores and splits; writes the split, stats and the effective
/// manifest.
pub fn prep_stage(m: &RunManifest) -> Result<DatasetStats> {
    let layout = RunLayout::new(m.output_dir());
    let p = prepare(m)?;
    let write = || -> Result<()> {
        write_split(&p.split, m.dataset.kcore, p.checksums.clone(), layout.split_dir())?;
        write_json(
            &layout.stats(),
            &StatsFile {
                raw: p.raw_stats,
                kcore: p.stats,
            },
        )?;
        let mut pinned = m.clone();
        pinned.dataset.checksums = p.checksums.clone();
        write_file(&layout.manifest(), pinned.to_toml()?)
    };
    write().stage("prep", || layout.root().display().to_string())?;
    log::info!("{}: raw {}", m.dataset.id, p.raw_stats);
    log::info!("{}: {}-core {}", m.dataset.id, m.dataset.kcore, p.stats);
    Ok(p.stats)
}

struct OnDisk {
    ctx: EvalContext,
    stats: DatasetStats,
    checksums: BTreeMap<String, String>,
}

fn load_context(m: &RunManifest, layout: &RunLayout) -> Result<OnDisk> {
    let run = || -> Result<OnDisk> {
        let (split, sm) = read_split(layout.split_dir())?;
        if sm.seed != m.split.seed || sm.ratio != m.split.ratio || sm.kcore != m.dataset.kcore {
            return Err(Error::InvalidArgument(format!(
                "split in {} was made with seed {}, ratio {}, k {}; rerun prep",
                layout.split_dir().display(),
                sm.seed,
                sm.ratio,
                sm.kcore
            )));
        }
        let stats: StatsFile = read_json(&layout.stats())?;
        let union = split.union();
        let catalog = load_catalog(m)?.restrict(union.items());
        Ok(OnDisk {
            ctx: build_context(m, &split, catalog)?,
            stats: stats.kcore,
            checksums: sm.source_checksums,
        })
    };
    run().stage("prep", || format!("loading {}", layout.root().display()))
}

fn tuning_csv(runs: &[BaselineRun]) -> String {
    let mut out = String::from("model,config_hash,validation_ndcg,selected,config\n");
    for r in runs {
        let Some(t) = &r.tuning else { continue };
        for (cfg, score) in &t.scores {
            let json = serde_json::to_string(cfg).expect("configs serialize");
            let _ = writeln!(
                out,
                "{},{},{score},{},\"{}\"",
                r.label,
                cfg.config_hash(),
                cfg == &t.best,
                json.replace('"', "\"\"")
            );
        }
    }
    out
}

/// Fits every baseline and writes its ranked lists.
pub fn recommend_stage(m: &RunManifest) -> Result<Vec<BaselineRun>> {
    let layout = RunLayout::new(m.output_dir());
    let disk = load_context(m, &layout)?;
    let runs = run_baselines(m, &disk.ctx)?;
    let write = || -> Result<()> {
        for r in &runs {
            write_ranked_lists(&r.lists, &layout.lists(&r.label))?;
        }
        if runs.iter().any(|r| r.tuning.is_some()) {
            write_file(&layout.tuning(), tuning_csv(&runs))?;
        }
        Ok(())
    };
    write().stage("recommend", || "writing lists".into())?;
    Ok(runs)
}

/// Runs every LLM entry and writes its resolved lists and audit files.
pub fn llm_stage(m: &RunManifest, backend: Option<Box<dyn ChatBackend>>) -> Result<Vec<LlmRun>> {
    if m.llm.is_empty() {
        return Ok(Vec::new());
    }
    let layout = RunLayout::new(m.output_dir());
    let disk = load_context(m, &layout)?;
    let session = open_session(m, backend).stage("llm", || "chat session".into())?;
    let mut runs = Vec::new();
    for spec in &m.llm {
        let run = run_llm(m, spec, &disk.ctx, &session)?;
        let dir = layout.llm_dir(&run.label);
        let write = || -> Result<()> {
            write_ranked_lists(&run.lists, &layout.lists(&run.label))?;
            write_resolution_audit(&run.resolved, dir.join("audit.tsv"))?;
            write_json(&dir.join("raw.json"), &run.raw)?;
            write_json(&dir.join("external.json"), &run.stats)
        };
        write().stage("llm", || format!("writing {}", dir.display()))?;
        runs.push(run);
    }
    Ok(runs)
}

/// Scores the stored lists of every manifest model.
pub fn eval_stage(m: &RunManifest) -> Result<EvaluationReport> {
    let layout = RunLayout::new(m.output_dir());
    let disk = load_context(m, &layout)?;
    let labels: Vec<String> = super::pipeline::baseline_labels(m)
        .into_iter()
        .chain(m.llm.iter().map(|l| l.label.clone()))
        .collect();
    let read = || -> Result<_> {
        let files = labels
            .iter()
            .map(|l| read_ranked_lists(&layout.lists(l)))
            .collect::<Result<Vec<_>>>()?;
        let external = m
            .llm
            .iter()
            .map(|l| {
                let s: ExternalStats = read_json(&layout.llm_dir(&l.label).join("external.json"))?;
                Ok((l.label.clone(), s))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok((files, external))
    };
    let (files, external) = read().stage("eval", || "reading lists".into())?;
    let (report, evaluations) = evaluate_runs(m, &disk.ctx, disk.stats, disk.checksums, &files, external)?;
    let write = || -> Result<()> {
        let dir = layout.eval_dir();
        write_json(&layout.report_json(), &report)?;
        write_file(&dir.join("metrics.csv"), metric_csv(&evaluations))?;
        write_file(&dir.join("per_user.csv"), per_user_csv(&evaluations))
    };
    write().stage("eval", || "writing report".into())?;
    Ok(report)
}

/// Renders the stored report in every requested format.
pub fn report_stage(m: &RunManifest, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let layout = RunLayout::new(m.output_dir());
    let run = || -> Result<Vec<PathBuf>> {
        let report: EvaluationReport = read_json(&layout.report_json())?;
        let mut paths = Vec::new();
        for f in formats {
            paths.extend(emit_report(&report, *f, layout.report_dir())?);
        }
        Ok(paths)
    };
    run().stage("report", || layout.report_dir().display().to_string())
}

/// Every stage in order.
pub fn all_stage(
    m: &RunManifest,
    backend: Option<Box<dyn ChatBackend>>,
    formats: &[ReportFormat],
) -> Result<EvaluationReport> {
    prep_stage(m)?;
    recommend_stage(m)?;
    llm_stage(m, backend)?;
    let report = eval_stage(m)?;
    report_stage(m, formats)?;
    Ok(report)
}
