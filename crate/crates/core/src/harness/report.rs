use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::manifest::Scenario;
use crate::corpus::{write_file, DatasetStats};
use crate::error::{Error, Result};
use crate::matching::ExternalStats;
use crate::metrics::Metric;

/// Markers for reference models, in reference order.
pub const MARKERS: [char; 4] = ['*', '\u{2020}', '\u{2021}', '\u{a7}'];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub n_users: usize,
    pub missing_lists: usize,
    pub aggregates: BTreeMap<Metric, f64>,
}

/// Paired t-test of two models on one per-user metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    #[serde(with = "extended_f64")]
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else {
            Repr::Text(v.to_string()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub scenario: Scenario,
    pub cutoff: usize,
    pub tool_version: String,
    pub stats: DatasetStats,
    /// input path -> sha256
    pub checksums: BTreeMap<String, String>,
    /// Users with at least one relevant item, scored for every model.
    pub n_users: usize,
    /// Users left out for having no relevant test items.
    pub excluded_users: usize,
    pub rows: Vec<ModelRow>,
    pub significance: Vec<PairTest>,
    /// Models whose non-significant differences get marked in tables.
    pub references: Vec<String>,
    pub significance_level: f64,
    pub external: BTreeMap<String, ExternalStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidArgument(format!("unknown report format {s:?}"))),
        }
    }
}

impl EvaluationReport {
    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            if row.aggregates.len() != Metric::ALL.len() || Metric::ALL.iter().any(|m| !row.aggregates.contains_key(m))
            {
                return Err(Error::InvalidArgument(format!("row {} lacks metrics", row.model)));
            }
        }
        if let Some(t) = self.significance.iter().find(|t| !(0.0..=1.0).contains(&t.p)) {
            return Err(Error::InvalidArgument(format!("p value {} outside [0, 1]", t.p)));
        }
        Ok(())
    }

    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn test(&self, a: &str, b: &str, metric: Metric) -> Option<&PairTest> {
        self.significance
            .iter()
            .find(|t| t.metric == metric && ((t.a == a && t.b == b) || (t.a == b && t.b == a)))
    }

    /// Rows by ascending nDCG, ties by name.
    pub fn ranked_rows(&self) -> Vec<&ModelRow> {
        let mut rows: Vec<&ModelRow> = self.rows.iter().collect();
        rows.sort_by(|x, y| {
            let (a, b) = (x.aggregates[&Metric::Ndcg], y.aggregates[&Metric::Ndcg]);
            a.partial_cmp(&b)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| x.model.cmp(&y.model))
        });
        rows
    }

    /// Markers of the references this row does not differ from
    /// significantly on `metric`.
    pub fn markers(&self, model: &str, metric: Metric) -> String {
        if !metric.is_per_user() {
            return String::new();
        }
        self.references
            .iter()
            .zip(MARKERS)
            .filter(|(r, _)| r.as_str() != model)
            .filter(|(r, _)| {
                self.test(model, r, metric)
                    .is_some_and(|t| t.p >= self.significance_level)
            })
            .map(|(_, m)| m)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn cell(metric: Metric, v: f64) -> String {
    if metric == Metric::ItemCv {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per model, ranked by nDCG, metrics in column order.
pub fn render_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("model");
    for m in Metric::ALL {
        let _ = write!(out, ",{m}");
    }
    out.push_str(",n_users\n");
    for row in report.ranked_rows() {
        out.push_str(&csv_field(&row.model));
        for m in Metric::ALL {
            let _ = write!(out, ",{}", cell(m, row.aggregates[&m]));
        }
        let _ = writeln!(out, ",{}", row.n_users);
    }
    out
}

pub fn render_significance_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("model_a,model_b,metric,t,df,p\n");
    for t in &report.significance {
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{},{:.4}",
            csv_field(&t.a),
            csv_field(&t.b),
            t.metric,
            t.t,
            t.df,
            t.p
        );
    }
    out
}

pub fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = format!(
        "# {} ({}, cutoff {}, {} users)\n\n",
        report.dataset, report.scenario, report.cutoff, report.n_users
    );
    let _ = writeln!(out, "{}\n", report.stats);

    out.push_str("| Model |");
    let mut group = "";
    for m in Metric::ALL {
        let g = if m.group() == group { "" } else { m.group() };
        group = m.group();
        if g.is_empty() {
            out.push_str(" |");
        } else {
            let _ = write!(out, " {g} |");
        }
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(Metric::ALL.len()));
    out.push_str("\n| |");
    for m in Metric::ALL {
        let arrow = if m.higher_is_better() { '\u{2191}' } else { '\u{2193}' };
        let _ = write!(out, " **{m}** {arrow} |");
    }
    out.push('\n');
    for row in report.ranked_rows() {
        let _ = write!(out, "| {} |", row.model.replace('|', "\\|"));
        for m in Metric::ALL {
            let _ = write!(
                out,
                " {}{} |",
                cell(m, row.aggregates[&m]),
                report.markers(&row.model, m)
            );
        }
        out.push('\n');
    }
    if !report.references.is_empty() {
        out.push('\n');
        for (r, marker) in report.references.iter().zip(MARKERS) {
            let _ = writeln!(
                out,
                "{marker} no significant difference from {r} (paired t-test, p >= {}).  ",
                report.significance_level
            );
        }
    }
    if !report.external.is_empty() {
        let _ = write!(
            out,
            "\n| Model | Lists | Raw items | External | External rate | First external in top-{} | Median first external rank |\n|---|---:|---:|---:|---:|---:|---:|\n",
            report.cutoff
        );
        for (model, s) in &report.external {
            let median = s
                .median_first_external_rank()
                .map_or_else(|| "-".to_string(), |r| r.to_string());
            let _ = writeln!(
                out,
                "| {model} | {} | {} | {} | {:.4} | {} | {median} |",
                s.lists,
                s.raw_items,
                s.external_items,
                s.external_rate(),
                s.first_external_within_cutoff
            );
        }
    }
    out
}

/// Writes the report files for `format` into `dir` and returns their paths.
pub fn emit_report(report: &EvaluationReport, format: ReportFormat, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let files: Vec<(&str, String)> = match format {
        ReportFormat::Csv => vec![
            ("report.csv", render_csv(report)),
            ("significance.csv", render_significance_csv(report)),
        ],
        ReportFormat::Markdown => vec![("report.md", render_markdown(report))],
    };
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            write_file(&path, text)?;
            Ok(path)
        })
        .collect()
}
