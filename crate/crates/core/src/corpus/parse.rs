use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Interaction, InteractionLog};
use crate::error::{Error, Result};

/// Column conventions of the supported raw interaction files.
///
/// * `movielens-100k`: `u.data`, `user \t item \t rating \t timestamp`
/// * `lastfm-hetrec`: `user_artists.dat`, header `userID \t artistID \t weight`
/// * `facebook-books`: `user \t item \t rating`, optional header
/// * `generic-tsv`: `user \t item [\t weight]`, `#` comments
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    #[serde(rename = "movielens-100k")]
    MovieLens100k,
    LastfmHetrec,
    FacebookBooks,
    GenericTsv,
}

impl DatasetFormat {
    pub const ALL: [DatasetFormat; 4] = [
        DatasetFormat::MovieLens100k,
        DatasetFormat::LastfmHetrec,
        DatasetFormat::FacebookBooks,
        DatasetFormat::GenericTsv,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DatasetFormat::MovieLens100k => "movielens-100k",
            DatasetFormat::LastfmHetrec => "lastfm-hetrec",
            DatasetFormat::FacebookBooks => "facebook-books",
            DatasetFormat::GenericTsv => "generic-tsv",
        }
    }

    fn columns(self) -> (usize, usize) {
        // (minimum, maximum) column count
        match self {
            DatasetFormat::MovieLens100k => (4, 4),
            DatasetFormat::LastfmHetrec => (3, 3),
            DatasetFormat::FacebookBooks => (3, 4),
            DatasetFormat::GenericTsv => (2, 3),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset format {s:?}")))
    }
}

/// Reads an interaction file. Rows with zero weight carry no implicit signal
/// and are dropped; duplicates are merged keeping the maximum weight.
pub fn parse_interactions(path: impl AsRef<Path>, format: DatasetFormat) -> Result<InteractionLog> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&text);
    parse_interactions_str(&text, format, path)
}

pub(crate) fn parse_interactions_str(text: &str, format: DatasetFormat, path: &Path) -> Result<InteractionLog> {
    let (min_cols, max_cols) = format.columns();
    let mut records = Vec::new();
    let mut dropped = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if format == DatasetFormat::GenericTsv && line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if line_no == 1 && is_header(format, &cols) {
            continue;
        }
        if cols.len() < min_cols || cols.len() > max_cols {
            return Err(Error::malformed(
                path,
                line_no,
                format!(
                    "expected {} tab-separated columns for {format}, found {}",
                    if min_cols == max_cols {
                        min_cols.to_string()
                    } else {
                        format!("{min_cols}-{max_cols}")
                    },
                    cols.len()
                ),
            ));
        }
        let (user, item) = (cols[0], cols[1]);
        if user.is_empty() || item.is_empty() {
            return Err(Error::malformed(path, line_no, "empty user or item id"));
        }
        let weight = match cols.get(2) {
            Some(w) => {
                parse_weight(w).ok_or_else(|| Error::malformed(path, line_no, format!("invalid weight {w:?}")))?
            }
            None => 1.0,
        };
        if weight == 0.0 {
            dropped += 1;
            continue;
        }
        records.push(Interaction::new(user, item, weight));
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} zero-weight rows", path.display());
    }
    let log = InteractionLog::from_records(records);
    if log.is_empty() {
        return Err(Error::EmptyResult(format!(
            "{} contains no interactions",
            path.display()
        )));
    }
    Ok(log)
}

fn parse_weight(s: &str) -> Option<f64> {
    let w: f64 = s.parse().ok()?;
    (w.is_finite() && w >= 0.0).then_some(w)
}

fn is_header(format: DatasetFormat, cols: &[&str]) -> bool {
    match format {
        DatasetFormat::LastfmHetrec | DatasetFormat::FacebookBooks => {
            cols.len() >= 3 && parse_weight(cols[2]).is_none()
        }
        _ => false,
    }
}
