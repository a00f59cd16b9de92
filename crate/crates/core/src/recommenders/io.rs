use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{RankedItem, RankedList};
use crate::corpus::write_file;
use crate::error::{Error, Result};

const COLUMNS: &str = "user_id\trank\titem_id\tscore";

/// Ranked lists of one model for many users, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedListFile {
    pub model: String,
    pub config_hash: String,
    pub cutoff: usize,
    pub lists: BTreeMap<String, RankedList>,
}

impl RankedListFile {
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# model: {}\tconfig: {}\tcutoff: {}\n{COLUMNS}\n",
            self.model, self.config_hash, self.cutoff
        );
        for list in self.lists.values() {
            for (rank, r) in list.items.iter().enumerate() {
                writeln!(out, "{}\t{}\t{}\t{}", list.user, rank + 1, r.item, r.score).unwrap();
            }
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::malformed(path, line, message);
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for part in header.trim_start_matches('#').split('\t') {
            if let Some((k, v)) = part.split_once(':') {
                fields.insert(k.trim(), v.trim());
            }
        }
        let field = |k: &str| {
            fields
                .get(k)
                .map(|v| v.to_string())
                .ok_or_else(|| bad(1, format!("header lacks {k:?}")))
        };
        let model = field("model")?;
        let config_hash = field("config")?;
        let cutoff: usize = field("cutoff")?
            .parse()
            .map_err(|_| bad(1, "cutoff is not a count".into()))?;
        match lines.next() {
            Some((_, c)) if c == COLUMNS => {}
            _ => return Err(bad(2, format!("expected column line {COLUMNS:?}"))),
        }

        let mut lists: BTreeMap<String, RankedList> = BTreeMap::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [user, rank, item, score] = cols[..] else {
                return Err(bad(n, format!("expected 4 columns, found {}", cols.len())));
            };
            let rank: usize = rank.parse().map_err(|_| bad(n, format!("bad rank {rank:?}")))?;
            let score: f64 = score.parse().map_err(|_| bad(n, format!("bad score {score:?}")))?;
            let list = lists.entry(user.to_string()).or_insert_with(|| RankedList {
                user: user.to_string(),
                items: Vec::new(),
                cutoff,
            });
            if rank != list.items.len() + 1 {
                return Err(bad(n, format!("rank {rank} out of sequence for user {user}")));
            }
            list.items.push(RankedItem {
                item: item.to_string(),
                score,
            });
        }
        Ok(Self {
            model,
            config_hash,
            cutoff,
            lists,
        })
    }
}

pub fn write_ranked_lists(file: &RankedListFile, path: &Path) -> Result<()> {
    write_file(path, file.to_tsv().as_bytes())
}

pub fn read_ranked_lists(path: &Path) -> Result<RankedListFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RankedListFile::from_tsv(&text, path)
}
