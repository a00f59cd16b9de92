use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::text::collapse_whitespace;

/// Raw item strings pulled out of one response, before catalog resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecommendationList {
    pub user: String,
    pub items: Vec<String>,
    /// Replay key of the transcript the list came from.
    pub transcript_key: Option<String>,
    /// Strings that occur more than once, with their occurrence counts.
    pub duplicates: BTreeMap<String, usize>,
    /// True when no list line could be found.
    pub malformed: bool,
    pub response: String,
}

impl RawRecommendationList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn with_source(mut self, user: impl Into<String>, transcript_key: impl Into<String>) -> Self {
        self.user = user.into();
        self.transcript_key = Some(transcript_key.into());
        self
    }
}

fn marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:\d{1,3}\s*[.):]|[-*+\u{2022}\u{2013}])\s+(.*)$").expect("static regex"))
}

const QUOTES: &[(char, char)] = &[
    ('"', '"'),
    ('\'', '\''),
    ('\u{201c}', '\u{201d}'),
    ('\u{2018}', '\u{2019}'),
    ('`', '`'),
];

fn strip_wrappers(mut s: &str) -> &str {
    loop {
        let before = s;
        s = s.trim();
        for emph in ["**", "__", "*", "_"] {
            if s.len() > 2 * emph.len() && s.starts_with(emph) && s.ends_with(emph) {
                s = &s[emph.len()..s.len() - emph.len()];
            }
        }
        for &(open, close) in QUOTES {
            let mut chars = s.chars();
            if s.chars().count() >= 2 && chars.next() == Some(open) && chars.next_back() == Some(close) {
                s = &s[open.len_utf8()..s.len() - close.len_utf8()];
            }
        }
        if s == before {
            return s;
        }
    }
}

/// Extracts enumerated or bulleted lines from a free-text response.
///
/// Never fails: unusable input yields an empty, malformed list.
pub fn parse_recommendation_lines(text: &str) -> RawRecommendationList {
    let items: Vec<String> = text
        .lines()
        .filter_map(|line| marker().captures(line))
        .map(|c| collapse_whitespace(strip_wrappers(&c[1])).trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for item in &items {
        *counts.entry(item.clone()).or_default() += 1;
    }
    counts.retain(|_, n| *n > 1);
    RawRecommendationList {
        user: String::new(),
        malformed: items.is_empty(),
        items,
        transcript_key: None,
        duplicates: counts,
        response: text.to_string(),
    }
}
