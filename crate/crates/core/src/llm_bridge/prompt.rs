use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HISTORY: &str = "{history}";
const COUNT: &str = "{n}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    ZeroShot,
    FewShot,
    ChainOfThought,
    RolePlaying,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::ZeroShot,
        PromptKind::FewShot,
        PromptKind::ChainOfThought,
        PromptKind::RolePlaying,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PromptKind::ZeroShot => "zero-shot",
            PromptKind::FewShot => "few-shot",
            PromptKind::ChainOfThought => "chain-of-thought",
            PromptKind::RolePlaying => "role-playing",
        }
    }

    /// Built-in body with `{history}` and `{n}` placeholders.
    pub fn default_body(self) -> &'static str {
        match self {
            PromptKind::ZeroShot => "I like {history}, provide me {n} recommendations.",
            PromptKind::FewShot => concat!(
                "Each example pairs the items a user enjoyed with items recommended to them.\n\n",
                "Example\n",
                "Enjoyed: Item Alpha, Item Beta\n",
                "Recommended:\n1. Item Gamma\n2. Item Delta\n\n",
                "Now the real user.\n",
                "Enjoyed: {history}\n",
                "Recommended ({n} distinct items, numbered, names only):"
            ),
            PromptKind::ChainOfThought => concat!(
                "A user enjoyed these items: {history}\n",
                "Step 1: describe briefly what the items have in common.\n",
                "Step 2: think of items with the same qualities that the user has not listed.\n",
                "Step 3: output the final answer as a numbered list of {n} distinct item names."
            ),
            PromptKind::RolePlaying => concat!(
                "Given a user, as a Recommender System, please provide only the names of the top {n} recommendations.\n",
                "You know that the user likes the following items: {history}"
            ),
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PromptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown prompt kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    /// Overrides the built-in body; must contain `{history}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default = "PromptTemplate::default_list_length")]
    pub list_length: usize,
    /// Maximum characters of the joined history; oldest items go first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_char_budget: Option<usize>,
}

impl PromptTemplate {
    fn default_list_length() -> usize {
        50
    }

    pub fn new(kind: PromptKind) -> Self {
        Self {
            kind,
            body: None,
            list_length: Self::default_list_length(),
            history_char_budget: None,
        }
    }

    pub fn body(&self) -> &str {
        self.body.as_deref().unwrap_or(self.kind.default_body())
    }
}

/// A rendered prompt and how much history it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub text: String,
    pub included: usize,
    /// Oldest history items left out to respect the character budget.
    pub truncated: usize,
}

/// Suffix of `history` whose `", "`-joined length fits `budget`; always
/// keeps the newest item.
fn fit_history(history: &[String], budget: Option<usize>) -> &[String] {
    let Some(budget) = budget else {
        return history;
    };
    let mut len = 0;
    let mut start = history.len();
    for (idx, item) in history.iter().enumerate().rev() {
        let add = item.chars().count() + if start == history.len() { 0 } else { 2 };
        if start < history.len() && len + add > budget {
            break;
        }
        len += add;
        start = idx;
    }
    &history[start..]
}

/// Fills the template with the comma-joined history (oldest first).
pub fn render_prompt(template: &PromptTemplate, history: &[String]) -> Result<RenderedPrompt> {
    if history.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot render a prompt for an empty history".into(),
        ));
    }
    let body = template.body();
    if !body.contains(HISTORY) {
        return Err(Error::InvalidArgument(format!("prompt body lacks {HISTORY}")));
    }
    let with_count = body.replace(COUNT, &template.list_length.to_string());
    let leftover = Regex::new(r"\{[A-Za-z_]+\}").expect("static regex");
    if let Some(m) = leftover.find_iter(&with_count).find(|m| m.as_str() != HISTORY) {
        return Err(Error::InvalidArgument(format!("unresolved placeholder {}", m.as_str())));
    }
    let kept = fit_history(history, template.history_char_budget);
    Ok(RenderedPrompt {
        text: with_count.replace(HISTORY, &kept.join(", ")),
        included: kept.len(),
        truncated: history.len() - kept.len(),
    })
}
