#![allow(dead_code)]

pub mod metric_oracle;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use receval::harness::{prepare, RunManifest};
use receval::llm_bridge::{ChatBackend, ChatMode, ChatRequest};
use receval::rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

/// The synthetic manifest with its output redirected to `out`.
pub fn fixture_manifest(out: &Path) -> RunManifest {
    let mut m = RunManifest::load(fixture_dir().join("manifest.toml")).expect("fixture manifest loads");
    m.output = out.to_path_buf();
    m
}

pub fn with_mode(mut m: RunManifest, mode: ChatMode, transcripts: &Path) -> RunManifest {
    let chat = m.chat.as_mut().expect("fixture has a chat section");
    chat.mode = mode;
    chat.transcripts = transcripts.to_path_buf();
    m
}

const INVENTED: [&str; 4] = [
    "Moonlight Over Kyoto",
    "A Quiet Place To Dance",
    "Zebra Crossing Blues",
    "Operation Tangerine",
];

/// Answers role-playing prompts with a deterministic list that mixes exact
/// names, case and quote noise, a typo, a seen item, a duplicate and
/// invented titles.
pub struct MockBackend {
    names: Vec<String>,
}

impl MockBackend {
    /// Knows only the names of items that survive preparation.
    pub fn from_fixture() -> Self {
        let out = tempfile::tempdir().expect("tempdir");
        let prepared = prepare(&fixture_manifest(out.path())).expect("fixture prepares");
        let names = prepared.catalog.iter().map(|(_, e)| e.name.clone()).collect();
        Self { names }
    }
}

fn typo(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let cut = chars.len() / 2;
    chars[..cut].iter().chain(&chars[cut + 1..]).collect()
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> receval::Result<String> {
        let prompt = &request.messages[0].content;
        let history: BTreeSet<&str> = prompt
            .split_once("likes the following items: ")
            .map(|(_, h)| h.split(", ").collect())
            .unwrap_or_default();
        let mut pool: Vec<&String> = self.names.iter().filter(|n| !history.contains(n.as_str())).collect();
        pool.shuffle(&mut rng::stream(7, prompt));
        let seen = history.iter().next().copied().unwrap_or("The Lonely Meadow");
        let mut out = String::from("Sure! Here are your recommendations:\n\n");
        let mut next = pool.into_iter();
        let mut first = String::new();
        for rank in 1..=20 {
            let line = match rank {
                3 => seen.to_string(),
                6 => next.next().unwrap().to_uppercase(),
                9 => typo(next.next().unwrap()),
                12 => INVENTED[prompt.len() % 4].to_string(),
                15 => first.clone(),
                17 => INVENTED[(prompt.len() + 1) % 4].to_string(),
                r if r % 4 == 0 => format!("\"{}\"", next.next().unwrap()),
                _ => next.next().unwrap().clone(),
            };
            if rank == 1 {
                first = line.clone();
            }
            out.push_str(&format!("{rank}. {line}\n"));
        }
        out.push_str("\nEnjoy!");
        Ok(out)
    }
}
