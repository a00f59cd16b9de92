use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn single_prompt(model: &str, temperature: f64, prompt: &str) -> Self {
        Self {
            model: model.to_string(),
            temperature,
            max_tokens: None,
            messages: vec![ChatMessage::user(prompt)],
        }
    }

    /// sha256 over the canonical JSON of model, decoding parameters and
    /// messages.
    pub fn replay_key(&self) -> String {
        let json = serde_json::to_string(self).expect("requests always serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTranscript {
    pub key: String,
    pub request: ChatRequest,
    pub response: String,
    /// Seconds since the Unix epoch at recording time.
    pub recorded_at: u64,
}

/// One JSON file per replay key under `<root>/<key[..2]>/<key>.json`.
///
/// Entries are written to a temporary file in the target directory and
/// renamed into place, so readers see either nothing or a full entry. The
/// first writer of a key wins.
#[derive(Debug, Clone)]
pub struct TranscriptCache {
    root: PathBuf,
}

impl TranscriptCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let shard = key.get(..2).unwrap_or(key);
        self.root.join(shard).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<ChatTranscript>> {
        let path = self.path_for(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let t: ChatTranscript =
            serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        if t.key != key {
            return Err(Error::Serialization(format!(
                "{} holds key {} instead of {key}",
                path.display(),
                t.key
            )));
        }
        Ok(Some(t))
    }

    /// Publishes `transcript` unless the key already exists; returns the
    /// entry that ends up cached.
    pub fn put(&self, transcript: &ChatTranscript) -> Result<ChatTranscript> {
        let path = self.path_for(&transcript.key);
        let dir = path.parent().expect("cache paths have a shard directory");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut json = serde_json::to_string_pretty(transcript).map_err(|e| Error::Serialization(e.to_string()))?;
        json.push('\n');
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(json.as_bytes())
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| Error::io(tmp.path(), e))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(transcript.clone()),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => {
                self.get(&transcript.key)?.ok_or_else(|| Error::io(&path, e.error))
            }
            Err(e) => Err(Error::io(&path, e.error)),
        }
    }
}
