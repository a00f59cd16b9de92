//! Prompt rendering, chat-completion transport with a replay cache, and
//! parsing of free-text recommendation lists.

mod client;
mod parse;
mod prompt;
mod transcript;

pub use client::{
    ChatBackend, ChatMode, ChatSession, EndpointConfig, HttpBackend, ENV_API_KEY, ENV_BASE_URL, ENV_MODEL,
};
pub use parse::{parse_recommendation_lines, RawRecommendationList};
pub use prompt::{render_prompt, PromptKind, PromptTemplate, RenderedPrompt};
pub use transcript::{ChatMessage, ChatRequest, ChatTranscript, TranscriptCache};
