//! Resolving free-text item strings to catalog items by Gestalt
//! (Ratcliff/Obershelp) similarity.

mod resolve;
mod similarity;

pub use resolve::{
    resolution_audit_tsv, write_resolution_audit, ExternalStats, MatchOutcome, MatchResult, ResolvedList, Resolver,
    DEFAULT_THRESHOLD,
};
pub use similarity::{matched_chars, ro_similarity};
