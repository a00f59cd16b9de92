//! Small string helpers shared by catalog loading, prompting and matching.

/// Trims and collapses every run of whitespace to a single space.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Matching normal form: lowercase, trimmed, internal whitespace collapsed.
pub fn normalize_name(s: &str) -> String {
    collapse_whitespace(&s.to_lowercase())
}

/// Replaces tabs and newlines so the value fits in one TSV cell.
pub fn tsv_cell(s: &str) -> String {
    s.chars()
        .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
        .collect()
}
