//! Rule-based orthography conversion and round-trip reconstruction.
//!
//! Conversion is a greedy longest-match transducer over an ordered rule
//! table: at every position the longest matching source string wins, and a
//! position covered by no rule falls back to the table's default policy
//! (copy the code point or drop it). Whitespace always passes through
//! unmapped so word counts stay stable across conversion.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What to do with a code point no rule covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultPolicy {
    #[default]
    Copy,
    Drop,
}

/// An ordered transliteration rule table for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTable {
    pub direction_label: String,
    /// `(source, target)` pairs in file order; target may be empty
    /// (deletion rule).
    pub rules: Vec<(String, String)>,
    pub default_policy: DefaultPolicy,
    by_source: HashMap<String, String>,
    max_source_chars: usize,
}

impl MappingTable {
    pub fn new(
        direction_label: impl Into<String>,
        rules: Vec<(String, String)>,
        default_policy: DefaultPolicy,
    ) -> Result<Self> {
        let mut by_source = HashMap::new();
        let mut max_source_chars = 0;
        for (idx, (source, target)) in rules.iter().enumerate() {
            if source.is_empty() {
                return Err(Error::validation(format!(
                    "rule #{}: empty source string",
                    idx + 1
                )));
            }
            if source.chars().any(char::is_whitespace) {
                // Whitespace is copied before rules are consulted, so such a
                // rule could never fire; rejecting it is the audible failure.
                return Err(Error::validation(format!(
                    "rule #{}: source {source:?} contains whitespace and can never match",
                    idx + 1
                )));
            }
            if by_source.insert(source.clone(), target.clone()).is_some() {
                return Err(Error::validation(format!(
                    "duplicate rule source {source:?}"
                )));
            }
            max_source_chars = max_source_chars.max(source.chars().count());
        }
        Ok(MappingTable {
            direction_label: direction_label.into(),
            rules,
            default_policy,
            by_source,
            max_source_chars,
        })
    }

    pub fn with_policy(mut self, policy: DefaultPolicy) -> Self {
        self.default_policy = policy;
        self
    }
}

/// Load a rule table from a TSV file of `source<TAB>target` lines. Lines
/// starting with `#` are comments. The direction label defaults to the file
/// stem and the policy to copy.
pub fn load_mapping(path: impl AsRef<Path>) -> Result<MappingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mapping".to_string());
    parse_mapping(&text, &label).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_mapping(text: &str, label: &str) -> Result<MappingTable> {
    let mut rules = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let source = parts.next().unwrap_or_default();
        let target = match parts.next() {
            Some(t) => t,
            None => {
                return Err(Error::parse(format!(
                    "line {lineno}: expected `source<TAB>target`, got {line:?}"
                )))
            }
        };
        if target.contains('\t') {
            return Err(Error::parse(format!(
                "line {lineno}: more than two tab-separated columns"
            )));
        }
        rules.push((source.to_string(), target.to_string()));
    }
    MappingTable::new(label, rules, DefaultPolicy::Copy)
}

/// Greedy longest-match application of a rule table.
pub fn apply_mapping(table: &MappingTable, text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        if c.is_whitespace() {
            out.push(c);
            pos += 1;
            continue;
        }
        let mut matched = false;
        let longest = table.max_source_chars.min(chars.len() - pos);
        for len in (1..=longest).rev() {
            let candidate: String = chars[pos..pos + len].iter().collect();
            if let Some(target) = table.by_source.get(&candidate) {
                out.push_str(target);
                pos += len;
                matched = true;
                break;
            }
        }
        if !matched {
            if table.default_policy == DefaultPolicy::Copy {
                out.push(c);
            }
            pos += 1;
        }
    }
    out
}

/// Forward-then-backward conversion, the reconstruction checked by
/// round-trip CER.
pub fn round_trip(fwd: &MappingTable, bwd: &MappingTable, text: &str) -> String {
    apply_mapping(bwd, &apply_mapping(fwd, text))
}
