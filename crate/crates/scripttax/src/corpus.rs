//! Paired-corpus loading, validation, and the counting conventions used by
//! every other module.
//!
//! A corpus is an ordered list of sentence pairs carrying identical content
//! in two orthographies, A and B. This module owns the two measurement
//! conventions the whole toolkit depends on:
//!
//! * words are maximal runs of non-whitespace code points, and
//! * characters are Unicode scalar values excluding everything with the
//!   Unicode whitespace property (not just U+0020).
//!
//! Text is stored as-is; canonical composition (NFC) is applied only when
//! explicitly requested, and the flag is recorded on the corpus so results
//! stay auditable.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Which side of a sentence pair a measurement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orthography {
    A,
    B,
}

impl fmt::Display for Orthography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orthography::A => write!(f, "A"),
            Orthography::B => write!(f, "B"),
        }
    }
}

impl std::str::FromStr for Orthography {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Orthography::A),
            "B" => Ok(Orthography::B),
            other => Err(Error::validation(format!(
                "orthography must be \"A\" or \"B\", got {other:?}"
            ))),
        }
    }
}

/// One content-matched sentence in both orthographies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub text_a: String,
    pub text_b: String,
}

impl SentencePair {
    pub fn text(&self, side: Orthography) -> &str {
        match side {
            Orthography::A => &self.text_a,
            Orthography::B => &self.text_b,
        }
    }
}

/// An ordered, validated collection of [`SentencePair`]s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedCorpus {
    pub pairs: Vec<SentencePair>,
    pub label_a: String,
    pub label_b: String,
    /// Whether canonical composition was applied to the texts at load time.
    pub nfc_normalized: bool,
}

/// On-disk corpus encodings understood by [`load_paired_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `id<TAB>text_a<TAB>text_b`, UTF-8, no header, `\n` line endings.
    Tsv,
    /// One JSON object per line with string fields `id`, `text_a`, `text_b`.
    Records,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "records" => Ok(CorpusFormat::Records),
            other => Err(Error::validation(format!(
                "corpus format must be \"tsv\" or \"records\", got {other:?}"
            ))),
        }
    }
}

/// Load-time options. `normalize_nfc` applies canonical composition to both
/// texts before any counting; its value is recorded on the corpus.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusOptions {
    pub normalize_nfc: bool,
}

/// Number of maximal runs of non-whitespace code points.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Number of Unicode scalar values that are not whitespace. All code points
/// with the Unicode whitespace property are excluded, not only ASCII space.
pub fn count_chars(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

pub fn load_paired_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<PairedCorpus> {
    load_paired_corpus_with(path, format, &CorpusOptions::default())
}

pub fn load_paired_corpus_with(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    options: &CorpusOptions,
) -> Result<PairedCorpus> {
    let path = path.as_ref();
    let content = fs::read_to_string(path)?;
    parse_corpus(&content, format, options)
        .map_err(|e| prefix_location(e, &path.display().to_string()))
}

/// Parse corpus text that is already in memory. Row numbers in errors are
/// 1-based line numbers.
pub fn parse_corpus(
    content: &str,
    format: CorpusFormat,
    options: &CorpusOptions,
) -> Result<PairedCorpus> {
    let mut pairs = Vec::new();
    let mut parse_issues = Vec::new();

    for (lineno, raw) in content.lines().enumerate() {
        let lineno = lineno + 1;
        // Tolerate CRLF input; a trailing \r is never sentence content.
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        match format {
            CorpusFormat::Tsv => {
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() != 3 {
                    parse_issues.push(format!(
                        "line {lineno}: expected 3 tab-separated columns, found {}",
                        cols.len()
                    ));
                    continue;
                }
                pairs.push((
                    lineno,
                    SentencePair {
                        id: cols[0].to_string(),
                        text_a: cols[1].to_string(),
                        text_b: cols[2].to_string(),
                    },
                ));
            }
            CorpusFormat::Records => {
                #[derive(Deserialize)]
                struct Row {
                    id: String,
                    text_a: String,
                    text_b: String,
                }
                match serde_json::from_str::<Row>(line) {
                    Ok(row) => pairs.push((
                        lineno,
                        SentencePair {
                            id: row.id,
                            text_a: row.text_a,
                            text_b: row.text_b,
                        },
                    )),
                    Err(e) => parse_issues.push(format!("line {lineno}: {e}")),
                }
            }
        }
    }

    if !parse_issues.is_empty() {
        return Err(Error::parse(parse_issues.join("; ")));
    }

    if options.normalize_nfc {
        for (_, pair) in pairs.iter_mut() {
            pair.text_a = pair.text_a.nfc().collect();
            pair.text_b = pair.text_b.nfc().collect();
        }
    }

    let mut validation_issues = Vec::new();
    let mut seen: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for (lineno, pair) in &pairs {
        if let Some(first) = seen.get(pair.id.as_str()) {
            validation_issues.push(format!(
                "duplicate id {:?} on lines {} and {}",
                pair.id, first, lineno
            ));
        } else {
            seen.insert(&pair.id, *lineno);
        }
        if pair.text_a.trim().is_empty() {
            validation_issues.push(format!("line {lineno}: empty text_a for id {:?}", pair.id));
        }
        if pair.text_b.trim().is_empty() {
            validation_issues.push(format!("line {lineno}: empty text_b for id {:?}", pair.id));
        }
    }
    if pairs.is_empty() {
        validation_issues.push("corpus contains no sentence pairs".to_string());
    }
    if !validation_issues.is_empty() {
        return Err(Error::validation(validation_issues.join("; ")));
    }

    Ok(PairedCorpus {
        pairs: pairs.into_iter().map(|(_, p)| p).collect(),
        label_a: "A".to_string(),
        label_b: "B".to_string(),
        nfc_normalized: options.normalize_nfc,
    })
}

fn prefix_location(err: Error, location: &str) -> Error {
    match err {
        Error::Parse(msg) => Error::Parse(format!("{location}: {msg}")),
        Error::Validation(msg) => Error::Validation(format!("{location}: {msg}")),
        other => other,
    }
}

impl PairedCorpus {
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn with_labels(mut self, label_a: impl Into<String>, label_b: impl Into<String>) -> Self {
        self.label_a = label_a.into();
        self.label_b = label_b.into();
        self
    }

    pub fn get(&self, id: &str) -> Option<&SentencePair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    /// TSV serialization. Fails if any field contains a tab or newline,
    /// which the format cannot represent.
    pub fn to_tsv(&self) -> Result<String> {
        let mut out = String::new();
        for pair in &self.pairs {
            for (name, field) in [
                ("id", &pair.id),
                ("text_a", &pair.text_a),
                ("text_b", &pair.text_b),
            ] {
                if field.contains('\t') || field.contains('\n') {
                    return Err(Error::validation(format!(
                        "pair {:?}: {name} contains a tab or newline, not representable in tsv",
                        pair.id
                    )));
                }
            }
            out.push_str(&pair.id);
            out.push('\t');
            out.push_str(&pair.text_a);
            out.push('\t');
            out.push_str(&pair.text_b);
            out.push('\n');
        }
        Ok(out)
    }

    /// Line-delimited JSON serialization.
    pub fn to_records(&self) -> Result<String> {
        let mut out = String::new();
        for pair in &self.pairs {
            let line = serde_json::to_string(pair)
                .map_err(|e| Error::internal(format!("record serialization failed: {e}")))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
        let body = match format {
            CorpusFormat::Tsv => self.to_tsv()?,
            CorpusFormat::Records => self.to_records()?,
        };
        fs::write(path, body)?;
        Ok(())
    }

    /// SHA-256 over a length-prefixed canonical encoding of the corpus
    /// content. Used as report provenance.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        let mut feed = |s: &str| {
            hasher.update((s.len() as u64).to_le_bytes());
            hasher.update(s.as_bytes());
        };
        feed(&self.label_a);
        feed(&self.label_b);
        for pair in &self.pairs {
            feed(&pair.id);
            feed(&pair.text_a);
            feed(&pair.text_b);
        }
        hasher.update([self.nfc_normalized as u8]);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
