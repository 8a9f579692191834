//! Deterministic subword segmentation from declarative vocabulary files.
//!
//! Two segmenter families are supported: WordPiece-style greedy
//! longest-match with a continuation prefix, and BPE with ranked merge
//! rules. Both are pure functions of the loaded [`TokenizerSpec`], so
//! identical `(spec, text)` inputs always produce byte-identical token
//! lists.
//!
//! Token counts deliberately exclude CLS/SEP-style special tokens:
//! fertility is a property of segmentation alone. The latency harness adds
//! sentinel ids back when it builds model inputs.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{count_chars, count_words, Orthography};
use crate::error::{Error, Result};

pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_MAX_WORD_CHARS: usize = 100;

/// One BPE merge rule, `(left, right)`; its rank is its position in the
/// merge list.
pub type MergeRule = (String, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Wordpiece,
    Bpe,
}

impl fmt::Display for TokenizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenizerKind::Wordpiece => write!(f, "wordpiece"),
            TokenizerKind::Bpe => write!(f, "bpe"),
        }
    }
}

/// A fully resolved tokenizer definition: vocabulary with contiguous ids,
/// merge rules for BPE, and the segmentation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerSpec {
    pub name: String,
    pub kind: TokenizerKind,
    /// Tokens in id order; position = id.
    pub tokens: Vec<String>,
    /// Ordered merge rules; index = rank. Empty for WordPiece.
    pub merges: Vec<MergeRule>,
    pub continuation_prefix: String,
    pub unk_token: String,
    pub max_word_chars: usize,
    ids: HashMap<String, u32>,
    merge_ranks: HashMap<(String, String), usize>,
}

impl TokenizerSpec {
    pub fn new(
        name: impl Into<String>,
        kind: TokenizerKind,
        tokens: Vec<String>,
        merges: Vec<MergeRule>,
        continuation_prefix: impl Into<String>,
        unk_token: impl Into<String>,
        max_word_chars: usize,
    ) -> Result<Self> {
        let mut spec = TokenizerSpec {
            name: name.into(),
            kind,
            tokens,
            merges,
            continuation_prefix: continuation_prefix.into(),
            unk_token: unk_token.into(),
            max_word_chars,
            ids: HashMap::new(),
            merge_ranks: HashMap::new(),
        };
        spec.index()?;
        spec.validate()?;
        Ok(spec)
    }

    /// Convenience constructor for WordPiece specs with default prefix and
    /// word-length cap.
    pub fn wordpiece(name: impl Into<String>, tokens: Vec<String>, unk: &str) -> Result<Self> {
        Self::new(
            name,
            TokenizerKind::Wordpiece,
            tokens,
            Vec::new(),
            DEFAULT_CONTINUATION_PREFIX,
            unk,
            DEFAULT_MAX_WORD_CHARS,
        )
    }

    fn index(&mut self) -> Result<()> {
        self.ids.clear();
        for (id, token) in self.tokens.iter().enumerate() {
            if self
                .ids
                .insert(token.clone(), id as u32)
                .is_some()
            {
                return Err(Error::validation(format!(
                    "duplicate vocab entry {token:?} (ids are assigned by position and must be unique)"
                )));
            }
        }
        self.merge_ranks.clear();
        for (rank, (left, right)) in self.merges.iter().enumerate() {
            // Keep the first occurrence: a later duplicate can never win.
            self.merge_ranks
                .entry((left.clone(), right.clone()))
                .or_insert(rank);
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !self.ids.contains_key(&self.unk_token) {
            return Err(Error::validation(format!(
                "unk_token {:?} is not in the vocabulary",
                self.unk_token
            )));
        }
        if self.max_word_chars == 0 {
            return Err(Error::validation("max_word_chars must be positive"));
        }
        if self.kind == TokenizerKind::Bpe {
            if self.merges.is_empty() {
                return Err(Error::validation(
                    "bpe spec must declare at least one merge rule",
                ));
            }
            // Every merge must combine reachable symbols (single code points
            // or results of earlier merges) and its result must be a vocab
            // token.
            let mut reachable: Vec<String> = Vec::new();
            for (rank, (left, right)) in self.merges.iter().enumerate() {
                for part in [left, right] {
                    let single = part.chars().count() == 1;
                    if !single && !reachable.iter().any(|s| s == part) {
                        return Err(Error::validation(format!(
                            "merge #{rank} ({left:?}, {right:?}): part {part:?} is not reachable \
                             from code points via earlier merges"
                        )));
                    }
                }
                let merged = format!("{left}{right}");
                if !self.ids.contains_key(&merged) {
                    return Err(Error::validation(format!(
                        "merge #{rank} produces {merged:?} which is absent from the vocabulary"
                    )));
                }
                reachable.push(merged);
            }
        }
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// SHA-256 over a canonical encoding of the spec; report provenance.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        let mut feed = |s: &str| {
            hasher.update((s.len() as u64).to_le_bytes());
            hasher.update(s.as_bytes());
        };
        feed(&self.name);
        feed(&self.kind.to_string());
        feed(&self.continuation_prefix);
        feed(&self.unk_token);
        feed(&self.max_word_chars.to_string());
        for token in &self.tokens {
            feed(token);
        }
        for (left, right) in &self.merges {
            feed(left);
            feed(right);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-sentence tokenization outcome with the counts every metric needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizationResult {
    pub sentence_id: String,
    pub orthography: Orthography,
    pub tokens: Vec<String>,
    pub token_count: usize,
    pub word_count: usize,
    pub char_count: usize,
    /// Tokens per word, `token_count / word_count`.
    pub fertility: f64,
}

/// Manifest file shape: a small key-value (TOML) document naming the
/// tokenizer and pointing at its vocabulary file.
#[derive(Debug, Deserialize)]
struct Manifest {
    name: String,
    kind: TokenizerKind,
    unk_token: String,
    #[serde(default)]
    continuation_prefix: Option<String>,
    #[serde(default)]
    max_word_chars: Option<usize>,
    /// WordPiece: one token per line, line number = id. BPE: `#vocab`
    /// section then `#merges` section.
    vocab: String,
}

/// Load a tokenizer from its manifest. Relative vocabulary paths resolve
/// against the manifest's directory.
pub fn load_tokenizer_spec(path: impl AsRef<Path>) -> Result<TokenizerSpec> {
    let path = path.as_ref();
    let manifest_text = fs::read_to_string(path)?;
    let manifest: Manifest = toml::from_str(&manifest_text)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;

    let vocab_path = path
        .parent()
        .map(|dir| dir.join(&manifest.vocab))
        .unwrap_or_else(|| manifest.vocab.clone().into());
    let vocab_text = fs::read_to_string(&vocab_path)?;

    let (tokens, merges) = match manifest.kind {
        TokenizerKind::Wordpiece => (parse_wordpiece_vocab(&vocab_text), Vec::new()),
        TokenizerKind::Bpe => parse_bpe_file(&vocab_text)
            .map_err(|e| prefix_location(e, &vocab_path.display().to_string()))?,
    };

    TokenizerSpec::new(
        manifest.name,
        manifest.kind,
        tokens,
        merges,
        manifest
            .continuation_prefix
            .unwrap_or_else(|| DEFAULT_CONTINUATION_PREFIX.to_string()),
        manifest.unk_token,
        manifest.max_word_chars.unwrap_or(DEFAULT_MAX_WORD_CHARS),
    )
    .map_err(|e| prefix_location(e, &path.display().to_string()))
}

fn prefix_location(err: Error, location: &str) -> Error {
    match err {
        Error::Parse(msg) => Error::Parse(format!("{location}: {msg}")),
        Error::Validation(msg) => Error::Validation(format!("{location}: {msg}")),
        other => other,
    }
}

fn parse_wordpiece_vocab(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect()
}

fn parse_bpe_file(text: &str) -> Result<(Vec<String>, Vec<MergeRule>)> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Vocab,
        Merges,
    }
    let mut section = Section::None;
    let mut tokens = Vec::new();
    let mut merges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        match line {
            "#vocab" => section = Section::Vocab,
            "#merges" => section = Section::Merges,
            _ => match section {
                Section::None => {
                    return Err(Error::parse(format!(
                        "line {lineno}: content before a #vocab or #merges section header"
                    )))
                }
                Section::Vocab => tokens.push(line.to_string()),
                Section::Merges => {
                    let mut parts = line.splitn(2, ' ');
                    let left = parts.next().unwrap_or_default();
                    let right = parts.next().unwrap_or_default();
                    if left.is_empty() || right.is_empty() {
                        return Err(Error::parse(format!(
                            "line {lineno}: merge rule must be `left<SPACE>right`, got {line:?}"
                        )));
                    }
                    merges.push((left.to_string(), right.to_string()));
                }
            },
        }
    }
    Ok((tokens, merges))
}

/// Greedy longest-match WordPiece segmentation of a single word.
///
/// The first piece is the longest vocabulary prefix of the word; each
/// following piece is the longest match of `continuation_prefix` +
/// remainder-prefix. A word with no match at some position, or longer than
/// `max_word_chars`, maps to `[unk_token]` as a whole.
pub fn segment_wordpiece(spec: &TokenizerSpec, word: &str) -> Vec<String> {
    debug_assert_eq!(spec.kind, TokenizerKind::Wordpiece);
    debug_assert!(!word.chars().any(char::is_whitespace));

    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() > spec.max_word_chars {
        return vec![spec.unk_token.clone()];
    }

    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut matched: Option<(usize, String)> = None;
        for end in (start + 1..=chars.len()).rev() {
            let fragment: String = chars[start..end].iter().collect();
            let candidate = if start == 0 {
                fragment
            } else {
                format!("{}{}", spec.continuation_prefix, fragment)
            };
            if spec.contains(&candidate) {
                matched = Some((end, candidate));
                break;
            }
        }
        match matched {
            Some((end, piece)) => {
                pieces.push(piece);
                start = end;
            }
            None => return vec![spec.unk_token.clone()],
        }
    }
    pieces
}

/// BPE segmentation of a single word: start from code-point symbols and
/// repeatedly apply the lowest-rank applicable merge, taking the leftmost
/// occurrence when the winning pair occurs more than once. Symbols left
/// outside the vocabulary map individually to `unk_token`.
pub fn segment_bpe(spec: &TokenizerSpec, word: &str) -> Vec<String> {
    debug_assert_eq!(spec.kind, TokenizerKind::Bpe);
    debug_assert!(!word.chars().any(char::is_whitespace));

    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    loop {
        let mut best: Option<(usize, usize)> = None; // (rank, position)
        for i in 0..symbols.len().saturating_sub(1) {
            let pair = (symbols[i].clone(), symbols[i + 1].clone());
            if let Some(&rank) = spec.merge_ranks.get(&pair) {
                if best.is_none_or(|(r, _)| rank < r) {
                    best = Some((rank, i));
                }
            }
        }
        match best {
            Some((_, i)) => {
                let merged = format!("{}{}", symbols[i], symbols[i + 1]);
                symbols.splice(i..=i + 1, [merged]);
            }
            None => break,
        }
    }
    symbols
        .into_iter()
        .map(|s| {
            if spec.contains(&s) {
                s
            } else {
                spec.unk_token.clone()
            }
        })
        .collect()
}

/// Segment one word with whichever algorithm the spec declares.
pub fn segment_word(spec: &TokenizerSpec, word: &str) -> Vec<String> {
    match spec.kind {
        TokenizerKind::Wordpiece => segment_wordpiece(spec, word),
        TokenizerKind::Bpe => segment_bpe(spec, word),
    }
}

/// Whitespace-pretokenize a sentence, segment each word, and assemble the
/// counts. Special tokens are not added and not counted.
pub fn tokenize_sentence(
    spec: &TokenizerSpec,
    sentence_id: &str,
    orthography: Orthography,
    text: &str,
) -> Result<TokenizationResult> {
    let word_count = count_words(text);
    if word_count == 0 {
        return Err(Error::validation(format!(
            "sentence {sentence_id:?} side {orthography} is empty"
        )));
    }
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        tokens.extend(segment_word(spec, word));
    }
    let token_count = tokens.len();
    Ok(TokenizationResult {
        sentence_id: sentence_id.to_string(),
        orthography,
        tokens,
        token_count,
        word_count,
        char_count: count_chars(text),
        fertility: token_count as f64 / word_count as f64,
    })
}

/// Tokenize every pair in a corpus, returning per-side results in corpus
/// order.
pub fn tokenize_corpus(
    spec: &TokenizerSpec,
    corpus: &crate::corpus::PairedCorpus,
) -> Result<(Vec<TokenizationResult>, Vec<TokenizationResult>)> {
    let mut side_a = Vec::with_capacity(corpus.n());
    let mut side_b = Vec::with_capacity(corpus.n());
    for pair in &corpus.pairs {
        side_a.push(tokenize_sentence(
            spec,
            &pair.id,
            Orthography::A,
            &pair.text_a,
        )?);
        side_b.push(tokenize_sentence(
            spec,
            &pair.id,
            Orthography::B,
            &pair.text_b,
        )?);
    }
    Ok((side_a, side_b))
}
