//! Masked-token scoring: deterministic mask plans, a desk-scale n-gram
//! scorer, and ingestion of externally computed losses.
//!
//! The built-in scorer exists so the whole metric pipeline can run with no
//! external model; the fidelity route is [`ingest_external_scores`], which
//! replays per-sentence masked-LM losses computed elsewhere. Losses are
//! nats everywhere on the wire; conversion to bits happens only inside the
//! BPC formula.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Orthography, PairedCorpus};
use crate::error::{Error, Result};
use crate::tokenizer::TokenizationResult;

pub const DEFAULT_MASK_RATE: f64 = 0.15;

/// The masked token positions for one sentence. A pure function of
/// `(seed, sentence_id, token_count, mask_rate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub sentence_id: String,
    /// Sorted, distinct token indices.
    pub masked_positions: Vec<usize>,
    pub seed: u64,
    pub mask_rate: f64,
}

impl MaskPlan {
    pub fn masked_count(&self) -> usize {
        self.masked_positions.len()
    }
}

/// Mean masked-token loss for one sentence, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sentence_id: String,
    pub orthography: Orthography,
    #[serde(rename = "model")]
    pub model_name: String,
    pub mean_nll_nats: f64,
    pub masked_count: usize,
}

fn sentence_rng(seed: u64, sentence_id: &str) -> rand_chacha::ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(sentence_id.as_bytes());
    rand_chacha::ChaCha20Rng::from_seed(hasher.finalize().into())
}

/// Select `round(mask_rate × L)` positions (half-up, minimum one) with a
/// seeded draw keyed on `(seed, sentence_id)`.
pub fn plan_masks(result: &TokenizationResult, seed: u64, mask_rate: f64) -> Result<MaskPlan> {
    if result.token_count == 0 {
        return Err(Error::validation(format!(
            "sentence {:?} has zero tokens, nothing to mask",
            result.sentence_id
        )));
    }
    if mask_rate <= 0.0 || mask_rate > 1.0 || mask_rate.is_nan() {
        return Err(Error::validation(format!(
            "mask_rate must be in (0, 1], got {mask_rate}"
        )));
    }
    let token_count = result.token_count;
    let target = (mask_rate * token_count as f64 + 0.5).floor() as usize;
    let count = target.clamp(1, token_count);

    // Partial Fisher-Yates keeps the draw deterministic for a fixed RNG
    // stream regardless of how many positions are requested downstream.
    let mut rng = sentence_rng(seed, &result.sentence_id);
    let mut indices: Vec<usize> = (0..token_count).collect();
    for i in 0..count {
        let j = i + (rng.next_u64() as usize) % (token_count - i);
        indices.swap(i, j);
    }
    let mut masked_positions = indices[..count].to_vec();
    masked_positions.sort_unstable();

    Ok(MaskPlan {
        sentence_id: result.sentence_id.clone(),
        masked_positions,
        seed,
        mask_rate,
    })
}

/// Context key element: `None` pads positions before the sentence start, so
/// it can never collide with a real token.
type ContextKey = Vec<Option<String>>;

/// Add-k smoothed left-context n-gram scorer over token strings.
#[derive(Debug, Clone)]
pub struct NGramScorer {
    pub order: usize,
    pub smoothing_k: f64,
    /// Distinct trained tokens + 1 shared unknown slot.
    pub vocab_size: usize,
    counts: HashMap<ContextKey, HashMap<String, u64>>,
    context_totals: HashMap<ContextKey, u64>,
    vocab: HashSet<String>,
}

fn context_key(order: usize, tokens: &[String], position: usize) -> ContextKey {
    let width = order - 1;
    (0..width)
        .map(|offset| {
            let back = width - offset;
            position
                .checked_sub(back)
                .map(|idx| tokens[idx].clone())
        })
        .collect()
}

/// Train an add-k scorer on one corpus side (token lists).
pub fn train_ngram(token_lists: &[Vec<String>], order: usize, smoothing_k: f64) -> Result<NGramScorer> {
    if order < 1 {
        return Err(Error::validation("n-gram order must be at least 1"));
    }
    if smoothing_k <= 0.0 || smoothing_k.is_nan() {
        return Err(Error::validation(format!(
            "smoothing_k must be positive, got {smoothing_k}"
        )));
    }
    if token_lists.iter().all(|l| l.is_empty()) {
        return Err(Error::validation(
            "training corpus has no non-empty token list",
        ));
    }

    let mut counts: HashMap<ContextKey, HashMap<String, u64>> = HashMap::new();
    let mut context_totals: HashMap<ContextKey, u64> = HashMap::new();
    let mut vocab = HashSet::new();
    for tokens in token_lists {
        for (position, token) in tokens.iter().enumerate() {
            let ctx = context_key(order, tokens, position);
            *counts
                .entry(ctx.clone())
                .or_default()
                .entry(token.clone())
                .or_insert(0) += 1;
            *context_totals.entry(ctx).or_insert(0) += 1;
            vocab.insert(token.clone());
        }
    }

    Ok(NGramScorer {
        order,
        smoothing_k,
        vocab_size: vocab.len() + 1,
        counts,
        context_totals,
        vocab,
    })
}

impl NGramScorer {
    /// Smoothed conditional probability of `token` after `preceding`
    /// (the full token prefix; only the last `order - 1` entries matter).
    ///
    /// `(count + k) / (total + k·V)`, where a token outside the trained
    /// vocabulary falls into the single shared unknown slot. For every
    /// context the probabilities over vocabulary-plus-unknown sum to one.
    pub fn prob_after(&self, preceding: &[String], token: &str) -> f64 {
        let width = self.order - 1;
        let ctx: ContextKey = (0..width)
            .map(|offset| {
                let back = width - offset;
                preceding
                    .len()
                    .checked_sub(back)
                    .map(|idx| preceding[idx].clone())
            })
            .collect();
        let total = self.context_totals.get(&ctx).copied().unwrap_or(0) as f64;
        let count = self
            .counts
            .get(&ctx)
            .and_then(|m| m.get(token))
            .copied()
            .unwrap_or(0) as f64;
        let k = self.smoothing_k;
        (count + k) / (total + k * self.vocab_size as f64)
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }
}

/// Mean negative log-probability over the plan's masked positions, nats.
pub fn score_masked(
    scorer: &NGramScorer,
    tokens: &[String],
    plan: &MaskPlan,
    orthography: Orthography,
    model_name: &str,
) -> Result<ScoreRecord> {
    if plan.masked_positions.is_empty() {
        return Err(Error::validation(format!(
            "mask plan for {:?} has no positions",
            plan.sentence_id
        )));
    }
    if let Some(&bad) = plan.masked_positions.iter().find(|&&p| p >= tokens.len()) {
        return Err(Error::validation(format!(
            "mask position {bad} out of range for {} tokens (sentence {:?})",
            tokens.len(),
            plan.sentence_id
        )));
    }
    let total_nll: f64 = plan
        .masked_positions
        .iter()
        .map(|&position| -scorer.prob_after(&tokens[..position], &tokens[position]).ln())
        .sum();
    Ok(ScoreRecord {
        sentence_id: plan.sentence_id.clone(),
        orthography,
        model_name: model_name.to_string(),
        mean_nll_nats: total_nll / plan.masked_positions.len() as f64,
        masked_count: plan.masked_positions.len(),
    })
}

/// Read line-delimited external score records and validate them against a
/// corpus. Every problem is collected, so one pass reports all unmatched
/// ids and out-of-range values.
pub fn ingest_external_scores(
    path: impl AsRef<Path>,
    corpus: &PairedCorpus,
) -> Result<Vec<ScoreRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_external_scores(&text, corpus).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_external_scores(text: &str, corpus: &PairedCorpus) -> Result<Vec<ScoreRecord>> {
    let mut records = Vec::new();
    let mut parse_issues = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<ScoreRecord>(line) {
            Ok(record) => records.push((lineno, record)),
            Err(e) => parse_issues.push(format!("line {lineno}: {e}")),
        }
    }
    if !parse_issues.is_empty() {
        return Err(Error::parse(parse_issues.join("; ")));
    }

    let known: HashSet<&str> = corpus.pairs.iter().map(|p| p.id.as_str()).collect();
    let mut validation_issues = Vec::new();
    for (lineno, record) in &records {
        if !known.contains(record.sentence_id.as_str()) {
            validation_issues.push(format!(
                "line {lineno}: unknown sentence_id {:?}",
                record.sentence_id
            ));
        }
        if !(record.mean_nll_nats >= 0.0 && record.mean_nll_nats.is_finite()) {
            validation_issues.push(format!(
                "line {lineno}: mean_nll_nats must be finite and non-negative, got {}",
                record.mean_nll_nats
            ));
        }
        if record.masked_count == 0 {
            validation_issues.push(format!("line {lineno}: masked_count must be at least 1"));
        }
    }
    if !validation_issues.is_empty() {
        return Err(Error::validation(validation_issues.join("; ")));
    }
    Ok(records.into_iter().map(|(_, r)| r).collect())
}
