//! The formula layer: fertility gap, bits per character and its relative
//! tax, latency tax, the quadratic cost model, edit distance, and
//! round-trip CER.
//!
//! Division-by-zero inputs are hard errors throughout; audit numbers must
//! fail loudly rather than turn into silent sentinels.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{count_chars, PairedCorpus};
use crate::error::{Error, Result};
use crate::tokenizer::TokenizationResult;

/// Levenshtein distance plus the reference-side length it was measured
/// against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditDistanceResult {
    pub distance: usize,
    /// Code-point length of the first (reference) argument.
    pub ref_len: usize,
}

/// Corpus-level round-trip character error rate. May exceed 1 when
/// reconstructions are longer than their references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CerSummary {
    pub cer_rt: f64,
    pub n: usize,
}

/// The per-model summary triple: fertility gap, latency tax, BPC tax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptTaxTriple {
    pub delta_f: f64,
    pub rho_lat: f64,
    pub delta_bpc: f64,
}

/// Compensated (Kahan) sum, so aggregate identities asserted at 1e-12
/// stay true for corpora of any size.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut total = 0.0f64;
    let mut carry = 0.0f64;
    for value in values {
        let adjusted = value - carry;
        let next = total + adjusted;
        carry = (next - total) - adjusted;
        total = next;
    }
    total
}

/// Kahan-compensated arithmetic mean.
pub fn kahan_mean(values: impl IntoIterator<Item = f64>) -> Result<f64> {
    let collected: Vec<f64> = values.into_iter().collect();
    if collected.is_empty() {
        return Err(Error::validation("mean of an empty value set"));
    }
    Ok(kahan_sum(collected.iter().copied()) / collected.len() as f64)
}

/// Mean of per-sentence fertility differences `F_B − F_A` over matched
/// result lists.
pub fn fertility_gap(
    results_a: &[TokenizationResult],
    results_b: &[TokenizationResult],
) -> Result<f64> {
    if results_a.len() != results_b.len() {
        return Err(Error::validation(format!(
            "side A has {} results but side B has {}",
            results_a.len(),
            results_b.len()
        )));
    }
    if results_a.is_empty() {
        return Err(Error::validation("fertility gap over zero sentences"));
    }
    for (a, b) in results_a.iter().zip(results_b) {
        if a.sentence_id != b.sentence_id {
            return Err(Error::validation(format!(
                "mismatched sentence ids: {:?} vs {:?}",
                a.sentence_id, b.sentence_id
            )));
        }
    }
    let diffs = results_a
        .iter()
        .zip(results_b)
        .map(|(a, b)| b.fertility - a.fertility);
    Ok(kahan_sum(diffs) / results_a.len() as f64)
}

/// Unweighted mean fertility of one result list.
pub fn mean_fertility(results: &[TokenizationResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::validation("mean fertility over zero sentences"));
    }
    kahan_mean(results.iter().map(|r| r.fertility))
}

/// Bits per character for one sentence:
/// `(mean_nll_nats / ln 2) · (masked_count / char_count)`.
///
/// Normalizing by characters rather than tokens makes the value invariant
/// to how aggressively the tokenizer splits: only total bits per character
/// matter, never the per-token loss.
pub fn bpc(mean_nll_nats: f64, masked_count: usize, char_count: usize) -> Result<f64> {
    if char_count == 0 {
        return Err(Error::validation(
            "bpc undefined for char_count = 0",
        ));
    }
    if masked_count == 0 {
        return Err(Error::validation("bpc needs at least one masked token"));
    }
    if !(mean_nll_nats >= 0.0 && mean_nll_nats.is_finite()) {
        return Err(Error::validation(format!(
            "mean_nll_nats must be finite and non-negative, got {mean_nll_nats}"
        )));
    }
    Ok(mean_nll_nats / std::f64::consts::LN_2 * (masked_count as f64 / char_count as f64))
}

/// Relative BPC increase of orthography B over A.
pub fn bpc_tax(mean_bpc_a: f64, mean_bpc_b: f64) -> Result<f64> {
    if mean_bpc_a <= 0.0 || mean_bpc_a.is_nan() {
        return Err(Error::validation(format!(
            "bpc tax undefined for non-positive baseline {mean_bpc_a}"
        )));
    }
    Ok((mean_bpc_b - mean_bpc_a) / mean_bpc_a)
}

/// Latency tax: ratio of median per-sentence latencies B over A.
pub fn latency_tax(median_a: f64, median_b: f64) -> Result<f64> {
    if median_a <= 0.0 || median_a.is_nan() {
        return Err(Error::validation(format!(
            "latency tax undefined for non-positive baseline median {median_a}"
        )));
    }
    Ok(median_b / median_a)
}

/// Predicted attention-cost ratio under the quadratic model: `(L_B/L_A)²`.
pub fn quadratic_cost_ratio(len_a: f64, len_b: f64) -> Result<f64> {
    if len_a <= 0.0 || len_a.is_nan() {
        return Err(Error::validation(format!(
            "cost ratio undefined for non-positive baseline length {len_a}"
        )));
    }
    let ratio = len_b / len_a;
    Ok(ratio * ratio)
}

/// Levenshtein distance over Unicode scalar values with unit costs.
pub fn edit_distance(a: &str, b: &str) -> EditDistanceResult {
    let a_chars: Vec<char> = a.chars().collect();
    let b_chars: Vec<char> = b.chars().collect();
    let ref_len = a_chars.len();

    if a_chars.is_empty() {
        return EditDistanceResult {
            distance: b_chars.len(),
            ref_len,
        };
    }
    if b_chars.is_empty() {
        return EditDistanceResult {
            distance: ref_len,
            ref_len,
        };
    }

    // Single-row DP; row[j] = distance between a[..i] and b[..j].
    let mut row: Vec<usize> = (0..=b_chars.len()).collect();
    for (i, &ca) in a_chars.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, &cb) in b_chars.iter().enumerate() {
            let substitution = diagonal + usize::from(ca != cb);
            diagonal = row[j + 1];
            row[j + 1] = substitution.min(diagonal + 1).min(row[j] + 1);
        }
    }
    EditDistanceResult {
        distance: *row.last().unwrap(),
        ref_len,
    }
}

/// Mean `ED(x_A, x̂_A) / C(x_A)` over the corpus, where `C` excludes
/// whitespace exactly as in the BPC denominator.
pub fn cer_round_trip(
    corpus: &PairedCorpus,
    reconstructions: &HashMap<String, String>,
) -> Result<CerSummary> {
    let mut total = 0.0;
    for pair in &corpus.pairs {
        let reconstruction = reconstructions.get(&pair.id).ok_or_else(|| {
            Error::validation(format!("missing reconstruction for id {:?}", pair.id))
        })?;
        let chars = count_chars(&pair.text_a);
        if chars == 0 {
            return Err(Error::validation(format!(
                "pair {:?}: reference side A has zero non-whitespace characters",
                pair.id
            )));
        }
        let ed = edit_distance(&pair.text_a, reconstruction);
        total += ed.distance as f64 / chars as f64;
    }
    Ok(CerSummary {
        cer_rt: total / corpus.n() as f64,
        n: corpus.n(),
    })
}

/// Bundle the three per-model axes into the summary triple.
pub fn script_tax_triple(delta_f: f64, rho_lat: f64, delta_bpc: f64) -> ScriptTaxTriple {
    ScriptTaxTriple {
        delta_f,
        rho_lat,
        delta_bpc,
    }
}
