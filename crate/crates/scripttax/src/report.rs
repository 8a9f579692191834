//! Pipeline orchestration and report assembly.
//!
//! [`run_audit`] drives the full pipeline per tokenizer: segment both
//! corpus sides, compute fertilities and the fertility gap, obtain masked
//! losses (built-in scorer or external records) and reduce them to BPC,
//! benchmark or skip latency, optionally check round-trip CER, and bundle
//! everything with provenance. [`replay_summaries`] runs only the
//! delta/ratio layer over pre-aggregated per-orthography numbers, which is
//! how published summary values flow through the same formulas.
//!
//! Reports are long-lived artifacts: they carry a schema version, every
//! convention flag needed to reproduce them, and hard internal-consistency
//! checks that run both on emit and on reload.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convert::{round_trip, MappingTable};
use crate::corpus::{Orthography, PairedCorpus};
use crate::error::{Error, Result};
use crate::latency::{run_benchmark, BenchmarkRun, EncoderConfig, TimedSequence};
use crate::metrics::{
    bpc, bpc_tax, cer_round_trip, fertility_gap, kahan_mean, kahan_sum, latency_tax,
    mean_fertility, quadratic_cost_ratio, ScriptTaxTriple,
};
use crate::scorer::{plan_masks, score_masked, train_ngram, ScoreRecord};
use crate::tokenizer::{tokenize_corpus, TokenizationResult, TokenizerSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Character-counting convention recorded in every report.
pub const CHAR_CONVENTION: &str = "unicode-scalar-values, whitespace-excluded";
/// Word-counting convention recorded in every report.
pub const WORD_CONVENTION: &str = "maximal non-whitespace runs";

/// Name and content hash of a tokenizer spec, for provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecRef {
    pub name: String,
    pub hash: String,
}

/// Everything needed to reproduce (or audit) the numbers in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub char_convention: String,
    pub word_convention: String,
    pub scorer: String,
    pub corpus_hash: Option<String>,
    pub corpus_n: Option<usize>,
    pub nfc_normalized: Option<bool>,
    pub tokenizer: Option<SpecRef>,
    pub mask_seed: Option<u64>,
    pub mask_rate: Option<f64>,
    pub special_tokens_in_inputs: Option<bool>,
}

impl Provenance {
    fn summary_ingestion() -> Self {
        Provenance {
            char_convention: CHAR_CONVENTION.to_string(),
            word_convention: WORD_CONVENTION.to_string(),
            scorer: "summary-ingestion".to_string(),
            corpus_hash: None,
            corpus_n: None,
            nfc_normalized: None,
            tokenizer: None,
            mask_seed: None,
            mask_rate: None,
            special_tokens_in_inputs: None,
        }
    }
}

/// Measured or ingested latency numbers. Absent entirely when latency was
/// neither run nor supplied (absence is not zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyBlock {
    pub median_a_seconds: f64,
    pub median_b_seconds: f64,
    pub rho_lat: f64,
    pub throughput_a_sps: f64,
    pub throughput_b_sps: f64,
    /// True when measured live by the built-in encoder in this run.
    pub live: bool,
    pub mean_token_len_a: Option<f64>,
    pub mean_token_len_b: Option<f64>,
    /// `(mean_len_b / mean_len_a)²` — the quadratic attention model.
    pub quadratic_predicted_ratio: Option<f64>,
    /// `rho_lat / quadratic_predicted_ratio`: how far measurement exceeds
    /// (or trails) the pure-attention prediction.
    pub measured_vs_quadratic_residual: Option<f64>,
    pub encoder: Option<EncoderConfig>,
    pub environment: Option<String>,
    pub warmup: Option<usize>,
    pub repeats: Option<usize>,
}

/// Per-model audit outcome: the script-tax triple plus everything needed
/// to recompute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTaxReport {
    pub model_name: String,
    pub fertility_a: f64,
    pub fertility_b: f64,
    pub delta_f: f64,
    /// Unweighted means of per-sentence BPC (the headline aggregation).
    pub bpc_a: f64,
    pub bpc_b: f64,
    /// Pooled variant: corpus total bits / corpus total characters.
    pub bpc_a_pooled: Option<f64>,
    pub bpc_b_pooled: Option<f64>,
    pub delta_bpc: f64,
    pub latency: Option<LatencyBlock>,
    pub cer_rt: Option<f64>,
    pub provenance: Provenance,
}

impl ScriptTaxReport {
    /// The summary triple, when all three axes are present.
    pub fn triple(&self) -> Option<ScriptTaxTriple> {
        self.latency.as_ref().map(|block| ScriptTaxTriple {
            delta_f: self.delta_f,
            rho_lat: block.rho_lat,
            delta_bpc: self.delta_bpc,
        })
    }

    /// Internal-consistency invariants; every emitted and reloaded report
    /// must pass.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, stored: f64, recomputed: f64| -> Result<()> {
            if (stored - recomputed).abs() > 1e-12 {
                return Err(Error::internal(format!(
                    "report {:?}: {name} = {stored} inconsistent with recomputation {recomputed}",
                    self.model_name
                )));
            }
            Ok(())
        };
        for (name, value) in [
            ("fertility_a", self.fertility_a),
            ("fertility_b", self.fertility_b),
            ("bpc_a", self.bpc_a),
            ("bpc_b", self.bpc_b),
        ] {
            if !value.is_finite() {
                return Err(Error::internal(format!(
                    "report {:?}: {name} is not finite",
                    self.model_name
                )));
            }
        }
        check("delta_f", self.delta_f, self.fertility_b - self.fertility_a)?;
        check("delta_bpc", self.delta_bpc, bpc_tax(self.bpc_a, self.bpc_b)?)?;
        if let Some(block) = &self.latency {
            check(
                "rho_lat",
                block.rho_lat,
                latency_tax(block.median_a_seconds, block.median_b_seconds)?,
            )?;
            check(
                "throughput_a_sps",
                block.throughput_a_sps,
                1.0 / block.median_a_seconds,
            )?;
            check(
                "throughput_b_sps",
                block.throughput_b_sps,
                1.0 / block.median_b_seconds,
            )?;
        }
        if let Some(cer) = self.cer_rt {
            if !(cer >= 0.0 && cer.is_finite()) {
                return Err(Error::internal(format!(
                    "report {:?}: cer_rt must be finite and non-negative, got {cer}",
                    self.model_name
                )));
            }
        }
        Ok(())
    }
}

/// Where masked losses come from.
#[derive(Debug, Clone)]
pub enum ScorerSource {
    /// Train the add-k n-gram stand-in on each corpus side.
    BuiltIn { order: usize, smoothing_k: f64 },
    /// Replay externally computed per-sentence records (the fidelity
    /// route). Records must cover every (sentence, side) pair per model.
    External(Vec<ScoreRecord>),
}

impl ScorerSource {
    fn describe(&self) -> String {
        match self {
            ScorerSource::BuiltIn { order, smoothing_k } => {
                format!("ngram(order={order}, k={smoothing_k})")
            }
            ScorerSource::External(_) => "external-scores".to_string(),
        }
    }
}

/// Live-benchmark options for [`run_audit`].
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub config: EncoderConfig,
    pub warmup: usize,
    pub repeats: usize,
    /// Prepend/append sentinel ids when building model inputs, mirroring
    /// deployed encoder usage. Fertility stays special-token-free either
    /// way.
    pub add_special_tokens: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            config: EncoderConfig::reference(),
            warmup: 1,
            repeats: 3,
            add_special_tokens: true,
        }
    }
}

/// Forward/backward mapping tables for the round-trip CER check.
#[derive(Debug, Clone)]
pub struct ConverterPair {
    pub forward: MappingTable,
    pub backward: MappingTable,
}

/// Options for [`run_audit`].
#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub mask_seed: u64,
    pub mask_rate: f64,
    pub scorer: ScorerSource,
    /// `None` skips the latency axis entirely.
    pub bench: Option<BenchOptions>,
    /// `None` skips the CER check.
    pub converter: Option<ConverterPair>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            mask_seed: 42,
            mask_rate: crate::scorer::DEFAULT_MASK_RATE,
            scorer: ScorerSource::BuiltIn {
                order: 2,
                smoothing_k: 1.0,
            },
            bench: Some(BenchOptions::default()),
            converter: None,
        }
    }
}

/// A model whose audit failed, with the diagnostic; other models proceed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditFailure {
    pub model_name: String,
    pub diagnostic: String,
}

/// Result of auditing several tokenizers over one corpus.
#[derive(Debug)]
pub struct AuditOutcome {
    pub reports: Vec<ScriptTaxReport>,
    pub failures: Vec<AuditFailure>,
}

/// Audit every tokenizer spec against the corpus. A failure in one model
/// is recorded as a diagnostic and does not abort the others.
pub fn run_audit(
    corpus: &PairedCorpus,
    specs: &[TokenizerSpec],
    options: &AuditOptions,
) -> AuditOutcome {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for spec in specs {
        match audit_model(corpus, spec, options) {
            Ok(report) => reports.push(report),
            Err(e) => failures.push(AuditFailure {
                model_name: spec.name.clone(),
                diagnostic: e.to_string(),
            }),
        }
    }
    AuditOutcome { reports, failures }
}

fn audit_model(
    corpus: &PairedCorpus,
    spec: &TokenizerSpec,
    options: &AuditOptions,
) -> Result<ScriptTaxReport> {
    let (results_a, results_b) = tokenize_corpus(spec, corpus)?;

    let fertility_a = mean_fertility(&results_a)?;
    let fertility_b = mean_fertility(&results_b)?;
    let delta_f = fertility_gap(&results_a, &results_b)?;

    let (records_a, records_b) = collect_scores(spec, options, &results_a, &results_b)?;
    let (bpc_a_mean, bpc_a_pooled) = reduce_bpc(&results_a, &records_a)?;
    let (bpc_b_mean, bpc_b_pooled) = reduce_bpc(&results_b, &records_b)?;
    let delta_bpc = bpc_tax(bpc_a_mean, bpc_b_mean)?;

    let latency = match &options.bench {
        Some(bench) => Some(run_latency_axis(spec, bench, &results_a, &results_b)?),
        None => None,
    };

    let cer_rt = match &options.converter {
        Some(pair) => {
            let reconstructions: HashMap<String, String> = corpus
                .pairs
                .iter()
                .map(|p| {
                    (
                        p.id.clone(),
                        round_trip(&pair.forward, &pair.backward, &p.text_a),
                    )
                })
                .collect();
            Some(cer_round_trip(corpus, &reconstructions)?.cer_rt)
        }
        None => None,
    };

    let report = ScriptTaxReport {
        model_name: spec.name.clone(),
        fertility_a,
        fertility_b,
        delta_f,
        bpc_a: bpc_a_mean,
        bpc_b: bpc_b_mean,
        bpc_a_pooled: Some(bpc_a_pooled),
        bpc_b_pooled: Some(bpc_b_pooled),
        delta_bpc,
        latency,
        cer_rt,
        provenance: Provenance {
            char_convention: CHAR_CONVENTION.to_string(),
            word_convention: WORD_CONVENTION.to_string(),
            scorer: options.scorer.describe(),
            corpus_hash: Some(corpus.content_hash()),
            corpus_n: Some(corpus.n()),
            nfc_normalized: Some(corpus.nfc_normalized),
            tokenizer: Some(SpecRef {
                name: spec.name.clone(),
                hash: spec.content_hash(),
            }),
            mask_seed: Some(options.mask_seed),
            mask_rate: Some(options.mask_rate),
            special_tokens_in_inputs: options.bench.as_ref().map(|b| b.add_special_tokens),
        },
    };
    report.validate()?;
    Ok(report)
}

/// Score one side with the built-in scorer: train on this side's token
/// lists, then score each sentence under its seeded mask plan.
fn score_side_builtin(
    spec: &TokenizerSpec,
    results: &[TokenizationResult],
    order: usize,
    smoothing_k: f64,
    seed: u64,
    mask_rate: f64,
) -> Result<Vec<ScoreRecord>> {
    let token_lists: Vec<Vec<String>> = results.iter().map(|r| r.tokens.clone()).collect();
    let scorer = train_ngram(&token_lists, order, smoothing_k)?;
    results
        .iter()
        .map(|result| {
            let plan = plan_masks(result, seed, mask_rate)?;
            score_masked(
                &scorer,
                &result.tokens,
                &plan,
                result.orthography,
                &spec.name,
            )
        })
        .collect()
}

fn collect_scores(
    spec: &TokenizerSpec,
    options: &AuditOptions,
    results_a: &[TokenizationResult],
    results_b: &[TokenizationResult],
) -> Result<(Vec<ScoreRecord>, Vec<ScoreRecord>)> {
    match &options.scorer {
        ScorerSource::BuiltIn { order, smoothing_k } => Ok((
            score_side_builtin(
                spec,
                results_a,
                *order,
                *smoothing_k,
                options.mask_seed,
                options.mask_rate,
            )?,
            score_side_builtin(
                spec,
                results_b,
                *order,
                *smoothing_k,
                options.mask_seed,
                options.mask_rate,
            )?,
        )),
        ScorerSource::External(records) => {
            let indexed: HashMap<(&str, Orthography), &ScoreRecord> = records
                .iter()
                .filter(|r| r.model_name == spec.name)
                .map(|r| ((r.sentence_id.as_str(), r.orthography), r))
                .collect();
            let lookup = |results: &[TokenizationResult]| -> Result<Vec<ScoreRecord>> {
                let mut missing = Vec::new();
                let mut found = Vec::new();
                for result in results {
                    match indexed.get(&(result.sentence_id.as_str(), result.orthography)) {
                        Some(record) => found.push((*record).clone()),
                        None => missing.push(format!(
                            "({}, {})",
                            result.sentence_id, result.orthography
                        )),
                    }
                }
                if !missing.is_empty() {
                    return Err(Error::validation(format!(
                        "model {:?}: external scores missing for {}",
                        spec.name,
                        missing.join(", ")
                    )));
                }
                Ok(found)
            };
            Ok((lookup(results_a)?, lookup(results_b)?))
        }
    }
}

/// Reduce per-sentence scores to (mean-of-per-sentence-BPC, pooled BPC).
/// The pooled variant is total bits over total characters.
fn reduce_bpc(results: &[TokenizationResult], records: &[ScoreRecord]) -> Result<(f64, f64)> {
    debug_assert_eq!(results.len(), records.len());
    let mut per_sentence = Vec::with_capacity(results.len());
    let mut total_nats = Vec::with_capacity(results.len());
    let mut total_chars = 0usize;
    for (result, record) in results.iter().zip(records) {
        per_sentence.push(bpc(
            record.mean_nll_nats,
            record.masked_count,
            result.char_count,
        )?);
        total_nats.push(record.mean_nll_nats * record.masked_count as f64);
        total_chars += result.char_count;
    }
    let mean = kahan_mean(per_sentence)?;
    let pooled = kahan_sum(total_nats) / std::f64::consts::LN_2 / total_chars as f64;
    Ok((mean, pooled))
}

/// Map token strings to the spec's vocabulary ids, optionally wrapping the
/// sequence in two sentinel ids placed just past the vocabulary.
pub fn build_input_ids(
    spec: &TokenizerSpec,
    result: &TokenizationResult,
    add_special_tokens: bool,
) -> Result<Vec<u32>> {
    let vocab_size = spec.vocab_size() as u32;
    let mut ids = Vec::with_capacity(result.token_count + 2);
    if add_special_tokens {
        ids.push(vocab_size); // start sentinel
    }
    for token in &result.tokens {
        let id = spec.id_of(token).ok_or_else(|| {
            Error::internal(format!(
                "segmenter emitted token {token:?} outside its own vocabulary"
            ))
        })?;
        ids.push(id);
    }
    if add_special_tokens {
        ids.push(vocab_size + 1); // end sentinel
    }
    Ok(ids)
}

fn run_latency_axis(
    spec: &TokenizerSpec,
    bench: &BenchOptions,
    results_a: &[TokenizationResult],
    results_b: &[TokenizationResult],
) -> Result<LatencyBlock> {
    // The encoder's embedding table must cover the tokenizer vocabulary
    // plus the two sentinel rows.
    let needed = spec.vocab_size() + 2;
    let config = bench
        .config
        .with_vocab_size(bench.config.vocab_size.max(needed));

    let sequences = |results: &[TokenizationResult]| -> Result<Vec<TimedSequence>> {
        results
            .iter()
            .map(|result| {
                Ok(TimedSequence {
                    sentence_id: result.sentence_id.clone(),
                    orthography: result.orthography,
                    token_ids: build_input_ids(spec, result, bench.add_special_tokens)?,
                })
            })
            .collect()
    };
    let run = run_benchmark(
        &config,
        &sequences(results_a)?,
        &sequences(results_b)?,
        bench.warmup,
        bench.repeats,
    )?;
    Ok(latency_block_from_run(&run))
}

/// Fold a live benchmark into the report block, including the
/// quadratic-model comparison.
pub fn latency_block_from_run(run: &BenchmarkRun) -> LatencyBlock {
    let rho = run.summary_b.median_seconds / run.summary_a.median_seconds;
    let predicted = quadratic_cost_ratio(
        run.summary_a.mean_token_len,
        run.summary_b.mean_token_len,
    )
    .ok();
    LatencyBlock {
        median_a_seconds: run.summary_a.median_seconds,
        median_b_seconds: run.summary_b.median_seconds,
        rho_lat: rho,
        throughput_a_sps: 1.0 / run.summary_a.median_seconds,
        throughput_b_sps: 1.0 / run.summary_b.median_seconds,
        live: true,
        mean_token_len_a: Some(run.summary_a.mean_token_len),
        mean_token_len_b: Some(run.summary_b.mean_token_len),
        quadratic_predicted_ratio: predicted,
        measured_vs_quadratic_residual: predicted.map(|p| rho / p),
        encoder: Some(run.config),
        environment: Some(run.environment.clone()),
        warmup: Some(run.warmup),
        repeats: Some(run.repeats),
    }
}

// ---------------------------------------------------------------------------
// Summary ingestion (replay mode)
// ---------------------------------------------------------------------------

/// Pre-aggregated per-orthography numbers for one model. Latency may be
/// given as medians or as throughputs (inverted internally); either both
/// sides or neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub fertility_a: f64,
    pub fertility_b: f64,
    pub bpc_a: f64,
    pub bpc_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_latency_a_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_latency_b_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput_a_sps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput_b_sps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cer_rt: Option<f64>,
}

/// Load line-delimited [`ModelSummary`] records.
pub fn load_summaries(path: impl AsRef<Path>) -> Result<Vec<ModelSummary>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_summaries(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_summaries(text: &str) -> Result<Vec<ModelSummary>> {
    let mut summaries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let summary: ModelSummary = serde_json::from_str(line)
            .map_err(|e| Error::parse(format!("line {}: {e}", lineno + 1)))?;
        summaries.push(summary);
    }
    if summaries.is_empty() {
        return Err(Error::validation("summary file contains no records"));
    }
    Ok(summaries)
}

fn summary_latency(summary: &ModelSummary) -> Result<Option<(f64, f64)>> {
    let medians = (summary.median_latency_a_s, summary.median_latency_b_s);
    let throughputs = (summary.throughput_a_sps, summary.throughput_b_sps);
    match (medians, throughputs) {
        ((Some(a), Some(b)), _) => Ok(Some((a, b))),
        ((None, None), (Some(ta), Some(tb))) => {
            for (side, t) in [("a", ta), ("b", tb)] {
                if t <= 0.0 || t.is_nan() {
                    return Err(Error::validation(format!(
                        "model {:?}: throughput_{side}_sps must be positive, got {t}",
                        summary.model
                    )));
                }
            }
            Ok(Some((1.0 / ta, 1.0 / tb)))
        }
        ((None, None), (None, None)) => Ok(None),
        _ => Err(Error::validation(format!(
            "model {:?}: latency must be given as both medians or both throughputs",
            summary.model
        ))),
    }
}

/// Run only the delta/ratio layer over pre-aggregated summaries.
pub fn replay_summaries(summaries: &[ModelSummary]) -> Result<Vec<ScriptTaxReport>> {
    summaries
        .iter()
        .map(|summary| {
            let latency = summary_latency(summary)?
                .map(|(median_a, median_b)| -> Result<LatencyBlock> {
                    let rho = latency_tax(median_a, median_b)?;
                    Ok(LatencyBlock {
                        median_a_seconds: median_a,
                        median_b_seconds: median_b,
                        rho_lat: rho,
                        throughput_a_sps: 1.0 / median_a,
                        throughput_b_sps: 1.0 / median_b,
                        live: false,
                        mean_token_len_a: None,
                        mean_token_len_b: None,
                        quadratic_predicted_ratio: None,
                        measured_vs_quadratic_residual: None,
                        encoder: None,
                        environment: None,
                        warmup: None,
                        repeats: None,
                    })
                })
                .transpose()?;
            let report = ScriptTaxReport {
                model_name: summary.model.clone(),
                fertility_a: summary.fertility_a,
                fertility_b: summary.fertility_b,
                delta_f: summary.fertility_b - summary.fertility_a,
                bpc_a: summary.bpc_a,
                bpc_b: summary.bpc_b,
                bpc_a_pooled: None,
                bpc_b_pooled: None,
                delta_bpc: bpc_tax(summary.bpc_a, summary.bpc_b)?,
                latency,
                cer_rt: summary.cer_rt,
                provenance: Provenance::summary_ingestion(),
            };
            report.validate()?;
            Ok(report)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Emission and reload
// ---------------------------------------------------------------------------

/// On-disk structured report: schema version plus per-model entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub models: Vec<ScriptTaxReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    Tabular,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" => Ok(ReportFormat::Structured),
            "tabular" => Ok(ReportFormat::Tabular),
            other => Err(Error::validation(format!(
                "report format must be \"structured\" or \"tabular\", got {other:?}"
            ))),
        }
    }
}

/// Structured (JSON) serialization: deterministic byte-for-byte for
/// identical inputs.
pub fn structured_report_string(reports: &[ScriptTaxReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::validation("no reports to emit"));
    }
    for report in reports {
        report.validate()?;
    }
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        models: reports.to_vec(),
    };
    let mut body = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::internal(format!("report serialization failed: {e}")))?;
    body.push('\n');
    Ok(body)
}

fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "-".to_string(),
    }
}

/// Tabular serialization: one row per (model, orthography) plus one deltas
/// row per model.
pub fn tabular_report_string(reports: &[ScriptTaxReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::validation("no reports to emit"));
    }
    let mut out =
        String::from("#model\trow\tfertility\tbpc\tmedian_latency_s\tthroughput_sps\tcer_rt\n");
    for report in reports {
        report.validate()?;
        let lat = report.latency.as_ref();
        out.push_str(&format!(
            "{}\tA\t{}\t{}\t{}\t{}\t-\n",
            report.model_name,
            report.fertility_a,
            report.bpc_a,
            cell(lat.map(|l| l.median_a_seconds)),
            cell(lat.map(|l| l.throughput_a_sps)),
        ));
        out.push_str(&format!(
            "{}\tB\t{}\t{}\t{}\t{}\t-\n",
            report.model_name,
            report.fertility_b,
            report.bpc_b,
            cell(lat.map(|l| l.median_b_seconds)),
            cell(lat.map(|l| l.throughput_b_sps)),
        ));
        // Deltas row: fertility gap, BPC tax, latency tax, CER.
        out.push_str(&format!(
            "{}\tdelta\t{}\t{}\t{}\t-\t{}\n",
            report.model_name,
            report.delta_f,
            report.delta_bpc,
            cell(lat.map(|l| l.rho_lat)),
            cell(report.cer_rt),
        ));
    }
    Ok(out)
}

/// Write a report file in the requested format.
pub fn emit_report(
    reports: &[ScriptTaxReport],
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let body = match format {
        ReportFormat::Structured => structured_report_string(reports)?,
        ReportFormat::Tabular => tabular_report_string(reports)?,
    };
    fs::write(path, body)?;
    Ok(())
}

/// Reload a structured report, checking schema version and re-running
/// every internal-consistency invariant.
pub fn load_report(path: impl AsRef<Path>) -> Result<Vec<ScriptTaxReport>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_report(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_report(text: &str) -> Result<Vec<ScriptTaxReport>> {
    let file: ReportFile = serde_json::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "schema version mismatch: this build reads version {SCHEMA_VERSION}, file has {}",
            file.schema_version
        )));
    }
    for report in &file.models {
        report.validate()?;
    }
    Ok(file.models)
}

/// Emit the two plot-ready series: fertility bars per model×orthography
/// and BPC-vs-latency points per model×orthography. Returns the two file
/// paths.
pub fn emit_plot_data(
    reports: &[ScriptTaxReport],
    dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    if reports.is_empty() {
        return Err(Error::validation("no reports to plot"));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut fertility = String::from("#model\torthography\tfertility\n");
    for report in reports {
        fertility.push_str(&format!(
            "{}\tA\t{}\n{}\tB\t{}\n",
            report.model_name, report.fertility_a, report.model_name, report.fertility_b
        ));
    }
    let fertility_path = dir.join("fertility.tsv");
    fs::write(&fertility_path, fertility)?;

    let mut points = String::from("#model\torthography\tbpc\tmedian_latency_s\n");
    for report in reports {
        if let Some(block) = &report.latency {
            points.push_str(&format!(
                "{}\tA\t{}\t{}\n{}\tB\t{}\t{}\n",
                report.model_name,
                report.bpc_a,
                block.median_a_seconds,
                report.model_name,
                report.bpc_b,
                block.median_b_seconds,
            ));
        }
    }
    let points_path = dir.join("bpc_latency.tsv");
    fs::write(&points_path, points)?;

    Ok((fertility_path, points_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, CorpusFormat, CorpusOptions};
    use crate::tokenizer::TokenizerSpec;

    fn demo_corpus() -> PairedCorpus {
        parse_corpus(
            "s1\tthe cat sat here\tzq wv xy zz\ns2\tthe cat ran far\tqz vw yx qq\n",
            CorpusFormat::Tsv,
            &CorpusOptions::default(),
        )
        .unwrap()
    }

    fn demo_spec() -> TokenizerSpec {
        // Whole words for side A, character fallback for side B.
        let tokens: Vec<String> = ["[UNK]", "the", "cat", "sat", "here", "ran", "far"]
            .map(String::from)
            .into_iter()
            .chain(('q'..='z').map(|c| c.to_string()))
            .chain(('q'..='z').map(|c| format!("##{c}")))
            .collect();
        TokenizerSpec::wordpiece("demo", tokens, "[UNK]").unwrap()
    }

    fn no_bench_options() -> AuditOptions {
        AuditOptions {
            bench: None,
            ..AuditOptions::default()
        }
    }

    #[test]
    fn audit_without_bench_produces_consistent_report() {
        let outcome = run_audit(&demo_corpus(), &[demo_spec()], &no_bench_options());
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        let report = &outcome.reports[0];
        assert_eq!(report.model_name, "demo");
        assert!((report.fertility_a - 1.0).abs() < 1e-15);
        assert!(report.fertility_b > 1.9);
        assert!(report.delta_f > 0.0);
        assert!(report.latency.is_none());
        assert!(report.cer_rt.is_none());
        assert!(report.bpc_a_pooled.is_some());
        assert_eq!(report.provenance.mask_seed, Some(42));
        report.validate().unwrap();
    }

    #[test]
    fn identity_corpus_yields_zero_taxes() {
        let corpus = parse_corpus(
            "s1\tthe cat\tthe cat\ns2\tcat the\tcat the\n",
            CorpusFormat::Tsv,
            &CorpusOptions::default(),
        )
        .unwrap();
        let outcome = run_audit(&corpus, &[demo_spec()], &no_bench_options());
        let report = &outcome.reports[0];
        assert_eq!(report.delta_f, 0.0);
        assert!(report.delta_bpc.abs() < 1e-12);
    }

    #[test]
    fn failing_model_does_not_abort_others() {
        let corpus = demo_corpus();
        let mut spec_bad = demo_spec();
        spec_bad.name = "missing-scores".to_string();
        let options = AuditOptions {
            scorer: ScorerSource::External(Vec::new()),
            bench: None,
            ..AuditOptions::default()
        };
        let outcome = run_audit(&corpus, &[spec_bad, demo_spec()], &options);
        assert_eq!(outcome.failures.len(), 2); // no records for either
        assert!(outcome.failures[0].diagnostic.contains("missing"));

        let outcome = run_audit(&corpus, &[demo_spec()], &no_bench_options());
        assert_eq!(outcome.reports.len(), 1);
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn replay_published_style_summaries() {
        let summaries = vec![ModelSummary {
            model: "mbert-like".to_string(),
            fertility_a: 2.35,
            fertility_b: 6.73,
            bpc_a: 8.06,
            bpc_b: 9.65,
            median_latency_a_s: None,
            median_latency_b_s: None,
            throughput_a_sps: Some(3.8),
            throughput_b_sps: Some(0.23),
            cer_rt: Some(0.31),
        }];
        let reports = replay_summaries(&summaries).unwrap();
        let report = &reports[0];
        assert!((report.delta_f - 4.38).abs() < 1e-12);
        assert!((report.delta_bpc - 0.1973).abs() < 5e-4);
        let block = report.latency.as_ref().unwrap();
        assert!((block.rho_lat - 16.52).abs() < 0.01);
        assert!(!block.live);
        assert_eq!(report.cer_rt, Some(0.31));
        assert_eq!(report.provenance.scorer, "summary-ingestion");
        assert!(report.triple().is_some());
    }

    #[test]
    fn replay_rejects_one_sided_latency() {
        let summary = ModelSummary {
            model: "m".to_string(),
            fertility_a: 1.0,
            fertility_b: 2.0,
            bpc_a: 1.0,
            bpc_b: 2.0,
            median_latency_a_s: Some(0.1),
            median_latency_b_s: None,
            throughput_a_sps: None,
            throughput_b_sps: None,
            cer_rt: None,
        };
        assert!(replay_summaries(&[summary]).is_err());
    }

    #[test]
    fn structured_report_round_trips_byte_exact() {
        let outcome = run_audit(&demo_corpus(), &[demo_spec()], &no_bench_options());
        let reports = outcome.reports;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        emit_report(&reports, &path, ReportFormat::Structured).unwrap();
        let first = fs::read_to_string(&path).unwrap();

        let reloaded = load_report(&path).unwrap();
        assert_eq!(reloaded, reports);

        let again = structured_report_string(&reloaded).unwrap();
        assert_eq!(first, again);
    }

    #[test]
    fn schema_version_mismatch_is_explicit() {
        let outcome = run_audit(&demo_corpus(), &[demo_spec()], &no_bench_options());
        let mut body = structured_report_string(&outcome.reports).unwrap();
        body = body.replace("\"schema_version\": 1", "\"schema_version\": 99");
        let err = parse_report(&body).unwrap_err();
        assert!(err.to_string().contains("schema version"), "{err}");
    }

    #[test]
    fn tabular_report_row_counts() {
        let corpus = demo_corpus();
        let mut spec2 = demo_spec();
        spec2.name = "demo2".to_string();
        let outcome = run_audit(&corpus, &[demo_spec(), spec2], &no_bench_options());
        let table = tabular_report_string(&outcome.reports).unwrap();
        let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 6); // 4 orthography rows + 2 delta rows
        assert_eq!(rows.iter().filter(|r| r.contains("\tdelta\t")).count(), 2);
    }

    #[test]
    fn plot_data_shapes() {
        let corpus = demo_corpus();
        let mut spec2 = demo_spec();
        spec2.name = "demo2".to_string();
        let outcome = run_audit(&corpus, &[demo_spec(), spec2], &no_bench_options());
        let dir = tempfile::tempdir().unwrap();
        let (fertility_path, points_path) = emit_plot_data(&outcome.reports, dir.path()).unwrap();
        let fertility = fs::read_to_string(fertility_path).unwrap();
        let data_rows = fertility.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_rows, 4); // 2 models × 2 orthographies
        // No latency blocks here, so the points file is header-only.
        let points = fs::read_to_string(points_path).unwrap();
        assert_eq!(points.lines().count(), 1);
    }

    #[test]
    fn plot_data_reproduces_replayed_bar_heights() {
        let summaries = vec![
            ModelSummary {
                model: "mbert-like".to_string(),
                fertility_a: 2.35,
                fertility_b: 6.73,
                bpc_a: 8.06,
                bpc_b: 9.65,
                median_latency_a_s: None,
                median_latency_b_s: None,
                throughput_a_sps: None,
                throughput_b_sps: None,
                cer_rt: None,
            },
            ModelSummary {
                model: "xlmr-like".to_string(),
                fertility_a: 2.10,
                fertility_b: 6.85,
                bpc_a: 12.19,
                bpc_b: 17.94,
                median_latency_a_s: None,
                median_latency_b_s: None,
                throughput_a_sps: None,
                throughput_b_sps: None,
                cer_rt: None,
            },
        ];
        let reports = replay_summaries(&summaries).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (fertility_path, _) = emit_plot_data(&reports, dir.path()).unwrap();
        let series = fs::read_to_string(fertility_path).unwrap();
        for row in [
            "mbert-like\tA\t2.35",
            "mbert-like\tB\t6.73",
            "xlmr-like\tA\t2.1",
            "xlmr-like\tB\t6.85",
        ] {
            assert!(series.contains(row), "missing {row:?} in {series}");
        }
    }

    #[test]
    fn invariant_violation_is_internal_error() {
        let outcome = run_audit(&demo_corpus(), &[demo_spec()], &no_bench_options());
        let mut report = outcome.reports[0].clone();
        report.delta_f += 0.5;
        let err = report.validate().unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn sentinel_ids_sit_past_the_vocabulary() {
        let spec = demo_spec();
        let (results_a, _) = tokenize_corpus(&spec, &demo_corpus()).unwrap();
        let plain = build_input_ids(&spec, &results_a[0], false).unwrap();
        let wrapped = build_input_ids(&spec, &results_a[0], true).unwrap();
        assert_eq!(wrapped.len(), plain.len() + 2);
        assert_eq!(wrapped[0], spec.vocab_size() as u32);
        assert_eq!(*wrapped.last().unwrap(), spec.vocab_size() as u32 + 1);
        assert!(plain.iter().all(|&id| (id as usize) < spec.vocab_size()));
    }
}
