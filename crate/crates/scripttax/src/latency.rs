//! Wall-clock latency measurement on a small from-scratch transformer
//! encoder, plus the analytic quadratic cost model it is compared against.
//!
//! The forward pass is a real computation (embedding lookup, multi-head
//! self-attention with an explicit L×L score matrix, feed-forward blocks)
//! so measurements exhibit genuine cache and allocator behavior. Weights
//! are seeded and the math is single-threaded scalar code: identical
//! `(seed, token_ids)` always produce identical output checksums, and
//! nothing spawns hidden parallelism inside a timed section.

use std::time::Instant;

use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::corpus::Orthography;
use crate::error::{Error, Result};

/// Flops charged per attention score/value element: one multiply-add for
/// the QKᵀ product and one for the attention-weighted value sum, at two
/// flops each, per layer. The attention term is `ATTN_COST_COEFF · L² ·
/// hidden_dim` per layer.
pub const ATTN_COST_COEFF: u128 = 4;

/// Flops charged per linear-layer weight element, folding the token
/// projections (`hidden × hidden`) and the feed-forward passes (`hidden ×
/// ffn`) into one `L · hidden · (hidden + ffn)` term per layer at two
/// flops per multiply-add.
pub const LINEAR_COST_COEFF: u128 = 2;

/// A timed run must last at least this many timer ticks to count.
pub const MIN_TIMER_TICKS: f64 = 100.0;

/// Dimensions and weight seed for the benchmark encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub vocab_size: usize,
    pub seed: u64,
}

impl EncoderConfig {
    /// The reference benchmark shape: big enough to reach the
    /// attention-dominated regime near L ≈ 512, small enough to run on a
    /// desktop CPU.
    pub fn reference() -> Self {
        EncoderConfig {
            layers: 4,
            hidden_dim: 256,
            heads: 4,
            ffn_dim: 1024,
            vocab_size: 1024,
            seed: 42,
        }
    }

    /// A reduced shape for quick end-to-end runs and examples.
    pub fn small() -> Self {
        EncoderConfig {
            layers: 2,
            hidden_dim: 128,
            heads: 2,
            ffn_dim: 256,
            vocab_size: 1024,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("heads", self.heads),
            ("ffn_dim", self.ffn_dim),
            ("vocab_size", self.vocab_size),
        ] {
            if value == 0 {
                return Err(Error::validation(format!("{name} must be at least 1")));
            }
        }
        if !self.hidden_dim.is_multiple_of(self.heads) {
            return Err(Error::validation(format!(
                "hidden_dim {} is not divisible by heads {}",
                self.hidden_dim, self.heads
            )));
        }
        Ok(())
    }

    pub fn with_vocab_size(mut self, vocab_size: usize) -> Self {
        self.vocab_size = vocab_size;
        self
    }
}

/// Analytic flop count per forward pass under the documented two-term
/// model: `layers × (ATTN·L²·d + LIN·L·d·(d+ffn))`.
pub fn analytic_cost(config: &EncoderConfig, len: usize) -> u128 {
    attention_cost(config, len) + linear_cost(config, len)
}

/// The pure-attention sub-term, `layers × ATTN_COST_COEFF × L² × d`. Grows
/// exactly quadratically in L, which is what the quadratic cost model
/// isolates.
pub fn attention_cost(config: &EncoderConfig, len: usize) -> u128 {
    config.layers as u128
        * ATTN_COST_COEFF
        * (len as u128)
        * (len as u128)
        * config.hidden_dim as u128
}

fn linear_cost(config: &EncoderConfig, len: usize) -> u128 {
    config.layers as u128
        * LINEAR_COST_COEFF
        * len as u128
        * config.hidden_dim as u128
        * (config.hidden_dim as u128 + config.ffn_dim as u128)
}

struct LayerWeights {
    wq: Vec<f32>,
    wk: Vec<f32>,
    wv: Vec<f32>,
    wo: Vec<f32>,
    w1: Vec<f32>,
    b1: Vec<f32>,
    w2: Vec<f32>,
    b2: Vec<f32>,
}

/// The benchmark model: seeded random weights, scalar forward pass.
pub struct Encoder {
    config: EncoderConfig,
    embedding: Vec<f32>,
    layers: Vec<LayerWeights>,
}

/// Output of one timed forward pass. The checksum folds every output
/// activation into one number so the optimizer cannot discard the work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardRun {
    pub seconds: f64,
    pub checksum: f64,
}

fn uniform(rng: &mut rand_chacha::ChaCha20Rng, limit: f32) -> f32 {
    // 24 explicit mantissa bits; stable across dependency versions.
    let unit = (rng.next_u32() >> 8) as f32 / (1u32 << 24) as f32;
    (2.0 * unit - 1.0) * limit
}

fn seeded_matrix(rng: &mut rand_chacha::ChaCha20Rng, rows: usize, cols: usize) -> Vec<f32> {
    let limit = (6.0 / (rows + cols) as f32).sqrt();
    (0..rows * cols).map(|_| uniform(rng, limit)).collect()
}

impl Encoder {
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(config.seed);
        let d = config.hidden_dim;
        let embedding = seeded_matrix(&mut rng, config.vocab_size, d);
        let layers = (0..config.layers)
            .map(|_| LayerWeights {
                wq: seeded_matrix(&mut rng, d, d),
                wk: seeded_matrix(&mut rng, d, d),
                wv: seeded_matrix(&mut rng, d, d),
                wo: seeded_matrix(&mut rng, d, d),
                w1: seeded_matrix(&mut rng, d, config.ffn_dim),
                b1: vec![0.0; config.ffn_dim],
                w2: seeded_matrix(&mut rng, config.ffn_dim, d),
                b2: vec![0.0; d],
            })
            .collect();
        Ok(Encoder {
            config,
            embedding,
            layers,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    /// One timed forward pass over a token id sequence.
    pub fn forward(&self, token_ids: &[u32]) -> Result<ForwardRun> {
        if token_ids.is_empty() {
            return Err(Error::validation("encoder input must not be empty"));
        }
        if let Some(&bad) = token_ids
            .iter()
            .find(|&&id| id as usize >= self.config.vocab_size)
        {
            return Err(Error::validation(format!(
                "token id {bad} out of range for vocab_size {}",
                self.config.vocab_size
            )));
        }

        let ids = std::hint::black_box(token_ids);
        let start = Instant::now();
        let output = self.forward_raw(ids);
        let checksum: f64 = output.iter().map(|&v| v as f64).sum();
        let checksum = std::hint::black_box(checksum);
        let seconds = start.elapsed().as_secs_f64();

        if !checksum.is_finite() {
            return Err(Error::internal(format!(
                "non-finite encoder output checksum {checksum}"
            )));
        }
        Ok(ForwardRun { seconds, checksum })
    }

    fn forward_raw(&self, token_ids: &[u32]) -> Vec<f32> {
        let d = self.config.hidden_dim;
        let heads = self.config.heads;
        let head_dim = d / heads;
        let ffn = self.config.ffn_dim;
        let len = token_ids.len();
        let scale = 1.0 / (head_dim as f32).sqrt();

        // Embedding lookup.
        let mut x = vec![0.0f32; len * d];
        for (row, &id) in token_ids.iter().enumerate() {
            let src = &self.embedding[id as usize * d..(id as usize + 1) * d];
            x[row * d..(row + 1) * d].copy_from_slice(src);
        }

        let mut normed = vec![0.0f32; len * d];
        let mut q = vec![0.0f32; len * d];
        let mut k = vec![0.0f32; len * d];
        let mut v = vec![0.0f32; len * d];
        let mut context = vec![0.0f32; len * d];
        let mut attn_out = vec![0.0f32; len * d];
        let mut scores = vec![0.0f32; len];
        let mut hidden = vec![0.0f32; len * ffn];
        let mut ffn_out = vec![0.0f32; len * d];

        for layer in &self.layers {
            layer_norm(&x, &mut normed, len, d);
            matmul(&normed, &layer.wq, &mut q, len, d, d);
            matmul(&normed, &layer.wk, &mut k, len, d, d);
            matmul(&normed, &layer.wv, &mut v, len, d, d);

            // Explicit L×L attention per head, one query row at a time.
            context.iter_mut().for_each(|c| *c = 0.0);
            for head in 0..heads {
                let offset = head * head_dim;
                for i in 0..len {
                    let q_row = &q[i * d + offset..i * d + offset + head_dim];
                    let mut max_score = f32::NEG_INFINITY;
                    for (j, score) in scores[..len].iter_mut().enumerate() {
                        let k_row = &k[j * d + offset..j * d + offset + head_dim];
                        let dot: f32 =
                            q_row.iter().zip(k_row).map(|(a, b)| a * b).sum();
                        *score = dot * scale;
                        max_score = max_score.max(*score);
                    }
                    let mut total = 0.0f32;
                    for score in scores[..len].iter_mut() {
                        *score = (*score - max_score).exp();
                        total += *score;
                    }
                    let inv_total = 1.0 / total;
                    let ctx_row =
                        &mut context[i * d + offset..i * d + offset + head_dim];
                    for j in 0..len {
                        let weight = scores[j] * inv_total;
                        let v_row = &v[j * d + offset..j * d + offset + head_dim];
                        for (c, &value) in ctx_row.iter_mut().zip(v_row) {
                            *c += weight * value;
                        }
                    }
                }
            }
            matmul(&context, &layer.wo, &mut attn_out, len, d, d);
            for (xi, &a) in x.iter_mut().zip(&attn_out) {
                *xi += a;
            }

            layer_norm(&x, &mut normed, len, d);
            matmul(&normed, &layer.w1, &mut hidden, len, d, ffn);
            for row in 0..len {
                for (h, &bias) in hidden[row * ffn..(row + 1) * ffn]
                    .iter_mut()
                    .zip(&layer.b1)
                {
                    *h = (*h + bias).max(0.0);
                }
            }
            matmul(&hidden, &layer.w2, &mut ffn_out, len, ffn, d);
            for row in 0..len {
                for (o, &bias) in ffn_out[row * d..(row + 1) * d]
                    .iter_mut()
                    .zip(&layer.b2)
                {
                    *o += bias;
                }
            }
            for (xi, &f) in x.iter_mut().zip(&ffn_out) {
                *xi += f;
            }
        }
        x
    }
}

/// Row-major `out[n×d_out] = x[n×d_in] · w[d_in×d_out]`, ikj loop order.
fn matmul(x: &[f32], w: &[f32], out: &mut [f32], n: usize, d_in: usize, d_out: usize) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n {
        for kk in 0..d_in {
            let factor = x[i * d_in + kk];
            let w_row = &w[kk * d_out..(kk + 1) * d_out];
            let out_row = &mut out[i * d_out..(i + 1) * d_out];
            for (o, &weight) in out_row.iter_mut().zip(w_row) {
                *o += factor * weight;
            }
        }
    }
}

fn layer_norm(x: &[f32], out: &mut [f32], n: usize, d: usize) {
    const EPS: f32 = 1e-5;
    for row in 0..n {
        let slice = &x[row * d..(row + 1) * d];
        let mean: f32 = slice.iter().sum::<f32>() / d as f32;
        let var: f32 =
            slice.iter().map(|&v| (v - mean) * (v - mean)).sum::<f32>() / d as f32;
        let inv = 1.0 / (var + EPS).sqrt();
        for (o, &value) in out[row * d..(row + 1) * d].iter_mut().zip(slice) {
            *o = (value - mean) * inv;
        }
    }
}

/// Median of a sample set; even counts average the two middle order
/// statistics.
pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of an empty sample set");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN timing samples"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Estimate the smallest observable clock increment, in seconds.
pub fn timer_resolution() -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..32 {
        let start = Instant::now();
        let mut elapsed = start.elapsed();
        while elapsed.is_zero() {
            elapsed = start.elapsed();
        }
        best = best.min(elapsed.as_secs_f64());
    }
    best
}

/// One sentence's token ids, ready for the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSequence {
    pub sentence_id: String,
    pub orthography: Orthography,
    pub token_ids: Vec<u32>,
}

/// Per-sentence benchmark record (one output line in `bench` dumps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceTiming {
    pub sentence_id: String,
    pub orthography: Orthography,
    pub token_len: usize,
    pub median_seconds: f64,
    pub repeats: usize,
}

/// Per-orthography latency summary: the median is taken over per-sentence
/// medians, and throughput is its inverse (unit batches).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub orthography: Orthography,
    pub n: usize,
    pub median_seconds: f64,
    pub throughput_sps: f64,
    pub mean_token_len: f64,
    pub warmup_discarded: usize,
}

/// Everything one benchmark run produced, including the environment
/// metadata that makes the numbers interpretable later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub config: EncoderConfig,
    pub environment: String,
    pub timer_resolution_seconds: f64,
    pub warmup: usize,
    pub repeats: usize,
    pub records: Vec<SentenceTiming>,
    pub summary_a: LatencySummary,
    pub summary_b: LatencySummary,
}

pub fn environment_string() -> String {
    format!(
        "{}-{}; {} v{}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
    )
}

/// Summarize per-sentence timings for one side. Pure, so summaries are
/// invariant to the input order of sentences.
pub fn summarize_timings(
    orthography: Orthography,
    records: &[SentenceTiming],
    warmup_per_sentence: usize,
) -> Result<LatencySummary> {
    let side: Vec<&SentenceTiming> = records
        .iter()
        .filter(|r| r.orthography == orthography)
        .collect();
    if side.is_empty() {
        return Err(Error::validation(format!(
            "no timing records for orthography {orthography}"
        )));
    }
    let medians: Vec<f64> = side.iter().map(|r| r.median_seconds).collect();
    let median_seconds = median(&medians);
    if median_seconds <= 0.0 || median_seconds.is_nan() {
        return Err(Error::validation(format!(
            "non-positive median latency for orthography {orthography}"
        )));
    }
    Ok(LatencySummary {
        orthography,
        n: side.len(),
        median_seconds,
        throughput_sps: 1.0 / median_seconds,
        mean_token_len: side.iter().map(|r| r.token_len as f64).sum::<f64>() / side.len() as f64,
        warmup_discarded: warmup_per_sentence * side.len(),
    })
}

/// Benchmark both orthographies on one encoder: per sentence, `warmup`
/// untimed then `repeats` timed runs, keeping the per-sentence median.
/// Strictly single-threaded and in input order.
pub fn run_benchmark(
    config: &EncoderConfig,
    side_a: &[TimedSequence],
    side_b: &[TimedSequence],
    warmup: usize,
    repeats: usize,
) -> Result<BenchmarkRun> {
    if repeats == 0 {
        return Err(Error::validation("repeats must be at least 1"));
    }
    if side_a.is_empty() || side_b.is_empty() {
        return Err(Error::validation(
            "benchmark needs at least one sequence per orthography",
        ));
    }
    let encoder = Encoder::new(*config)?;
    let resolution = timer_resolution();
    let floor = MIN_TIMER_TICKS * resolution;

    let time_sequence = |sequence: &TimedSequence| -> Result<SentenceTiming> {
        for _ in 0..warmup {
            encoder.forward(&sequence.token_ids)?;
        }
        let mut samples = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let run = encoder.forward(&sequence.token_ids)?;
            if run.seconds < floor {
                return Err(Error::validation(format!(
                    "timed run of {:.3e}s for sentence {:?} is under {MIN_TIMER_TICKS} timer \
                     ticks ({:.3e}s); enlarge the model or sequences for reliable timing",
                    run.seconds, sequence.sentence_id, floor
                )));
            }
            samples.push(run.seconds);
        }
        Ok(SentenceTiming {
            sentence_id: sequence.sentence_id.clone(),
            orthography: sequence.orthography,
            token_len: sequence.token_ids.len(),
            median_seconds: median(&samples),
            repeats,
        })
    };

    // Alternate sides sentence by sentence so slow environment drift lands
    // on both orthographies equally instead of biasing whichever side runs
    // last. The order is still fixed and single-threaded.
    let mut records = Vec::with_capacity(side_a.len() + side_b.len());
    for index in 0..side_a.len().max(side_b.len()) {
        if let Some(sequence) = side_a.get(index) {
            records.push(time_sequence(sequence)?);
        }
        if let Some(sequence) = side_b.get(index) {
            records.push(time_sequence(sequence)?);
        }
    }

    let summary_a = summarize_timings(Orthography::A, &records, warmup)?;
    let summary_b = summarize_timings(Orthography::B, &records, warmup)?;
    Ok(BenchmarkRun {
        config: *config,
        environment: environment_string(),
        timer_resolution_seconds: resolution,
        warmup,
        repeats,
        records,
        summary_a,
        summary_b,
    })
}
