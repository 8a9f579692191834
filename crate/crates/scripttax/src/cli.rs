//! Command-line front end. One thin binary dispatches here; all real work
//! lives in the library modules.
//!
//! Exit codes: 0 success, 1 validation/parse error, 2 I/O error,
//! 3 internal invariant violation.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::convert::{apply_mapping, load_mapping, round_trip};
use crate::corpus::{
    load_paired_corpus_with, CorpusFormat, CorpusOptions, Orthography, PairedCorpus,
};
use crate::error::{Error, Result};
use crate::latency::EncoderConfig;
use crate::metrics::{cer_round_trip, fertility_gap, mean_fertility};
use crate::report::{
    emit_plot_data, load_report, load_summaries, replay_summaries, run_audit,
    structured_report_string, tabular_report_string, AuditOptions, BenchOptions, ConverterPair,
    ReportFormat, ScorerSource,
};
use crate::scorer::{ingest_external_scores, plan_masks, score_masked, train_ngram};
use crate::tokenizer::{load_tokenizer_spec, tokenize_corpus, TokenizerSpec};

#[derive(Parser)]
#[command(
    name = "scripttax",
    version,
    about = "Audit the script tax of subword tokenizers: fertility, BPC, latency, round-trip CER"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Paired corpus file (`id<TAB>text_a<TAB>text_b` or JSON records).
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus file format: tsv | records.
    #[arg(long, default_value = "tsv")]
    format: CorpusFormat,
    /// Apply canonical composition (NFC) to texts at load; recorded in output.
    #[arg(long)]
    normalize_nfc: bool,
}

impl CorpusArgs {
    fn load(&self) -> Result<PairedCorpus> {
        load_paired_corpus_with(
            &self.corpus,
            self.format,
            &CorpusOptions {
                normalize_nfc: self.normalize_nfc,
            },
        )
    }
}

#[derive(Args)]
struct MaskArgs {
    /// Masking seed, recorded in every report.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fraction of tokens to mask per sentence, in (0, 1].
    #[arg(long, default_value_t = crate::scorer::DEFAULT_MASK_RATE)]
    mask_rate: f64,
}

#[derive(Args)]
struct NGramArgs {
    /// Left-context order of the built-in scorer.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Add-k smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    smoothing_k: f64,
}

#[derive(Args)]
struct EncoderArgs {
    #[arg(long, default_value_t = 4)]
    layers: usize,
    #[arg(long, default_value_t = 256)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    #[arg(long, default_value_t = 1024)]
    ffn_dim: usize,
    /// Embedding rows; grown automatically to fit the tokenizer vocabulary.
    #[arg(long, default_value_t = 1024)]
    encoder_vocab: usize,
    /// Weight-initialization seed.
    #[arg(long, default_value_t = 42)]
    encoder_seed: u64,
    /// Untimed runs per sentence before measurement.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Timed runs per sentence (median kept).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Do not wrap model inputs in sentinel start/end ids.
    #[arg(long)]
    no_special_tokens: bool,
}

impl EncoderArgs {
    fn bench_options(&self) -> BenchOptions {
        BenchOptions {
            config: EncoderConfig {
                layers: self.layers,
                hidden_dim: self.hidden_dim,
                heads: self.heads,
                ffn_dim: self.ffn_dim,
                vocab_size: self.encoder_vocab,
                seed: self.encoder_seed,
            },
            warmup: self.warmup,
            repeats: self.repeats,
            add_special_tokens: !self.no_special_tokens,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment both corpus sides and dump per-sentence results.
    Tokenize {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Tokenizer manifest path; repeatable.
        #[arg(long = "tokenizer", required = true)]
        tokenizers: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean fertility per orthography and the fertility gap per model.
    Fertility {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long = "tokenizer", required = true)]
        tokenizers: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score masked tokens with the built-in n-gram scorer.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long = "tokenizer", required = true)]
        tokenizers: Vec<PathBuf>,
        #[command(flatten)]
        mask: MaskArgs,
        #[command(flatten)]
        ngram: NGramArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark encoder latency per sentence and per orthography.
    Bench {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long = "tokenizer", required = true)]
        tokenizers: Vec<PathBuf>,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a mapping table to one corpus side (optionally round-trip).
    Convert {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Forward rule table (TSV `source<TAB>target`).
        #[arg(long)]
        mapping: PathBuf,
        /// Backward table; when given, output is the round-trip result.
        #[arg(long)]
        mapping_back: Option<PathBuf>,
        /// Which side to convert: A | B.
        #[arg(long, default_value = "A")]
        side: Orthography,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round-trip character error rate of side A under a mapping pair.
    Cer {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        mapping_back: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: fertility, BPC, latency, optional CER, one report.
    Audit {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long = "tokenizer", required = true)]
        tokenizers: Vec<PathBuf>,
        /// External score records; replaces the built-in scorer.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[command(flatten)]
        mask: MaskArgs,
        #[command(flatten)]
        ngram: NGramArgs,
        /// Skip the latency axis.
        #[arg(long)]
        no_bench: bool,
        #[command(flatten)]
        encoder: EncoderArgs,
        /// Forward mapping for the CER check (requires --mapping-back).
        #[arg(long, requires = "mapping_back")]
        mapping: Option<PathBuf>,
        #[arg(long, requires = "mapping")]
        mapping_back: Option<PathBuf>,
        /// Structured report destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the tabular rendering here.
        #[arg(long)]
        tabular_out: Option<PathBuf>,
        /// Also emit plot-ready series into this directory.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Replay pre-aggregated per-orthography summaries through the
    /// delta/ratio layer only.
    Replay {
        /// Line-delimited model summaries.
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: structured | tabular.
        #[arg(long, default_value = "structured")]
        report_format: ReportFormat,
    },
    /// Emit plot-ready data series from a saved structured report.
    PlotData {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Parse and dispatch; returns the process exit code.
pub fn run(args: impl Iterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_output(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn load_tokenizers(paths: &[PathBuf]) -> Result<Vec<TokenizerSpec>> {
    paths.iter().map(load_tokenizer_spec).collect()
}

fn jsonl_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::internal(format!("serialization failed: {e}")))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Tokenize {
            corpus,
            tokenizers,
            out,
        } => {
            let corpus = corpus.load()?;
            let specs = load_tokenizers(&tokenizers)?;
            #[derive(Serialize)]
            struct Row<'a> {
                model: &'a str,
                #[serde(flatten)]
                result: &'a crate::tokenizer::TokenizationResult,
            }
            let mut body = String::new();
            for spec in &specs {
                let (side_a, side_b) = tokenize_corpus(spec, &corpus)?;
                for result in side_a.iter().chain(&side_b) {
                    body.push_str(&jsonl_line(&Row {
                        model: &spec.name,
                        result,
                    })?);
                    body.push('\n');
                }
            }
            write_output(&out, &body)
        }

        Command::Fertility {
            corpus,
            tokenizers,
            out,
        } => {
            let corpus = corpus.load()?;
            let specs = load_tokenizers(&tokenizers)?;
            #[derive(Serialize)]
            struct Row<'a> {
                model: &'a str,
                fertility_a: f64,
                fertility_b: f64,
                delta_f: f64,
            }
            let mut body = String::new();
            for spec in &specs {
                let (side_a, side_b) = tokenize_corpus(spec, &corpus)?;
                body.push_str(&jsonl_line(&Row {
                    model: &spec.name,
                    fertility_a: mean_fertility(&side_a)?,
                    fertility_b: mean_fertility(&side_b)?,
                    delta_f: fertility_gap(&side_a, &side_b)?,
                })?);
                body.push('\n');
            }
            write_output(&out, &body)
        }

        Command::Score {
            corpus,
            tokenizers,
            mask,
            ngram,
            out,
        } => {
            let corpus = corpus.load()?;
            let specs = load_tokenizers(&tokenizers)?;
            let mut body = String::new();
            for spec in &specs {
                let (side_a, side_b) = tokenize_corpus(spec, &corpus)?;
                for results in [&side_a, &side_b] {
                    let token_lists: Vec<Vec<String>> =
                        results.iter().map(|r| r.tokens.clone()).collect();
                    let scorer = train_ngram(&token_lists, ngram.order, ngram.smoothing_k)?;
                    for result in results.iter() {
                        let plan = plan_masks(result, mask.seed, mask.mask_rate)?;
                        let record = score_masked(
                            &scorer,
                            &result.tokens,
                            &plan,
                            result.orthography,
                            &spec.name,
                        )?;
                        body.push_str(&jsonl_line(&record)?);
                        body.push('\n');
                    }
                }
            }
            write_output(&out, &body)
        }

        Command::Bench {
            corpus,
            tokenizers,
            encoder,
            out,
        } => {
            let corpus = corpus.load()?;
            let specs = load_tokenizers(&tokenizers)?;
            let bench = encoder.bench_options();
            #[derive(Serialize)]
            #[serde(tag = "type", rename_all = "lowercase")]
            enum Line<'a> {
                Record {
                    model: &'a str,
                    #[serde(flatten)]
                    record: &'a crate::latency::SentenceTiming,
                },
                Summary {
                    model: &'a str,
                    config: &'a EncoderConfig,
                    environment: &'a str,
                    timer_resolution_seconds: f64,
                    summary_a: &'a crate::latency::LatencySummary,
                    summary_b: &'a crate::latency::LatencySummary,
                },
            }
            let mut body = String::new();
            for spec in &specs {
                let (side_a, side_b) = tokenize_corpus(spec, &corpus)?;
                let needed = spec.vocab_size() + 2;
                let config = bench
                    .config
                    .with_vocab_size(bench.config.vocab_size.max(needed));
                let to_sequences =
                    |results: &[crate::tokenizer::TokenizationResult]| -> Result<Vec<crate::latency::TimedSequence>> {
                        results
                            .iter()
                            .map(|r| {
                                Ok(crate::latency::TimedSequence {
                                    sentence_id: r.sentence_id.clone(),
                                    orthography: r.orthography,
                                    token_ids: crate::report::build_input_ids(
                                        spec,
                                        r,
                                        bench.add_special_tokens,
                                    )?,
                                })
                            })
                            .collect()
                    };
                let run = crate::latency::run_benchmark(
                    &config,
                    &to_sequences(&side_a)?,
                    &to_sequences(&side_b)?,
                    bench.warmup,
                    bench.repeats,
                )?;
                for record in &run.records {
                    body.push_str(&jsonl_line(&Line::Record {
                        model: &spec.name,
                        record,
                    })?);
                    body.push('\n');
                }
                body.push_str(&jsonl_line(&Line::Summary {
                    model: &spec.name,
                    config: &run.config,
                    environment: &run.environment,
                    timer_resolution_seconds: run.timer_resolution_seconds,
                    summary_a: &run.summary_a,
                    summary_b: &run.summary_b,
                })?);
                body.push('\n');
            }
            write_output(&out, &body)
        }

        Command::Convert {
            corpus,
            mapping,
            mapping_back,
            side,
            out,
        } => {
            let corpus = corpus.load()?;
            let forward = load_mapping(&mapping)?;
            let backward = mapping_back.as_ref().map(load_mapping).transpose()?;
            #[derive(Serialize)]
            struct Row<'a> {
                id: &'a str,
                text: String,
            }
            let mut body = String::new();
            for pair in &corpus.pairs {
                let source = pair.text(side);
                let text = match &backward {
                    Some(bwd) => round_trip(&forward, bwd, source),
                    None => apply_mapping(&forward, source),
                };
                body.push_str(&jsonl_line(&Row { id: &pair.id, text })?);
                body.push('\n');
            }
            write_output(&out, &body)
        }

        Command::Cer {
            corpus,
            mapping,
            mapping_back,
            out,
        } => {
            let corpus = corpus.load()?;
            let forward = load_mapping(&mapping)?;
            let backward = load_mapping(&mapping_back)?;
            let reconstructions: std::collections::HashMap<String, String> = corpus
                .pairs
                .iter()
                .map(|p| (p.id.clone(), round_trip(&forward, &backward, &p.text_a)))
                .collect();
            let summary = cer_round_trip(&corpus, &reconstructions)?;
            let mut body = jsonl_line(&summary)?;
            body.push('\n');
            write_output(&out, &body)
        }

        Command::Audit {
            corpus,
            tokenizers,
            scores,
            mask,
            ngram,
            no_bench,
            encoder,
            mapping,
            mapping_back,
            out,
            tabular_out,
            plot_dir,
        } => {
            let corpus = corpus.load()?;
            let specs = load_tokenizers(&tokenizers)?;
            let scorer = match &scores {
                Some(path) => ScorerSource::External(ingest_external_scores(path, &corpus)?),
                None => ScorerSource::BuiltIn {
                    order: ngram.order,
                    smoothing_k: ngram.smoothing_k,
                },
            };
            let converter = match (&mapping, &mapping_back) {
                (Some(fwd), Some(bwd)) => Some(ConverterPair {
                    forward: load_mapping(fwd)?,
                    backward: load_mapping(bwd)?,
                }),
                _ => None,
            };
            let options = AuditOptions {
                mask_seed: mask.seed,
                mask_rate: mask.mask_rate,
                scorer,
                bench: (!no_bench).then(|| encoder.bench_options()),
                converter,
            };
            let outcome = run_audit(&corpus, &specs, &options);
            for failure in &outcome.failures {
                eprintln!(
                    "model {:?} failed: {}",
                    failure.model_name, failure.diagnostic
                );
            }
            if outcome.reports.is_empty() {
                return Err(Error::validation("every model audit failed"));
            }
            let body = structured_report_string(&outcome.reports)?;
            write_output(&out, &body)?;
            if let Some(path) = &tabular_out {
                fs::write(path, tabular_report_string(&outcome.reports)?)?;
            }
            if let Some(dir) = &plot_dir {
                emit_plot_data(&outcome.reports, dir)?;
            }
            Ok(())
        }

        Command::Replay {
            summaries,
            out,
            report_format,
        } => {
            let summaries = load_summaries(&summaries)?;
            let reports = replay_summaries(&summaries)?;
            let body = match report_format {
                ReportFormat::Structured => structured_report_string(&reports)?,
                ReportFormat::Tabular => tabular_report_string(&reports)?,
            };
            write_output(&out, &body)
        }

        Command::PlotData { report, out_dir } => {
            let reports = load_report(&report)?;
            let (fertility_path, points_path) = emit_plot_data(&reports, &out_dir)?;
            println!("{}", fertility_path.display());
            println!("{}", points_path.display());
            Ok(())
        }
    }
}
