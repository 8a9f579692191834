//! Audit toolkit for the script tax of subword tokenizers.
//!
//! Given a paired corpus — the same sentences written in two orthographies
//! A and B — the toolkit measures what the tokenizer's segmentation costs
//! the B side along three axes:
//!
//! * **fertility gap** `ΔF`: extra tokens per word (fragmentation),
//! * **latency tax** `ρ`: ratio of median per-sentence inference
//!   latencies on a built-in transformer encoder,
//! * **BPC tax** `δBPC`: relative increase in character-normalized
//!   information cost, which is immune to the per-token-loss artifact that
//!   fragmentation induces.
//!
//! A round-trip conversion check (CER) guards against the paired corpus
//! itself being an artifact of unstable orthography mapping.
//!
//! Segmentation (WordPiece greedy longest-match and ranked-merge BPE),
//! masked scoring (seeded plans plus an n-gram stand-in or externally
//! computed losses), conversion, metrics, benchmarking, and report
//! assembly each live in their own module; [`report::run_audit`] drives
//! the whole pipeline and [`report::replay_summaries`] runs just the
//! delta/ratio layer over pre-aggregated numbers.
//!
//! ```
//! use scripttax::corpus::{parse_corpus, CorpusFormat, CorpusOptions};
//! use scripttax::tokenizer::{tokenize_corpus, TokenizerSpec};
//! use scripttax::metrics::fertility_gap;
//!
//! let corpus = parse_corpus(
//!     "s1\tthe cat\tthe unbelievable\n",
//!     CorpusFormat::Tsv,
//!     &CorpusOptions::default(),
//! )?;
//! let spec = TokenizerSpec::wordpiece(
//!     "demo",
//!     ["[UNK]", "the", "cat", "un", "##believ", "##able"]
//!         .map(String::from)
//!         .to_vec(),
//!     "[UNK]",
//! )?;
//! let (side_a, side_b) = tokenize_corpus(&spec, &corpus)?;
//! assert_eq!(fertility_gap(&side_a, &side_b)?, 1.0);
//! # Ok::<(), scripttax::Error>(())
//! ```

pub mod cli;
pub mod convert;
pub mod corpus;
pub mod error;
pub mod latency;
pub mod metrics;
pub mod report;
pub mod scorer;
pub mod tokenizer;

pub use error::{Error, Result};
