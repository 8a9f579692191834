//! Segmentation mechanics of the two tokenizer families.
//!
//! Shows WordPiece greedy longest-match (first piece is the longest vocab
//! prefix, continuations carry the `##` marker, unmatched words collapse to
//! `[UNK]`) and BPE ranked merging (code-point symbols merged lowest rank
//! first), then tokenizes a paired corpus and prints the per-sentence
//! counts both metrics layers consume.
//!
//! Usage:
//! ```bash
//! cargo run --example tokenize_corpus
//! ```

use scripttax::corpus::{parse_corpus, CorpusFormat, CorpusOptions, Orthography};
use scripttax::tokenizer::{
    segment_bpe, segment_wordpiece, tokenize_sentence, TokenizerKind, TokenizerSpec,
    DEFAULT_CONTINUATION_PREFIX, DEFAULT_MAX_WORD_CHARS,
};

fn main() -> scripttax::Result<()> {
    let wordpiece = TokenizerSpec::wordpiece(
        "wordpiece-demo",
        ["[UNK]", "the", "cat", "un", "##believ", "##able"]
            .map(String::from)
            .to_vec(),
        "[UNK]",
    )?;
    println!("== WordPiece greedy longest-match ==");
    for word in ["the", "unbelievable", "xyz"] {
        println!("  {word:>13} -> {:?}", segment_wordpiece(&wordpiece, word));
    }

    let bpe = TokenizerSpec::new(
        "bpe-demo",
        TokenizerKind::Bpe,
        ["l", "o", "w", "e", "r", "lo", "low", "er", "lower", "[UNK]"]
            .map(String::from)
            .to_vec(),
        vec![
            ("l".to_string(), "o".to_string()),
            ("lo".to_string(), "w".to_string()),
            ("e".to_string(), "r".to_string()),
            ("low".to_string(), "er".to_string()),
        ],
        DEFAULT_CONTINUATION_PREFIX,
        "[UNK]",
        DEFAULT_MAX_WORD_CHARS,
    )?;
    println!("\n== BPE lowest-rank-first merging ==");
    for word in ["low", "lower", "owl", "wool"] {
        println!("  {word:>13} -> {:?}", segment_bpe(&bpe, word));
    }

    // A paired corpus: side A whole words, side B unknown to the vocab
    // except through single characters, so it fragments.
    let corpus = parse_corpus(
        "s1\tthe unbelievable cat\t\u{43a}\u{43e}\u{442} \u{434}\u{43e}\u{43c}\n\
         s2\tthe cat\t\u{434}\u{43e}\u{43c} \u{43a}\u{43e}\u{442}\n",
        CorpusFormat::Tsv,
        &CorpusOptions::default(),
    )?;
    let tokens: Vec<String> = ["[UNK]", "the", "cat", "un", "##believ", "##able"]
        .map(String::from)
        .into_iter()
        .chain("\u{43a}\u{43e}\u{442}\u{434}\u{43c}".chars().map(|c| c.to_string()))
        .chain("\u{43a}\u{43e}\u{442}\u{434}\u{43c}".chars().map(|c| format!("##{c}")))
        .collect();
    let paired = TokenizerSpec::wordpiece("paired-demo", tokens, "[UNK]")?;

    println!("\n== Per-sentence results on a paired corpus ==");
    for pair in &corpus.pairs {
        for (side, text) in [(Orthography::A, &pair.text_a), (Orthography::B, &pair.text_b)] {
            let result = tokenize_sentence(&paired, &pair.id, side, text)?;
            println!(
                "  {} [{side}]  L={} W={} C={:2}  F={:.2}  {:?}",
                result.sentence_id,
                result.token_count,
                result.word_count,
                result.char_count,
                result.fertility,
                result.tokens,
            );
        }
    }
    Ok(())
}
