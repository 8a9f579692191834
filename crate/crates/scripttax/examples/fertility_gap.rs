//! Measure the fertility gap between two orthographies.
//!
//! Side A of the corpus is covered by whole-word vocabulary entries, side B
//! only by single characters, so the same tokenizer fragments B much
//! harder. The fertility gap is the mean per-sentence difference in
//! tokens per word.
//!
//! Usage:
//! ```bash
//! cargo run --example fertility_gap
//! ```

use scripttax::corpus::{parse_corpus, CorpusFormat, CorpusOptions};
use scripttax::metrics::{fertility_gap, mean_fertility, quadratic_cost_ratio};
use scripttax::tokenizer::{tokenize_corpus, TokenizerSpec};

fn main() -> scripttax::Result<()> {
    let corpus = parse_corpus(
        "s1\tthe cat sat\t\u{3b6}\u{3b7}\u{3b8} \u{3b9}\u{3ba} \u{3bb}\u{3bc}\u{3b6}\u{3b7}\n\
         s2\tthe cat ran far\t\u{3b8}\u{3b7} \u{3b6}\u{3bb} \u{3b9}\u{3bc}\u{3ba} \u{3b7}\u{3b6}\u{3b8}\u{3b9}\n\
         s3\tthe cat was here\t\u{3ba}\u{3bb} \u{3bc}\u{3b6} \u{3b7}\u{3b8}\u{3b9} \u{3b6}\u{3ba}\n",
        CorpusFormat::Tsv,
        &CorpusOptions::default(),
    )?;

    // Whole words for the latin side, bare characters for the greek side.
    let tokens: Vec<String> = ["[UNK]", "the", "cat", "sat", "ran", "far", "was", "here"]
        .map(String::from)
        .into_iter()
        .chain(('\u{3b6}'..='\u{3bc}').map(|c| c.to_string()))
        .chain(('\u{3b6}'..='\u{3bc}').map(|c| format!("##{c}")))
        .collect();
    let spec = TokenizerSpec::wordpiece("gap-demo", tokens, "[UNK]")?;

    let (side_a, side_b) = tokenize_corpus(&spec, &corpus)?;
    let fertility_a = mean_fertility(&side_a)?;
    let fertility_b = mean_fertility(&side_b)?;
    let delta_f = fertility_gap(&side_a, &side_b)?;

    println!("mean fertility A: {fertility_a:.3} tokens/word");
    println!("mean fertility B: {fertility_b:.3} tokens/word");
    println!("fertility gap dF: {delta_f:+.3} tokens/word");

    // Sequence inflation feeds the quadratic attention-cost model.
    let mean_len_a: f64 =
        side_a.iter().map(|r| r.token_count as f64).sum::<f64>() / side_a.len() as f64;
    let mean_len_b: f64 =
        side_b.iter().map(|r| r.token_count as f64).sum::<f64>() / side_b.len() as f64;
    let predicted = quadratic_cost_ratio(mean_len_a, mean_len_b)?;
    println!(
        "mean token length {mean_len_a:.1} -> {mean_len_b:.1}: \
         predicted attention-cost ratio {predicted:.1}x"
    );
    Ok(())
}
